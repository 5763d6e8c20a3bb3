#!/usr/bin/env python3
"""Export the bundled natural-photo corpus used by the experiment tests.

Sources are sample images shipped with scikit-image and scikit-learn.
Each photo is center-cropped to a square and resampled to 512x512 with
Lanczos filtering (similar in scale to the ImageNet originals the
experiments were designed around); one extra 128x128 copy of `coffee`
serves as the small regression photo.
"""
import pathlib

import numpy as np
from PIL import Image
from skimage import data as skdata
from sklearn.datasets import load_sample_image

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "corpus"


def square(img: np.ndarray, size: int) -> Image.Image:
    h, w = img.shape[:2]
    s = min(h, w)
    top, left = (h - s) // 2, (w - s) // 2
    crop = Image.fromarray(img[top:top + s, left:left + s, :3])
    return crop.resize((size, size), Image.LANCZOS)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    photos = {
        "astronaut": skdata.astronaut(),
        "coffee": skdata.coffee(),
        "chelsea": skdata.chelsea(),
        "rocket": skdata.rocket(),
        "china": load_sample_image("china.jpg"),
        "flower": load_sample_image("flower.jpg"),
    }
    for name, img in photos.items():
        square(img, 512).save(OUT / f"{name}.png", optimize=True)
    square(photos["coffee"], 128).save(OUT.parent / "coffee_128.png", optimize=True)


if __name__ == "__main__":
    main()
