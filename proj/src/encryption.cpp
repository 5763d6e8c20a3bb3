#include "patchcrypt/encryption.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "patchcrypt/keyed_stream.hpp"

namespace patchcrypt {

StepSet StepSet::parse(const std::string& text) {
  StepSet s;
  if (text == "0" || text.empty() || text == "none") return s;
  for (char c : text) {
    switch (c) {
      case '1': s.scramble = true; break;
      case '2': s.orient = true; break;
      case '3': s.negpos = true; break;
      default:
        throw std::invalid_argument("steps: expected digits 1-3, got '" + text + "'");
    }
  }
  return s;
}

std::string StepSet::to_string() const {
  std::string out;
  if (scramble) out += '1';
  if (orient) out += '2';
  if (negpos) out += '3';
  return out.empty() ? "0" : out;
}

void EncryptConfig::validate(int image_width, int image_height) const {
  if (block_width < 1 || block_height < 1) {
    throw std::invalid_argument("block size must be >= 1");
  }
  if (vit_patch_sizes) {
    const bool ok = block_width == block_height &&
                    (block_width == 8 || block_width == 16 || block_width == 32);
    if (!ok) {
      throw std::invalid_argument("block size must be square 8, 16 or 32 in ViT mode");
    }
  }
  if (steps.orient && block_width != block_height) {
    throw std::invalid_argument("rotation step needs square blocks");
  }
  if (block_width > image_width || block_height > image_height) {
    throw std::invalid_argument("block larger than image");
  }
}

std::vector<int> gen_permutation(std::uint64_t k1, int n) {
  if (n < 1) throw std::invalid_argument("gen_permutation: n must be >= 1");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  KeyedStream stream(k1);
  for (int i = n - 1; i >= 1; --i) {
    const auto j = static_cast<int>(stream.uniform(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

std::vector<Orientation> gen_orientations(std::uint64_t k2, int n, bool rotations_only) {
  if (n < 0) throw std::invalid_argument("gen_orientations: n must be >= 0");
  std::vector<Orientation> codes;
  codes.reserve(n);
  KeyedStream stream(k2);
  const std::uint64_t bound = rotations_only ? 4 : 8;
  for (int i = 0; i < n; ++i) codes.emplace_back(static_cast<int>(stream.uniform(bound)));
  return codes;
}

std::vector<std::uint8_t> gen_polarity(std::uint64_t k3, int n) {
  if (n < 0) throw std::invalid_argument("gen_polarity: n must be >= 0");
  std::vector<std::uint8_t> bits(n);
  KeyedStream stream(k3);
  for (auto& b : bits) b = static_cast<std::uint8_t>(stream.uniform(2));
  return bits;
}

Block negpos_transform(const Block& block, bool flip) {
  if (!flip) return block;
  Block out = block;
  for (auto& p : out.samples()) p ^= Image::kMaxSample;
  return out;
}

EncryptionTrace trace_encryption(const KeySet& keys, const EncryptConfig& cfg, int n) {
  EncryptionTrace t;
  if (cfg.steps.scramble) {
    t.source = gen_permutation(keys.k1, n);
  } else {
    t.source.resize(n);
    std::iota(t.source.begin(), t.source.end(), 0);
  }
  if (cfg.steps.orient) {
    t.orientation = gen_orientations(keys.k2, n, cfg.rotations_only);
  } else {
    t.orientation.assign(n, Orientation{});
  }
  if (cfg.steps.negpos) {
    t.polarity = gen_polarity(keys.k3, n);
  } else {
    t.polarity.assign(n, 0);
  }
  return t;
}

Image encrypt(const Image& image, const KeySet& keys, const EncryptConfig& cfg) {
  cfg.validate(image.width(), image.height());
  BlockGrid grid = blockify(image, cfg.block_width, cfg.block_height);
  const EncryptionTrace t = trace_encryption(keys, cfg, grid.size());

  std::vector<Block> out(grid.blocks.size());
  for (int i = 0; i < grid.size(); ++i) {
    out[i] = negpos_transform(apply_orientation(grid.blocks[t.source[i]], t.orientation[i]),
                              t.polarity[i] != 0);
  }
  grid.blocks = std::move(out);
  return deblockify(grid);
}

Image decrypt(const Image& image, const KeySet& keys, const EncryptConfig& cfg) {
  cfg.validate(image.width(), image.height());
  if (image.width() % cfg.block_width != 0 || image.height() % cfg.block_height != 0) {
    throw std::invalid_argument("decrypt: image size is not a multiple of the block size");
  }
  BlockGrid grid = blockify(image, cfg.block_width, cfg.block_height);
  const EncryptionTrace t = trace_encryption(keys, cfg, grid.size());

  std::vector<Block> out(grid.blocks.size());
  for (int i = 0; i < grid.size(); ++i) {
    out[t.source[i]] = apply_orientation(negpos_transform(grid.blocks[i], t.polarity[i] != 0),
                                         t.orientation[i].inverse());
  }
  grid.blocks = std::move(out);
  return deblockify(grid);
}

KeySet parse_keys(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::uint64_t values[3] = {};
  bool seen[3] = {};
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string label, hex;
    if (!(fields >> label)) continue;
    if (!(fields >> hex) || label.size() != 2 || label[0] != 'K' || label[1] < '1' ||
        label[1] > '3') {
      throw std::invalid_argument("key file: bad line '" + line + "'");
    }
    if (hex.rfind("0x", 0) == 0) hex = hex.substr(2);
    if (hex.empty() || hex.size() > 16 ||
        hex.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos) {
      throw std::invalid_argument("key file: '" + hex + "' is not a 64-bit hex value");
    }
    const int idx = label[1] - '1';
    values[idx] = std::stoull(hex, nullptr, 16);
    seen[idx] = true;
  }
  if (!seen[0] || !seen[1] || !seen[2]) {
    throw std::invalid_argument("key file: K1, K2 and K3 are all required");
  }
  return {values[0], values[1], values[2]};
}

std::string format_keys(const KeySet& keys) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "# patchcrypt keys v1\nK1 %016llx\nK2 %016llx\nK3 %016llx\n",
                static_cast<unsigned long long>(keys.k1),
                static_cast<unsigned long long>(keys.k2),
                static_cast<unsigned long long>(keys.k3));
  return buf;
}

KeySet read_key_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open key file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_keys(ss.str());
}

void write_key_file(const std::filesystem::path& path, const KeySet& keys) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write key file " + path.string());
  out << format_keys(keys);
}

KeySet keys_from_seed(std::uint64_t seed) {
  KeyedStream stream(seed);
  KeySet k;
  k.k1 = stream.next();
  k.k2 = stream.next();
  k.k3 = stream.next();
  return k;
}

}  // namespace patchcrypt
