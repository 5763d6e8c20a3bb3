#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "patchcrypt/dihedral.hpp"
#include "patchcrypt/image.hpp"

namespace patchcrypt {

/// Three independent 64-bit seeds, one per encryption step. Each key drives
/// all three color channels identically.
struct KeySet {
  std::uint64_t k1 = 0;  // block permutation
  std::uint64_t k2 = 0;  // rotation / inversion
  std::uint64_t k3 = 0;  // negative-positive

  friend bool operator==(const KeySet&, const KeySet&) = default;
};

/// Subset of the three encryption steps. They always run in the order
/// scramble, orient, negpos.
struct StepSet {
  bool scramble = false;
  bool orient = false;
  bool negpos = false;

  static StepSet none() { return {}; }
  static StepSet all() { return {true, true, true}; }
  /// Parses "", "0", "1", "12", "123", "23", ... (digits name the steps).
  static StepSet parse(const std::string& text);
  /// Inverse of parse; the empty set prints as "0".
  std::string to_string() const;

  friend bool operator==(const StepSet&, const StepSet&) = default;
};

struct EncryptConfig {
  int block_width = 16;
  int block_height = 16;
  StepSet steps = StepSet::all();
  /// Restrict step 2 to the four rotations (no mirroring).
  bool rotations_only = false;
  /// Require square blocks of 8, 16 or 32 pixels (the ViT patch sizes).
  bool vit_patch_sizes = true;

  /// Throws std::invalid_argument when the configuration cannot be applied
  /// to an image of the given size.
  void validate(int image_width, int image_height) const;
};

/// Fisher-Yates over [0, n): i runs from n-1 down to 1 and swaps with
/// j = uniform(i + 1). Result p means "cell i receives original block p[i]".
std::vector<int> gen_permutation(std::uint64_t k1, int n);
std::vector<Orientation> gen_orientations(std::uint64_t k2, int n,
                                          bool rotations_only = false);
std::vector<std::uint8_t> gen_polarity(std::uint64_t k3, int n);

/// p -> p XOR (2^L - 1) on every sample when `flip` is set.
Block negpos_transform(const Block& block, bool flip);

/// Everything the keys decided for one encryption, indexed by encrypted
/// cell: which original block landed there and what was applied to it.
struct EncryptionTrace {
  std::vector<int> source;
  std::vector<Orientation> orientation;
  std::vector<std::uint8_t> polarity;
};

EncryptionTrace trace_encryption(const KeySet& keys, const EncryptConfig& cfg, int n);

/// Output size is the input trimmed to whole blocks.
Image encrypt(const Image& image, const KeySet& keys, const EncryptConfig& cfg);
/// Exact inverse of encrypt for the same keys and config.
Image decrypt(const Image& image, const KeySet& keys, const EncryptConfig& cfg);

/// Key files are text, one "K<i> <16 hex digits>" line per key; '#' starts a
/// comment.
KeySet read_key_file(const std::filesystem::path& path);
void write_key_file(const std::filesystem::path& path, const KeySet& keys);
KeySet parse_keys(const std::string& text);
std::string format_keys(const KeySet& keys);

/// Three keys drawn from KeyedStream(seed).
KeySet keys_from_seed(std::uint64_t seed);

}  // namespace patchcrypt
