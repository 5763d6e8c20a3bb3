#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "patchcrypt/encryption.hpp"
#include "patchcrypt/image.hpp"
#include "patchcrypt/solver.hpp"

namespace patchcrypt {

/// Where every puzzle block really belongs. For block i: its cell in the
/// original grid (row-major index) and the orientation and polarity that
/// were applied to the original block to produce it. An unencrypted puzzle
/// has cell i, orientation 0 and polarity 0 everywhere.
struct GroundTruth {
  int rows = 0;
  int columns = 0;
  std::vector<int> cell;
  std::vector<Orientation> orientation;
  std::vector<std::uint8_t> polarity;

  static GroundTruth identity(int rows, int columns);
  static GroundTruth from_trace(const EncryptionTrace& trace, int rows, int columns);
  int size() const { return rows * columns; }
};

/// Recovers the ground truth of `puzzle` by matching each of its blocks
/// against the blocks of `original` under all 16 states. Identical blocks
/// are assigned in ascending cell order. Throws when some block has no
/// exact match.
GroundTruth match_ground_truth(const Image& original, const Image& puzzle, int block_size);

/// Largest component: the share of blocks in the biggest group joined by
/// correct adjacencies. Two neighboring blocks are correctly joined when
/// their relative position and relative orientation match the original
/// image and they carry the same net polarity. The board may be an
/// arbitrary global dihedral transform of the original.
double largest_component(const Placement& placement, const GroundTruth& truth);

/// The smallest hypothesis that covers the applied steps.
Hypothesis hypothesis_for(const StepSet& steps);

struct AttackResult {
  std::string image;
  EncryptConfig config;
  int width = 0;
  int height = 0;
  int trial = 0;
  double lc = 0.0;
  double seconds = 0.0;
};

AttackResult run_trial(const Image& original, const EncryptConfig& cfg, const KeySet& keys,
                       const SolverConfig& solver);

/// Keys for trial `trial` of image `image_index`: three outputs of
/// KeyedStream(mix(master ^ mix(image_index << 32 | trial))), where mix is
/// the SplitMix64 finalizer. Independent of the experiment configuration, so
/// every configuration sees the same five key sets per image.
KeySet derive_trial_keys(std::uint64_t master_seed, int image_index, int trial);

struct NamedImage {
  std::string name;
  Image image;
};

/// One cell of the experiment grid. A non-zero `size` resizes the image to
/// size x size (bilinear) before encryption.
struct ExperimentConfig {
  int size = 0;
  EncryptConfig encrypt;
};

struct ConfigSummary {
  ExperimentConfig config;
  std::vector<double> max_lc;  // per image, best of its trials
  double mean_lc = 0.0;
  double stddev_lc = 0.0;      // sample standard deviation, 0 for one image
};

struct ExperimentReport {
  std::string dataset;
  std::uint64_t master_seed = 0;
  int keys_per_image = 0;
  std::vector<std::string> images;
  std::vector<std::uint64_t> image_hashes;
  std::vector<ExperimentConfig> configs;
  std::vector<AttackResult> trials;  // ordered by (image, config, trial)
  std::vector<ConfigSummary> summaries;
};

struct ExperimentOptions {
  std::string dataset = "corpus";
  std::uint64_t master_seed = 0;
  int keys_per_image = 5;
  int jobs = 1;
  /// Solver settings; the hypothesis is replaced per configuration by
  /// hypothesis_for(steps) unless `fixed_hypothesis` is set.
  SolverConfig solver;
  bool fixed_hypothesis = false;
  /// Called once per finished trial, serialized.
  std::function<void(const AttackResult&)> progress;
};

/// For every image and configuration: `keys_per_image` trials with derived
/// keys, the maximum Lc over those trials per image, then the mean over
/// images.
ExperimentReport run_experiment(std::span<const NamedImage> corpus,
                                std::span<const ExperimentConfig> configs,
                                const ExperimentOptions& options);

/// FNV-1a 64.
std::uint64_t content_hash(std::span<const std::uint8_t> bytes);

/// One row per trial: dataset,image,X,Y,B,steps,trial,Lc,max_Lc,mean_Lc.
std::string report_csv(const ExperimentReport& report);
/// Seeds, configuration grid, corpus manifest and summaries as JSON.
std::string report_manifest(const ExperimentReport& report);

}  // namespace patchcrypt
