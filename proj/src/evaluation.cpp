#include "patchcrypt/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "patchcrypt/keyed_stream.hpp"

namespace patchcrypt {

GroundTruth GroundTruth::identity(int rows, int columns) {
  GroundTruth t;
  t.rows = rows;
  t.columns = columns;
  t.cell.resize(static_cast<std::size_t>(rows) * columns);
  std::iota(t.cell.begin(), t.cell.end(), 0);
  t.orientation.assign(t.cell.size(), Orientation{});
  t.polarity.assign(t.cell.size(), 0);
  return t;
}

GroundTruth GroundTruth::from_trace(const EncryptionTrace& trace, int rows, int columns) {
  const auto n = static_cast<std::size_t>(rows) * columns;
  if (trace.source.size() != n || trace.orientation.size() != n || trace.polarity.size() != n) {
    throw std::invalid_argument("GroundTruth::from_trace: trace does not match the grid");
  }
  return {rows, columns, trace.source, trace.orientation, trace.polarity};
}

GroundTruth match_ground_truth(const Image& original, const Image& puzzle, int block_size) {
  const BlockGrid orig = blockify(trim_to_blocks(original, block_size, block_size), block_size,
                                  block_size);
  const BlockGrid puz = blockify(puzzle, block_size, block_size);
  if (orig.rows != puz.rows || orig.columns != puz.columns) {
    throw std::invalid_argument("match_ground_truth: original and puzzle grids differ");
  }
  struct Variant {
    int cell;
    Orientation orientation;
    std::uint8_t polarity;
  };
  std::unordered_map<std::uint64_t, std::vector<Variant>> variants;
  std::vector<Block> rendered;
  for (int i = 0; i < orig.size(); ++i) {
    for (int code = 0; code < 16; ++code) {
      const Orientation o(code & 7);
      const auto p = static_cast<std::uint8_t>(code >> 3);
      const Block v = negpos_transform(apply_orientation(orig.blocks[i], o), p != 0);
      variants[content_hash(v.samples())].push_back({i, o, p});
    }
  }

  GroundTruth t;
  t.rows = puz.rows;
  t.columns = puz.columns;
  std::vector<char> taken(orig.size(), 0);
  for (int j = 0; j < puz.size(); ++j) {
    const Block& b = puz.blocks[j];
    const auto it = variants.find(content_hash(b.samples()));
    const Variant* pick = nullptr;
    if (it != variants.end()) {
      for (const Variant& v : it->second) {
        const Block cand =
            negpos_transform(apply_orientation(orig.blocks[v.cell], v.orientation), v.polarity);
        if (cand != b) continue;
        if (!pick) pick = &v;
        if (!taken[v.cell]) {
          pick = &v;
          break;
        }
      }
    }
    if (!pick) {
      throw std::invalid_argument("match_ground_truth: block " + std::to_string(j) +
                                  " does not occur in the original");
    }
    taken[pick->cell] = 1;
    t.cell.push_back(pick->cell);
    t.orientation.push_back(pick->orientation);
    t.polarity.push_back(pick->polarity);
  }
  return t;
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }
  int largest() const { return *std::max_element(size_.begin(), size_.end()); }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
};

}  // namespace

double largest_component(const Placement& placement, const GroundTruth& truth) {
  const int n = truth.size();
  if (n < 1 || placement.rows * placement.columns != n ||
      placement.cells.size() != static_cast<std::size_t>(n) ||
      truth.cell.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("largest_component: placement and ground truth sizes differ");
  }
  DisjointSets sets(n);
  auto net_orientation = [&](const PlacedCell& c) {
    return c.orientation.after(truth.orientation[c.block]);
  };
  auto correct = [&](const PlacedCell& a, const PlacedCell& b, int dr, int dc) {
    if (a.empty() || b.empty()) return false;
    const Orientation na = net_orientation(a);
    if (na != net_orientation(b)) return false;
    if ((a.polarity ^ truth.polarity[a.block]) != (b.polarity ^ truth.polarity[b.block])) {
      return false;
    }
    const int ca = truth.cell[a.block];
    const int cb = truth.cell[b.block];
    const auto moved =
        na.map_offset(cb / truth.columns - ca / truth.columns, cb % truth.columns - ca % truth.columns);
    return moved[0] == dr && moved[1] == dc;
  };
  for (int r = 0; r < placement.rows; ++r) {
    for (int c = 0; c < placement.columns; ++c) {
      const int here = r * placement.columns + c;
      const PlacedCell& a = placement.cells[here];
      if (c + 1 < placement.columns && correct(a, placement.cells[here + 1], 0, 1)) {
        sets.unite(here, here + 1);
      }
      if (r + 1 < placement.rows && correct(a, placement.cells[here + placement.columns], 1, 0)) {
        sets.unite(here, here + placement.columns);
      }
    }
  }
  return static_cast<double>(sets.largest()) / n;
}

Hypothesis hypothesis_for(const StepSet& steps) {
  if (steps.negpos) return Hypothesis::orientations_polarity;
  if (steps.orient) return Hypothesis::orientations;
  return Hypothesis::positions;
}

AttackResult run_trial(const Image& original, const EncryptConfig& cfg, const KeySet& keys,
                       const SolverConfig& solver) {
  const auto start = std::chrono::steady_clock::now();
  const Image encrypted = encrypt(original, keys, cfg);
  const int rows = encrypted.height() / cfg.block_height;
  const int columns = encrypted.width() / cfg.block_width;
  const GroundTruth truth = GroundTruth::from_trace(
      trace_encryption(keys, cfg, rows * columns), rows, columns);

  const AttackOutput out = attack(encrypted, cfg.block_width, solver);
  AttackResult r;
  r.config = cfg;
  r.width = encrypted.width();
  r.height = encrypted.height();
  r.lc = largest_component(out.placement, truth);
  r.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

KeySet derive_trial_keys(std::uint64_t master_seed, int image_index, int trial) {
  const std::uint64_t index =
      (static_cast<std::uint64_t>(static_cast<std::uint32_t>(image_index)) << 32) |
      static_cast<std::uint32_t>(trial);
  return keys_from_seed(KeyedStream::mix(master_seed ^ KeyedStream::mix(index)));
}

ExperimentReport run_experiment(std::span<const NamedImage> corpus,
                                std::span<const ExperimentConfig> configs,
                                const ExperimentOptions& options) {
  if (corpus.empty()) throw std::invalid_argument("run_experiment: empty corpus");
  if (configs.empty()) throw std::invalid_argument("run_experiment: no configurations");
  if (options.keys_per_image < 1) {
    throw std::invalid_argument("run_experiment: keys_per_image must be >= 1");
  }

  ExperimentReport report;
  report.dataset = options.dataset;
  report.master_seed = options.master_seed;
  report.keys_per_image = options.keys_per_image;
  report.configs.assign(configs.begin(), configs.end());
  for (const NamedImage& img : corpus) {
    report.images.push_back(img.name);
    report.image_hashes.push_back(content_hash(img.image.samples()));
  }

  // Resized inputs, one per (image, config); configs sharing a size share
  // the same pixels.
  const std::size_t n_img = corpus.size();
  const std::size_t n_cfg = configs.size();
  std::vector<Image> inputs(n_img * n_cfg);
  for (std::size_t i = 0; i < n_img; ++i) {
    for (std::size_t c = 0; c < n_cfg; ++c) {
      const int size = configs[c].size;
      const Image& src = corpus[i].image;
      bool reused = false;
      for (std::size_t prev = 0; prev < c; ++prev) {
        if (configs[prev].size == size) {
          inputs[i * n_cfg + c] = inputs[i * n_cfg + prev];
          reused = true;
          break;
        }
      }
      if (!reused) inputs[i * n_cfg + c] = size > 0 ? resize_bilinear(src, size, size) : src;
      configs[c].encrypt.validate(inputs[i * n_cfg + c].width(), inputs[i * n_cfg + c].height());
    }
  }

  const std::size_t keys = options.keys_per_image;
  report.trials.resize(n_img * n_cfg * keys);
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= report.trials.size()) return;
      const std::size_t image = idx / (n_cfg * keys);
      const std::size_t cfg = (idx / keys) % n_cfg;
      const int trial = static_cast<int>(idx % keys);
      try {
        SolverConfig solver = options.solver;
        if (!options.fixed_hypothesis) {
          solver.hypothesis = hypothesis_for(configs[cfg].encrypt.steps);
        }
        AttackResult r = run_trial(inputs[image * n_cfg + cfg], configs[cfg].encrypt,
                                   derive_trial_keys(options.master_seed,
                                                     static_cast<int>(image), trial),
                                   solver);
        r.image = corpus[image].name;
        r.trial = trial;
        report.trials[idx] = r;
        if (options.progress) {
          std::lock_guard lock(progress_mutex);
          options.progress(r);
        }
      } catch (...) {
        std::lock_guard lock(progress_mutex);
        if (!failure) failure = std::current_exception();
        next = report.trials.size();
        return;
      }
    }
  };
  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t c = 0; c < n_cfg; ++c) {
    ConfigSummary s;
    s.config = configs[c];
    for (std::size_t i = 0; i < n_img; ++i) {
      double best = 0.0;
      for (std::size_t t = 0; t < keys; ++t) {
        best = std::max(best, report.trials[(i * n_cfg + c) * keys + t].lc);
      }
      s.max_lc.push_back(best);
    }
    double sum = 0.0;
    for (double v : s.max_lc) sum += v;
    s.mean_lc = sum / static_cast<double>(n_img);
    if (n_img > 1) {
      double sq = 0.0;
      for (double v : s.max_lc) sq += (v - s.mean_lc) * (v - s.mean_lc);
      s.stddev_lc = std::sqrt(sq / static_cast<double>(n_img - 1));
    }
    report.summaries.push_back(std::move(s));
  }
  return report;
}

std::uint64_t content_hash(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string report_csv(const ExperimentReport& report) {
  std::string out = "dataset,image,X,Y,B,steps,trial,Lc,max_Lc,mean_Lc\n";
  const std::size_t n_cfg = report.configs.size();
  const std::size_t keys = static_cast<std::size_t>(report.keys_per_image);
  char line[512];
  for (std::size_t idx = 0; idx < report.trials.size(); ++idx) {
    const AttackResult& r = report.trials[idx];
    const std::size_t image = idx / (n_cfg * keys);
    const std::size_t cfg = (idx / keys) % n_cfg;
    const ConfigSummary& s = report.summaries[cfg];
    std::snprintf(line, sizeof line, "%s,%s,%d,%d,%d,%s,%d,%.6f,%.6f,%.6f\n",
                  report.dataset.c_str(), r.image.c_str(), r.width, r.height,
                  r.config.block_width, r.config.steps.to_string().c_str(), r.trial, r.lc,
                  s.max_lc[image], s.mean_lc);
    out += line;
  }
  return out;
}

std::string report_manifest(const ExperimentReport& report) {
  using nlohmann::json;
  char hex[32];
  json corpus = json::array();
  for (std::size_t i = 0; i < report.images.size(); ++i) {
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(report.image_hashes[i]));
    corpus.push_back({{"name", report.images[i]}, {"fnv1a64", hex}});
  }
  json summaries = json::array();
  for (const ConfigSummary& s : report.summaries) {
    summaries.push_back({{"size", s.config.size},
                         {"block", s.config.encrypt.block_width},
                         {"steps", s.config.encrypt.steps.to_string()},
                         {"max_lc", s.max_lc},
                         {"mean_lc", s.mean_lc},
                         {"stddev_lc", s.stddev_lc}});
  }
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(report.master_seed));
  json m = {{"format", "patchcrypt-experiment"},
            {"version", 1},
            {"dataset", report.dataset},
            {"master_seed", hex},
            {"keys_per_image", report.keys_per_image},
            {"key_derivation", "splitmix64(mix(master ^ mix(image << 32 | trial)))"},
            {"corpus", corpus},
            {"summaries", summaries}};
  return m.dump(2) + "\n";
}

}  // namespace patchcrypt
