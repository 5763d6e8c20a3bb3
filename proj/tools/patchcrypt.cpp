// patchcrypt command-line front end.
//
// Data goes to files, key=value summaries to stdout, progress and errors to
// stderr. Exit status: 0 success, 1 runtime error, 2 usage error.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "patchcrypt/encryption.hpp"
#include "patchcrypt/evaluation.hpp"
#include "patchcrypt/image_io.hpp"
#include "patchcrypt/solver.hpp"

namespace fs = std::filesystem;
using namespace patchcrypt;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr long long kDefaultMaxStates = 2304LL * 16;

struct Common {
  int block_size = 16;
  std::string steps = "123";
  std::string key_file;
  std::optional<std::uint64_t> seed;
  int size = 0;
  std::string out_dir;
  bool unchecked = false;
  bool rotations_only = false;
};

struct AttackOptions {
  std::string hypothesis;
  int jobs = 1;
  long long max_states = kDefaultMaxStates;
  std::string original;
  std::string dump_table;
};

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_seed(const std::string& text) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(text, &used, 0);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw UsageError("invalid seed '" + text + "'");
  return v;
}

fs::path out_dir(const Common& c) {
  if (!c.out_dir.empty()) return c.out_dir;
  if (const char* env = std::getenv("PATCHCRYPT_OUT_DIR"); env && *env) return env;
  return ".";
}

StepSet parse_steps(const Common& c) {
  static const std::vector<std::string> paper{"0", "1", "12", "123"};
  if (!c.unchecked && std::find(paper.begin(), paper.end(), c.steps) == paper.end()) {
    throw UsageError("--steps must be one of 0, 1, 12, 123 (use --unchecked for others)");
  }
  try {
    return StepSet::parse(c.steps);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void check_block_size(int b, bool unchecked) {
  if (b < 1) throw UsageError("block size must be positive");
  if (!unchecked && b != 8 && b != 16 && b != 32) {
    throw UsageError("block size must be 8, 16 or 32 (use --unchecked for others)");
  }
}

void check_size(int size, bool unchecked) {
  if (size < 0) throw UsageError("--size must be positive");
  if (size != 0 && !unchecked && size != 224 && size != 384) {
    throw UsageError("--size must be 224 or 384 (use --unchecked for others)");
  }
}

EncryptConfig encrypt_config(const Common& c) {
  check_block_size(c.block_size, c.unchecked);
  check_size(c.size, c.unchecked);
  EncryptConfig cfg;
  cfg.block_width = cfg.block_height = c.block_size;
  cfg.steps = parse_steps(c);
  cfg.rotations_only = c.rotations_only;
  cfg.vit_patch_sizes = !c.unchecked;
  return cfg;
}

Image load(const fs::path& path, int size) {
  Image img = read_image(path);
  return size > 0 ? resize_bilinear(img, size, size) : img;
}

// Keys from --key-file, else from --seed, else from a fresh seed that is
// printed so the run can be repeated.
KeySet resolve_keys(const Common& c, bool* from_file) {
  if (!c.key_file.empty() && c.seed) throw UsageError("--key-file and --seed are exclusive");
  *from_file = !c.key_file.empty();
  if (*from_file) return read_key_file(c.key_file);
  std::uint64_t seed = 0;
  if (c.seed) {
    seed = *c.seed;
  } else {
    std::random_device rd;
    seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    std::cout << "seed=0x" << hex64(seed) << "\n";
  }
  return keys_from_seed(seed);
}

Hypothesis parse_hypothesis(const std::string& name, const StepSet& steps) {
  if (name.empty()) return hypothesis_for(steps);
  if (name == "positions") return Hypothesis::positions;
  if (name == "orientations") return Hypothesis::orientations;
  if (name == "polarity") return Hypothesis::orientations_polarity;
  throw UsageError("--hypothesis must be positions, orientations or polarity");
}

void guard_states(long long blocks, Hypothesis h, long long max_states) {
  const long long states = blocks * states_per_block(h);
  if (max_states > 0 && states > max_states) {
    throw UsageError(std::to_string(states) + " block states exceed --max-states " +
                     std::to_string(max_states));
  }
}

fs::path output_for(const fs::path& dir, const fs::path& input, const std::string& tag) {
  return dir / (input.stem().string() + "." + tag + ".png");
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-b,--block-size", c.block_size, "Block size in pixels (8, 16, 32)")
      ->capture_default_str();
  cmd->add_option("--steps", c.steps, "Encryption steps: 0, 1, 12 or 123")->capture_default_str();
  cmd->add_option("-o,--out-dir", c.out_dir,
                  "Output directory (default: $PATCHCRYPT_OUT_DIR or .)");
  cmd->add_flag("--unchecked", c.unchecked, "Allow block sizes, sizes and steps off the grid");
}

void add_keys(CLI::App* cmd, Common& c) {
  cmd->add_option("-k,--key-file", c.key_file, "Key file to read");
  cmd->add_option_function<std::string>(
      "--seed", [&c](const std::string& s) { c.seed = parse_seed(s); },
      "Derive keys from this 64-bit seed");
  cmd->add_flag("--rotations-only", c.rotations_only, "Restrict step 2 to the four rotations");
}

// ---------------------------------------------------------------------------

int cmd_encrypt(const Common& c, const std::vector<std::string>& inputs) {
  const EncryptConfig cfg = encrypt_config(c);
  bool from_file = false;
  const KeySet keys = resolve_keys(c, &from_file);
  const fs::path dir = out_dir(c);
  fs::create_directories(dir);
  for (const auto& in : inputs) {
    const Image img = load(in, c.size);
    const Image cipher = encrypt(img, keys, cfg);
    const fs::path out = output_for(dir, in, "enc");
    write_image(out, cipher);
    std::cout << "input=" << in << " output=" << out.string() << " n="
              << block_count(img.width(), img.height(), cfg.block_width, cfg.block_height)
              << "\n";
  }
  if (!from_file) {
    const fs::path key_out = dir / "keys.txt";
    write_key_file(key_out, keys);
    std::cout << "keys=" << key_out.string() << "\n";
  }
  return 0;
}

int cmd_decrypt(const Common& c, const std::vector<std::string>& inputs) {
  if (c.key_file.empty() && !c.seed) throw UsageError("decrypt needs --key-file or --seed");
  const EncryptConfig cfg = encrypt_config(c);
  bool from_file = false;
  const KeySet keys = resolve_keys(c, &from_file);
  const fs::path dir = out_dir(c);
  fs::create_directories(dir);
  for (const auto& in : inputs) {
    const Image plain = decrypt(read_image(in), keys, cfg);
    const fs::path out = output_for(dir, in, "dec");
    write_image(out, plain);
    std::cout << "input=" << in << " output=" << out.string() << "\n";
  }
  return 0;
}

int cmd_attack(const Common& c, const AttackOptions& a, const std::string& input) {
  check_block_size(c.block_size, c.unchecked);
  check_size(c.size, c.unchecked);
  const StepSet steps = parse_steps(c);
  const Image cipher = read_image(input);
  const int b = c.block_size;
  if (cipher.width() % b != 0 || cipher.height() % b != 0) {
    throw std::runtime_error("image size " + std::to_string(cipher.width()) + "x" +
                             std::to_string(cipher.height()) +
                             " is not a multiple of the block size " + std::to_string(b));
  }
  SolverConfig solver;
  solver.hypothesis = parse_hypothesis(a.hypothesis, steps);
  solver.threads = std::max(1, a.jobs);
  const BlockGrid grid = blockify(cipher, b, b);
  guard_states(grid.size(), solver.hypothesis, a.max_states);

  const auto start = std::chrono::steady_clock::now();
  Placement placement(1, 1);
  placement.at(0, 0).block = 0;
  if (grid.size() > 1) {
    const CompatibilityTable table(grid.blocks, solver);
    if (!a.dump_table.empty()) table.dump(a.dump_table);
    placement = assemble(table, grid.rows, grid.columns);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path dir = out_dir(c);
  fs::create_directories(dir);
  const fs::path out = output_for(dir, input, "attack");
  write_image(out, render(grid.blocks, placement, b, b));
  std::cout << "output=" << out.string() << " n=" << grid.size() << "\n";
  std::cerr << "solved in " << seconds << " s\n";

  if (!a.original.empty()) {
    Image original = load(a.original, c.size);
    original = trim_to_blocks(original, b, b);
    if (original.width() != cipher.width() || original.height() != cipher.height()) {
      throw std::runtime_error("original and encrypted image sizes differ");
    }
    GroundTruth truth;
    if (!c.key_file.empty() || c.seed) {
      EncryptConfig cfg = encrypt_config(c);
      bool from_file = false;
      const KeySet keys = resolve_keys(c, &from_file);
      truth = GroundTruth::from_trace(trace_encryption(keys, cfg, grid.size()), grid.rows,
                                      grid.columns);
    } else {
      truth = match_ground_truth(original, cipher, b);
    }
    char lc[32];
    std::snprintf(lc, sizeof lc, "%.6f", largest_component(placement, truth));
    std::cout << "Lc=" << lc << "\n";
  }
  return 0;
}

int cmd_evaluate(const Common& c, const AttackOptions& a, const std::string& input) {
  const EncryptConfig cfg = encrypt_config(c);
  bool from_file = false;
  const KeySet keys = resolve_keys(c, &from_file);
  const Image img = load(input, c.size);
  SolverConfig solver;
  solver.hypothesis = parse_hypothesis(a.hypothesis, cfg.steps);
  solver.threads = std::max(1, a.jobs);
  guard_states(static_cast<long long>(block_count(img.width(), img.height(), cfg.block_width,
                                                  cfg.block_height)),
               solver.hypothesis, a.max_states);
  const AttackResult r = run_trial(img, cfg, keys, solver);
  char line[160];
  std::snprintf(line, sizeof line, "X=%d Y=%d B=%d steps=%s Lc=%.6f seconds=%.3f", r.width,
                r.height, cfg.block_width, cfg.steps.to_string().c_str(), r.lc, r.seconds);
  std::cout << line << "\n";
  return 0;
}

struct ExperimentArgs {
  std::string corpus;
  std::string dataset;
  std::vector<int> sizes{224, 384};
  std::vector<int> blocks{8, 16, 32};
  std::vector<std::string> steps{"1", "12", "123"};
  int keys = 5;
  int images = 5;
  std::string seed = "0";
  std::string name = "experiment";
};

std::vector<NamedImage> load_corpus(const fs::path& dir, int limit) {
  if (!fs::is_directory(dir)) throw std::runtime_error("corpus " + dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png" || ext == ".ppm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (limit > 0 && static_cast<int>(files.size()) > limit) files.resize(limit);
  std::vector<NamedImage> out;
  for (const auto& f : files) out.push_back({f.stem().string(), read_image(f)});
  return out;
}

int cmd_experiment(const Common& c, const AttackOptions& a, const ExperimentArgs& e) {
  std::vector<ExperimentConfig> grid;
  for (int size : e.sizes) {
    if (size < 1) throw UsageError("--sizes must be positive");
    check_size(size, c.unchecked);
    for (int b : e.blocks) {
      check_block_size(b, c.unchecked);
      for (const auto& s : e.steps) {
        Common one = c;
        one.block_size = b;
        one.steps = s;
        ExperimentConfig cfg;
        cfg.size = size;
        cfg.encrypt = encrypt_config(one);
        guard_states(static_cast<long long>(block_count(size, size, b, b)),
                     hypothesis_for(cfg.encrypt.steps), a.max_states);
        grid.push_back(cfg);
      }
    }
  }
  if (e.keys < 1) throw UsageError("--keys must be >= 1");
  const std::vector<NamedImage> corpus = load_corpus(e.corpus, e.images);
  if (corpus.empty()) throw std::runtime_error("corpus " + e.corpus + " holds no PNG/PPM images");

  ExperimentOptions opt;
  opt.dataset = e.dataset.empty() ? fs::path(e.corpus).filename().string() : e.dataset;
  if (opt.dataset.empty()) opt.dataset = "corpus";
  opt.master_seed = parse_seed(e.seed);
  opt.keys_per_image = e.keys;
  opt.jobs = std::max(1, a.jobs);
  const std::size_t total = corpus.size() * grid.size() * static_cast<std::size_t>(e.keys);
  std::size_t done = 0;
  opt.progress = [&](const AttackResult& r) {
    ++done;
    char line[200];
    std::snprintf(line, sizeof line, "[%zu/%zu] %s %dx%d B=%d steps=%s trial=%d Lc=%.4f (%.2f s)",
                  done, total, r.image.c_str(), r.width, r.height, r.config.block_width,
                  r.config.steps.to_string().c_str(), r.trial, r.lc, r.seconds);
    std::cerr << line << std::endl;
  };
  const ExperimentReport report = run_experiment(corpus, grid, opt);

  const fs::path dir = out_dir(c);
  fs::create_directories(dir);
  const fs::path csv = dir / (e.name + ".csv");
  const fs::path json = dir / (e.name + ".json");
  std::ofstream(csv, std::ios::binary) << report_csv(report);
  std::ofstream(json, std::ios::binary) << report_manifest(report);
  if (!fs::exists(csv) || !fs::exists(json)) throw std::runtime_error("cannot write reports to " + dir.string());
  for (const auto& s : report.summaries) {
    char line[160];
    std::snprintf(line, sizeof line, "size=%d B=%d steps=%s mean_Lc=%.6f stddev_Lc=%.6f",
                  s.config.size, s.config.encrypt.block_width,
                  s.config.encrypt.steps.to_string().c_str(), s.mean_lc, s.stddev_lc);
    std::cout << line << "\n";
  }
  std::cout << "csv=" << csv.string() << " json=" << json.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-based image encryption and jigsaw puzzle solver attack"};
  app.require_subcommand(1);
  Common common;
  AttackOptions attack_opts;
  ExperimentArgs exp;
  std::vector<std::string> inputs;
  std::string input;

  auto* enc = app.add_subcommand("encrypt", "Encrypt images block by block");
  add_common(enc, common);
  add_keys(enc, common);
  enc->add_option("--size", common.size, "Resize to size x size first (224 or 384)");
  enc->add_option("inputs", inputs, "Input images (PNG or PPM)")->required();

  auto* dec = app.add_subcommand("decrypt", "Invert the encryption with known keys");
  add_common(dec, common);
  add_keys(dec, common);
  dec->add_option("inputs", inputs, "Encrypted images")->required();

  auto add_solver = [&](CLI::App* cmd) {
    cmd->add_option("--hypothesis", attack_opts.hypothesis,
                    "positions, orientations or polarity (default: from --steps)");
    cmd->add_option("-j,--jobs", attack_opts.jobs, "Worker threads")->capture_default_str();
    cmd->add_option("--max-states", attack_opts.max_states,
                    "Refuse puzzles with more block states (0 disables)")
        ->capture_default_str();
  };

  auto* att = app.add_subcommand("attack", "Reassemble an encrypted image without the keys");
  add_common(att, common);
  add_keys(att, common);
  add_solver(att);
  att->add_option("--original", attack_opts.original, "Plain image, to report Lc");
  att->add_option("--size", common.size, "Resize the original to size x size first");
  att->add_option("--dump-table", attack_opts.dump_table, "Write the compatibility table");
  att->add_option("input", input, "Encrypted image")->required();

  auto* ev = app.add_subcommand("evaluate", "Encrypt, attack and score one image");
  add_common(ev, common);
  add_keys(ev, common);
  add_solver(ev);
  ev->add_option("--size", common.size, "Resize to size x size first (224 or 384)");
  ev->add_option("input", input, "Plain image")->required();

  auto* ex = app.add_subcommand("experiment", "Run the evaluation grid over a corpus");
  ex->add_option("-o,--out-dir", common.out_dir,
                 "Output directory (default: $PATCHCRYPT_OUT_DIR or .)");
  ex->add_flag("--unchecked", common.unchecked, "Allow sizes, block sizes and steps off the grid");
  add_solver(ex);
  ex->add_option("--corpus", exp.corpus, "Directory of PNG/PPM images")->required();
  ex->add_option("--dataset", exp.dataset, "Dataset label (default: directory name)");
  ex->add_option("--sizes", exp.sizes, "Resize targets")->delimiter(',')->capture_default_str();
  ex->add_option("--block-sizes", exp.blocks, "Block sizes")->delimiter(',')->capture_default_str();
  ex->add_option("--steps", exp.steps, "Step sets")->delimiter(',')->capture_default_str();
  ex->add_option("--keys", exp.keys, "Keys per image")->capture_default_str();
  ex->add_option("--images", exp.images, "Use the first N images by name (0 = all)")
      ->capture_default_str();
  ex->add_option("--seed", exp.seed, "Master seed")->capture_default_str();
  ex->add_option("--name", exp.name, "Report file name stem")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "patchcrypt: usage error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "patchcrypt: usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*enc) return cmd_encrypt(common, inputs);
    if (*dec) return cmd_decrypt(common, inputs);
    if (*att) return cmd_attack(common, attack_opts, input);
    if (*ev) return cmd_evaluate(common, attack_opts, input);
    if (*ex) return cmd_experiment(common, attack_opts, exp);
  } catch (const UsageError& e) {
    std::cerr << "patchcrypt: usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "patchcrypt: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
