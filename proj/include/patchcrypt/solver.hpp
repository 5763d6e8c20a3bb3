#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "patchcrypt/dihedral.hpp"
#include "patchcrypt/image.hpp"

namespace patchcrypt {

/// Board directions, counterclockwise from "right".
enum class Direction : std::uint8_t { right = 0, up = 1, left = 2, down = 3 };

constexpr Direction opposite(Direction d) {
  return static_cast<Direction>((static_cast<int>(d) + 2) & 3);
}

/// (row, column) step towards `d`.
constexpr std::array<int, 2> step(Direction d) {
  switch (d) {
    case Direction::right: return {0, 1};
    case Direction::up: return {-1, 0};
    case Direction::left: return {0, -1};
    case Direction::down: return {1, 0};
  }
  return {0, 0};
}

/// One side of an untransformed block. Sides are named by the direction
/// they face at orientation 0 and are read top to bottom (left/right sides)
/// or left to right (top/bottom sides). `reversed` means the side shows up
/// read backwards on the face it currently occupies.
struct SideRef {
  Direction side = Direction::right;
  bool reversed = false;

  friend constexpr bool operator==(SideRef, SideRef) = default;
};

/// Which original side of a block faces `face` under `orientation`.
SideRef side_facing(Orientation orientation, Direction face);
/// Which face original side `side` occupies under `orientation`.
SideRef face_of(Orientation orientation, Direction side);
/// The unique orientation that shows `side` on `face` read as requested.
Orientation orientation_showing(Direction face, SideRef side);

/// A block together with the transform applied to it.
struct PieceState {
  int block = 0;
  Orientation orientation;
  std::uint8_t polarity = 0;

  /// orientation + 8 * polarity, in [0, 16).
  int code() const { return orientation.code() + 8 * polarity; }
  friend bool operator==(const PieceState&, const PieceState&) = default;
};

/// The states the attacker considers for every block.
enum class Hypothesis : std::uint8_t {
  positions,              // orientation 0 only
  orientations,           // all 8 dihedral states
  orientations_polarity,  // 8 dihedral states x optional complement
};

int states_per_block(Hypothesis h);
bool allows(Hypothesis h, const PieceState& s);

struct SolverConfig {
  Hypothesis hypothesis = Hypothesis::orientations;
  /// Candidate lists are complete while n * states_per_block stays at or
  /// below this; larger puzzles keep only the `top_k` best per side.
  int dense_state_limit = 4096;
  int top_k = 32;
  int threads = 1;
};

/// One match for a block side: block `block` touching with side `side`,
/// read in the same (`reversed` false) or opposite direction, complemented
/// relative to the first block when `polarity` is 1.
struct Candidate {
  double score = 0.0;
  std::int32_t block = 0;
  Direction side = Direction::right;
  std::uint8_t reversed = 0;
  std::uint8_t polarity = 0;
};

/// Symmetric Mahalanobis gradient compatibility between two block sides.
///
/// Each side carries the mean and regularized inverse covariance of its
/// outward color gradient (edge pixel minus the pixel one step inside).
/// The junction cost sums, over the pixels of the shared edge, the squared
/// Mahalanobis distance of the cross-junction gradient under each side's
/// statistics.
class EdgeModel {
 public:
  /// Covariance regularizer, 1e-6 * (2^L - 1)^2.
  static constexpr double kEpsilon = 1e-6 * 255.0 * 255.0;

  EdgeModel() = default;
  /// Blocks must be square with at least 2 pixels per side.
  explicit EdgeModel(std::span<const Block> blocks);

  int block_count() const { return n_; }
  int block_size() const { return size_; }

  /// Dissimilarity of joining `side_a` of block a to `side_b` of block b,
  /// the two edges read in opposite directions when `reversed` is set and
  /// b complemented relative to a when `polarity` is 1. Depends only on
  /// the unordered junction: swapping a and b gives the identical value.
  double junction(int a, Direction side_a, int b, Direction side_b, bool reversed,
                  int polarity) const;

  /// Cost of putting piece `b` on the `d` side of piece `a`.
  double score(const PieceState& a, Direction d, const PieceState& b) const;

 private:
  struct Side {
    std::vector<double> edge;    // size * 3, canonical order
    std::vector<double> center;  // edge + mean gradient
    std::array<double, 6> inv_cov{};  // xx yy zz xy xz yz
  };
  const Side& side(int block, Direction d, int polarity) const {
    return sides_[(static_cast<std::size_t>(block) * 4 + static_cast<int>(d)) * 2 + polarity];
  }
  double half(const Side& from, const Side& to, bool reversed) const;

  int n_ = 0;
  int size_ = 0;
  std::vector<Side> sides_;
};

/// Pairwise compatibility for every block side, plus the sorted candidate
/// list of each side under the attacker's hypothesis.
class CompatibilityTable {
 public:
  CompatibilityTable(std::span<const Block> blocks, const SolverConfig& cfg);

  const EdgeModel& model() const { return model_; }
  Hypothesis hypothesis() const { return hypothesis_; }
  int block_count() const { return model_.block_count(); }
  int states_per_block() const { return patchcrypt::states_per_block(hypothesis_); }
  bool dense() const { return dense_; }
  int top_k() const { return top_k_; }

  /// Cost of `b` immediately right of `a`. Same-block pairs are rejected.
  double right(const PieceState& a, const PieceState& b) const;
  double score(const PieceState& a, Direction d, const PieceState& b) const;

  /// Candidates for original side `side` of `block` (taken at polarity 0),
  /// best first; ties go to the lowest (block, side, reversed, polarity).
  std::span<const Candidate> candidates(int block, Direction side) const {
    return lists_[static_cast<std::size_t>(block) * 4 + static_cast<int>(side)];
  }

  /// The state of the candidate's block when it sits on face `d` of `a`.
  PieceState candidate_state(const PieceState& a, Direction d, const Candidate& c) const;

  /// 1 - best / second best for what goes on face `d` of `s`; 0 when the
  /// second best is 0 or missing.
  double confidence(const PieceState& s, Direction d) const;

  /// Binary dump: "PCTB", u32 version=1, u32 n, u32 states, u32 k (0 if
  /// dense), u32 score dtype (1 = float64), then for each block and side a
  /// u32 count followed by records {u32 block, u8 side, u8 reversed,
  /// u8 polarity, u8 pad, f64 score}. Little-endian.
  void dump(const std::filesystem::path& path) const;

 private:
  EdgeModel model_;
  Hypothesis hypothesis_;
  bool dense_ = true;
  int top_k_ = 0;
  std::vector<std::vector<Candidate>> lists_;
};

/// Per (state, direction) best-ratio confidence for every allowed state.
/// Index: (block * states_per_block + state index) * 4 + direction, where
/// the state index enumerates allowed states by ascending code.
std::vector<double> best_ratio_confidence(const CompatibilityTable& table);

struct PlacedCell {
  int block = -1;  // -1 when empty
  Orientation orientation;
  std::uint8_t polarity = 0;

  bool empty() const { return block < 0; }
  friend bool operator==(const PlacedCell&, const PlacedCell&) = default;
};

struct Placement {
  int rows = 0;
  int columns = 0;
  std::vector<PlacedCell> cells;  // row-major

  Placement() = default;
  Placement(int r, int c) : rows(r), columns(c), cells(static_cast<std::size_t>(r) * c) {}

  PlacedCell& at(int r, int c) { return cells[static_cast<std::size_t>(r) * columns + c]; }
  const PlacedCell& at(int r, int c) const {
    return cells[static_cast<std::size_t>(r) * columns + c];
  }
  /// Every cell filled and every block used exactly once.
  bool complete() const;
  friend bool operator==(const Placement&, const Placement&) = default;
};

/// Greedy forest merging followed by trim-and-fill.
Placement assemble(const CompatibilityTable& table, int rows, int columns);

/// Sum of all junction costs on the board. Adjacent pairs involving an
/// empty cell are skipped. The terms are summed in ascending order so
/// boards related by a global transform give bit-identical totals.
double total_dissimilarity(const CompatibilityTable& table, const Placement& placement);

/// Draws each placed block in its state; empty cells stay black.
Image render(std::span<const Block> blocks, const Placement& placement, int block_width,
             int block_height);

struct AttackOutput {
  Placement placement;
  Image assembled;
};

/// Ciphertext-only reassembly of an image cut into block_size x block_size
/// pieces.
AttackOutput attack(const Image& encrypted, int block_size, const SolverConfig& cfg);

}  // namespace patchcrypt
