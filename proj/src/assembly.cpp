#include <algorithm>
#include <limits>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "patchcrypt/solver.hpp"

namespace patchcrypt {
namespace {

// Candidates per block side that become merge proposals.
constexpr int kMergeCandidates = 32;

struct Junction {
  double priority;
  double score;
  int a;
  Direction side_a;
  int b;
  Direction side_b;
  std::uint8_t reversed;
  std::uint8_t polarity;
};

bool junction_before(const Junction& x, const Junction& y) {
  if (x.priority != y.priority) return x.priority > y.priority;
  if (x.score != y.score) return x.score < y.score;
  if (x.a != y.a) return x.a < y.a;
  if (x.side_a != y.side_a) return x.side_a < y.side_a;
  if (x.b != y.b) return x.b < y.b;
  if (x.side_b != y.side_b) return x.side_b < y.side_b;
  if (x.reversed != y.reversed) return x.reversed < y.reversed;
  return x.polarity < y.polarity;
}

// Best-to-second ratio of a side's candidate list.
double ratio(std::span<const Candidate> list, double score) {
  if (list.size() < 2) return 1.0;
  const double second = list[1].score;
  if (second > 0.0) return 1.0 - score / second;
  return score == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
}

// A junction is only as certain as the less certain of its two sides.
std::vector<Junction> proposals(const CompatibilityTable& table) {
  std::vector<Junction> out;
  for (int a = 0; a < table.block_count(); ++a) {
    for (int k = 0; k < 4; ++k) {
      const auto side = static_cast<Direction>(k);
      const auto list = table.candidates(a, side);
      const std::size_t take = std::min<std::size_t>(list.size(), kMergeCandidates);
      for (std::size_t i = 0; i < take; ++i) {
        const Candidate& c = list[i];
        const double priority = std::min(ratio(list, c.score),
                                         ratio(table.candidates(c.block, c.side), c.score));
        out.push_back({priority, c.score, a, side, c.block, c.side, c.reversed, c.polarity});
      }
    }
  }
  std::sort(out.begin(), out.end(), junction_before);
  return out;
}

struct Cell {
  int r = 0;
  int c = 0;
};

long long cell_key(int r, int c) {
  return (static_cast<long long>(r) << 32) ^ static_cast<unsigned int>(c);
}

struct Fragment {
  std::vector<int> members;
  std::unordered_map<long long, int> cells;
  int rmin = 0, rmax = 0, cmin = 0, cmax = 0;
};

class Forest {
 public:
  Forest(int n, int rows, int columns)
      : rows_(rows), columns_(columns), owner_(n), pos_(n), orient_(n), pol_(n, 0), frags_(n) {
    for (int i = 0; i < n; ++i) {
      owner_[i] = i;
      frags_[i].members = {i};
      frags_[i].cells.emplace(cell_key(0, 0), i);
    }
  }

  bool fits(int h, int w) const {
    return (h <= rows_ && w <= columns_) || (h <= columns_ && w <= rows_);
  }

  // Glue side `side_a` of a to side `side_b` of b. Moves the smaller
  // fragment into the frame of the larger one.
  bool merge(int a, Direction side_a, int b, Direction side_b, bool reversed, int polarity) {
    if (owner_[a] == owner_[b]) return false;
    if (frags_[owner_[a]].members.size() < frags_[owner_[b]].members.size()) {
      std::swap(a, b);
      std::swap(side_a, side_b);
    }
    Fragment& fa = frags_[owner_[a]];
    Fragment& fb = frags_[owner_[b]];

    const SideRef on_a = face_of(orient_[a], side_a);
    const auto delta = step(on_a.side);
    const Cell target{pos_[a].r + delta[0], pos_[a].c + delta[1]};
    const Orientation ob =
        orientation_showing(opposite(on_a.side), {side_b, on_a.reversed != reversed});
    const auto pb = static_cast<std::uint8_t>(pol_[a] ^ polarity);
    const Orientation g = ob.after(orient_[b].inverse());
    const auto flip = static_cast<std::uint8_t>(pb ^ pol_[b]);

    std::vector<Cell> moved(fb.members.size());
    int rmin = fa.rmin, rmax = fa.rmax, cmin = fa.cmin, cmax = fa.cmax;
    for (std::size_t i = 0; i < fb.members.size(); ++i) {
      const int x = fb.members[i];
      const auto off = g.map_offset(pos_[x].r - pos_[b].r, pos_[x].c - pos_[b].c);
      const Cell np{target.r + off[0], target.c + off[1]};
      if (fa.cells.contains(cell_key(np.r, np.c))) return false;
      moved[i] = np;
      rmin = std::min(rmin, np.r);
      rmax = std::max(rmax, np.r);
      cmin = std::min(cmin, np.c);
      cmax = std::max(cmax, np.c);
    }
    if (!fits(rmax - rmin + 1, cmax - cmin + 1)) return false;

    const int id = owner_[a];
    for (std::size_t i = 0; i < fb.members.size(); ++i) {
      const int x = fb.members[i];
      pos_[x] = moved[i];
      orient_[x] = g.after(orient_[x]);
      pol_[x] ^= flip;
      owner_[x] = id;
      fa.cells.emplace(cell_key(moved[i].r, moved[i].c), x);
      fa.members.push_back(x);
    }
    fa.rmin = rmin;
    fa.rmax = rmax;
    fa.cmin = cmin;
    fa.cmax = cmax;
    fb = Fragment{};
    return true;
  }

  int largest() const {
    int best = 0;
    for (int i = 1; i < static_cast<int>(frags_.size()); ++i) {
      if (frags_[i].members.size() > frags_[best].members.size()) best = i;
    }
    return best;
  }

  // Writes fragment `id` onto the board, choosing between the fragment's own
  // frame and a quarter turn, and the rows x columns window holding the most
  // pieces. Pieces outside the window stay unused.
  void place(int id, Placement& board, std::vector<char>& used) const {
    const Fragment& f = frags_[id];
    struct Choice {
      int count = -1;
      Orientation turn;
      int r0 = 0, c0 = 0;
    } best;
    for (int t = 0; t < 2; ++t) {
      const Orientation turn(t);  // identity or a quarter turn
      std::vector<Cell> cells;
      cells.reserve(f.members.size());
      int rmin = std::numeric_limits<int>::max(), cmin = rmin;
      int rmax = std::numeric_limits<int>::min(), cmax = rmax;
      for (int x : f.members) {
        const auto p = turn.map_offset(pos_[x].r, pos_[x].c);
        cells.push_back({p[0], p[1]});
        rmin = std::min(rmin, p[0]);
        rmax = std::max(rmax, p[0]);
        cmin = std::min(cmin, p[1]);
        cmax = std::max(cmax, p[1]);
      }
      const int r_hi = std::max(rmin, rmax - rows_ + 1);
      const int c_hi = std::max(cmin, cmax - columns_ + 1);
      for (int r0 = rmin; r0 <= r_hi; ++r0) {
        for (int c0 = cmin; c0 <= c_hi; ++c0) {
          int count = 0;
          for (const Cell& p : cells) {
            if (p.r >= r0 && p.r < r0 + rows_ && p.c >= c0 && p.c < c0 + columns_) ++count;
          }
          if (count > best.count) best = {count, turn, r0, c0};
        }
      }
    }
    for (int x : f.members) {
      const auto p = best.turn.map_offset(pos_[x].r, pos_[x].c);
      const int r = p[0] - best.r0;
      const int c = p[1] - best.c0;
      if (r < 0 || r >= rows_ || c < 0 || c >= columns_) continue;
      PlacedCell& cell = board.at(r, c);
      cell.block = x;
      cell.orientation = best.turn.after(orient_[x]);
      cell.polarity = pol_[x];
      used[x] = 1;
    }
  }

 private:
  int rows_;
  int columns_;
  std::vector<int> owner_;
  std::vector<Cell> pos_;
  std::vector<Orientation> orient_;
  std::vector<std::uint8_t> pol_;
  std::vector<Fragment> frags_;
};

// Greedy fill: the empty cell with the most placed neighbors gets the
// unplaced block and state with the lowest summed junction cost.
void fill(const CompatibilityTable& table, Placement& board, std::vector<char>& used) {
  std::vector<PieceState> states;
  for (int code = 0; code < 16; ++code) {
    PieceState s{0, Orientation(code & 7), static_cast<std::uint8_t>(code >> 3)};
    if (allows(table.hypothesis(), s)) states.push_back(s);
  }
  std::vector<int> remaining;
  for (int b = 0; b < static_cast<int>(used.size()); ++b) {
    if (!used[b]) remaining.push_back(b);
  }

  const int rows = board.rows;
  const int columns = board.columns;
  while (!remaining.empty()) {
    int best_cell = -1;
    int best_neighbors = -1;
    for (int i = 0; i < rows * columns; ++i) {
      if (!board.cells[i].empty()) continue;
      const int r = i / columns, c = i % columns;
      int count = 0;
      for (int d = 0; d < 4; ++d) {
        const auto s = step(static_cast<Direction>(d));
        const int nr = r + s[0], nc = c + s[1];
        if (nr >= 0 && nr < rows && nc >= 0 && nc < columns && !board.at(nr, nc).empty()) {
          ++count;
        }
      }
      if (count > best_neighbors) {
        best_neighbors = count;
        best_cell = i;
      }
    }
    const int r = best_cell / columns, c = best_cell % columns;

    struct Neighbor {
      PieceState state;
      Direction towards_cell;
    };
    std::vector<Neighbor> neighbors;
    for (int d = 0; d < 4; ++d) {
      const auto dir = static_cast<Direction>(d);
      const auto s = step(dir);
      const int nr = r + s[0], nc = c + s[1];
      if (nr < 0 || nr >= rows || nc < 0 || nc >= columns) continue;
      const PlacedCell& n = board.at(nr, nc);
      if (n.empty()) continue;
      neighbors.push_back({{n.block, n.orientation, n.polarity}, opposite(dir)});
    }

    double best_cost = std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    PieceState best_state{remaining.front(), {}, 0};
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      for (PieceState s : states) {
        s.block = remaining[i];
        double cost = 0.0;
        for (const Neighbor& n : neighbors) {
          cost += table.model().score(n.state, n.towards_cell, s);
          if (cost >= best_cost) break;
        }
        if (cost < best_cost) {
          best_cost = cost;
          best_index = i;
          best_state = s;
        }
      }
    }
    PlacedCell& cell = board.cells[best_cell];
    cell.block = best_state.block;
    cell.orientation = best_state.orientation;
    cell.polarity = best_state.polarity;
    used[best_state.block] = 1;
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_index));
  }
}

}  // namespace

Placement assemble(const CompatibilityTable& table, int rows, int columns) {
  const int n = table.block_count();
  if (rows < 1 || columns < 1 || rows * columns != n) {
    throw std::invalid_argument("assemble: rows * columns must equal the block count");
  }
  Forest forest(n, rows, columns);
  for (const Junction& j : proposals(table)) {
    forest.merge(j.a, j.side_a, j.b, j.side_b, j.reversed != 0, j.polarity);
  }

  Placement board(rows, columns);
  std::vector<char> used(n, 0);
  forest.place(forest.largest(), board, used);
  fill(table, board, used);
  return board;
}

}  // namespace patchcrypt
