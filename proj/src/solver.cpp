#include "patchcrypt/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "patchcrypt/encryption.hpp"

namespace patchcrypt {
namespace {

constexpr int kProbe = 4;  // block size used to derive the side tables

// Canonical pixel positions (row, col) of side `d` in a size x size block.
std::array<int, 2> side_pixel(Direction d, int i, int size) {
  switch (d) {
    case Direction::right: return {i, size - 1};
    case Direction::up: return {0, i};
    case Direction::left: return {i, 0};
    case Direction::down: return {size - 1, i};
  }
  return {0, 0};
}

std::array<int, 2> inner_pixel(Direction d, int i, int size) {
  switch (d) {
    case Direction::right: return {i, size - 2};
    case Direction::up: return {1, i};
    case Direction::left: return {i, 1};
    case Direction::down: return {size - 2, i};
  }
  return {0, 0};
}

struct Geometry {
  SideRef facing[8][4];
  SideRef face[8][4];
  Orientation showing[4][4][2];

  Geometry() {
    for (int o = 0; o < 8; ++o) {
      const Orientation orient(o);
      for (int k = 0; k < 4; ++k) {
        const auto side = static_cast<Direction>(k);
        std::array<std::array<int, 2>, kProbe> mapped{};
        for (int i = 0; i < kProbe; ++i) {
          const auto [r, c] = side_pixel(side, i, kProbe);
          mapped[i] = orient.map_point(r, c, kProbe, kProbe);
        }
        Direction where = Direction::right;
        for (int f = 0; f < 4; ++f) {
          const auto cand = static_cast<Direction>(f);
          bool all = true;
          for (int i = 0; i < kProbe; ++i) {
            const auto expect = side_pixel(cand, 0, kProbe);
            const bool vertical = cand == Direction::right || cand == Direction::left;
            if (vertical ? mapped[i][1] != expect[1] : mapped[i][0] != expect[0]) all = false;
          }
          if (all) where = cand;
        }
        const bool vertical = where == Direction::right || where == Direction::left;
        const int first = vertical ? mapped[0][0] : mapped[0][1];
        const int last = vertical ? mapped[kProbe - 1][0] : mapped[kProbe - 1][1];
        const bool reversed = last < first;
        face[o][k] = {where, reversed};
        facing[o][static_cast<int>(where)] = {side, reversed};
        showing[static_cast<int>(where)][k][reversed ? 1 : 0] = orient;
      }
    }
  }
};

const Geometry& geometry() {
  static const Geometry g;
  return g;
}

bool candidate_less(const Candidate& x, const Candidate& y) {
  if (x.score != y.score) return x.score < y.score;
  if (x.block != y.block) return x.block < y.block;
  if (x.side != y.side) return x.side < y.side;
  if (x.reversed != y.reversed) return x.reversed < y.reversed;
  return x.polarity < y.polarity;
}

std::array<double, 6> invert_symmetric(const std::array<double, 6>& m) {
  // m = xx yy zz xy xz yz
  const double a = m[0], d = m[1], f = m[2], b = m[3], c = m[4], e = m[5];
  const double c00 = d * f - e * e;
  const double c01 = c * e - b * f;
  const double c02 = b * e - c * d;
  const double det = a * c00 + b * c01 + c * c02;
  const double s = 1.0 / det;
  return {c00 * s, (a * f - c * c) * s, (a * d - b * b) * s,
          c01 * s, c02 * s,             (b * c - a * e) * s};
}

}  // namespace

SideRef side_facing(Orientation orientation, Direction face) {
  return geometry().facing[orientation.code()][static_cast<int>(face)];
}

SideRef face_of(Orientation orientation, Direction side) {
  return geometry().face[orientation.code()][static_cast<int>(side)];
}

Orientation orientation_showing(Direction face, SideRef side) {
  return geometry()
      .showing[static_cast<int>(face)][static_cast<int>(side.side)][side.reversed ? 1 : 0];
}

int states_per_block(Hypothesis h) {
  switch (h) {
    case Hypothesis::positions: return 1;
    case Hypothesis::orientations: return 8;
    case Hypothesis::orientations_polarity: return 16;
  }
  return 1;
}

bool allows(Hypothesis h, const PieceState& s) {
  switch (h) {
    case Hypothesis::positions: return s.orientation.code() == 0 && s.polarity == 0;
    case Hypothesis::orientations: return s.polarity == 0;
    case Hypothesis::orientations_polarity: return true;
  }
  return false;
}

namespace {

std::vector<PieceState> allowed_states(Hypothesis h) {
  std::vector<PieceState> out;
  for (int code = 0; code < 16; ++code) {
    PieceState s{0, Orientation(code & 7), static_cast<std::uint8_t>(code >> 3)};
    if (allows(h, s)) out.push_back(s);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// EdgeModel

EdgeModel::EdgeModel(std::span<const Block> blocks) : n_(static_cast<int>(blocks.size())) {
  if (blocks.empty()) throw std::invalid_argument("EdgeModel: no blocks");
  size_ = blocks.front().width();
  for (const Block& b : blocks) {
    if (b.width() != size_ || b.height() != size_) {
      throw std::invalid_argument("EdgeModel: blocks must be square and equally sized");
    }
  }
  if (size_ < 2) throw std::invalid_argument("EdgeModel: blocks need at least 2 columns");

  sides_.resize(static_cast<std::size_t>(n_) * 8);
  std::vector<double> grad(static_cast<std::size_t>(size_) * 3);
  for (int b = 0; b < n_; ++b) {
    const Block& block = blocks[b];
    for (int k = 0; k < 4; ++k) {
      const auto d = static_cast<Direction>(k);
      for (int pol = 0; pol < 2; ++pol) {
        Side& s = sides_[(static_cast<std::size_t>(b) * 4 + k) * 2 + pol];
        s.edge.resize(static_cast<std::size_t>(size_) * 3);
        s.center.resize(s.edge.size());
        double mean[3] = {0, 0, 0};
        for (int i = 0; i < size_; ++i) {
          const auto [er, ec] = side_pixel(d, i, size_);
          const auto [ir, ic] = inner_pixel(d, i, size_);
          for (int ch = 0; ch < 3; ++ch) {
            int e = block.at(ec, er, ch);
            int in = block.at(ic, ir, ch);
            if (pol) {
              e = Image::kMaxSample - e;
              in = Image::kMaxSample - in;
            }
            s.edge[i * 3 + ch] = e;
            grad[i * 3 + ch] = e - in;
            mean[ch] += e - in;
          }
        }
        for (double& m : mean) m /= size_;
        std::array<double, 6> cov{};
        for (int i = 0; i < size_; ++i) {
          const double x = grad[i * 3] - mean[0];
          const double y = grad[i * 3 + 1] - mean[1];
          const double z = grad[i * 3 + 2] - mean[2];
          cov[0] += x * x;
          cov[1] += y * y;
          cov[2] += z * z;
          cov[3] += x * y;
          cov[4] += x * z;
          cov[5] += y * z;
        }
        for (double& v : cov) v /= (size_ - 1);
        cov[0] += kEpsilon;
        cov[1] += kEpsilon;
        cov[2] += kEpsilon;
        s.inv_cov = invert_symmetric(cov);
        for (int i = 0; i < size_; ++i) {
          for (int ch = 0; ch < 3; ++ch) s.center[i * 3 + ch] = s.edge[i * 3 + ch] + mean[ch];
        }
      }
    }
  }
}

double EdgeModel::half(const Side& from, const Side& to, bool reversed) const {
  const auto& m = from.inv_cov;
  const double* c = from.center.data();
  const double* e = to.edge.data();
  double sum = 0.0;
  for (int i = 0; i < size_; ++i) {
    const int j = reversed ? size_ - 1 - i : i;
    const double x = e[j * 3] - c[i * 3];
    const double y = e[j * 3 + 1] - c[i * 3 + 1];
    const double z = e[j * 3 + 2] - c[i * 3 + 2];
    sum += m[0] * x * x + m[1] * y * y + m[2] * z * z +
           2.0 * (m[3] * x * y + m[4] * x * z + m[5] * y * z);
  }
  return sum;
}

double EdgeModel::junction(int a, Direction side_a, int b, Direction side_b, bool reversed,
                           int polarity) const {
  if (a > b || (a == b && side_a > side_b)) {
    std::swap(a, b);
    std::swap(side_a, side_b);
  }
  const Side& x = side(a, side_a, 0);
  const Side& y = side(b, side_b, polarity & 1);
  return std::max(0.0, half(x, y, reversed) + half(y, x, reversed));
}

double EdgeModel::score(const PieceState& a, Direction d, const PieceState& b) const {
  const SideRef sa = side_facing(a.orientation, d);
  const SideRef sb = side_facing(b.orientation, opposite(d));
  return junction(a.block, sa.side, b.block, sb.side, sa.reversed != sb.reversed,
                  a.polarity ^ b.polarity);
}

// ---------------------------------------------------------------------------
// CompatibilityTable

namespace {

class BoundedList {
 public:
  BoundedList(bool bounded, int k) : bounded_(bounded), k_(k) {}

  void push(const Candidate& c) {
    if (!bounded_) {
      items_.push_back(c);
      return;
    }
    if (static_cast<int>(items_.size()) < k_) {
      items_.push_back(c);
      std::push_heap(items_.begin(), items_.end(), candidate_less);
    } else if (candidate_less(c, items_.front())) {
      std::pop_heap(items_.begin(), items_.end(), candidate_less);
      items_.back() = c;
      std::push_heap(items_.begin(), items_.end(), candidate_less);
    }
  }
  std::vector<Candidate>& items() { return items_; }

 private:
  bool bounded_;
  int k_;
  std::vector<Candidate> items_;
};

}  // namespace

CompatibilityTable::CompatibilityTable(std::span<const Block> blocks, const SolverConfig& cfg)
    : model_(blocks), hypothesis_(cfg.hypothesis) {
  const int n = model_.block_count();
  if (n < 2) throw std::invalid_argument("CompatibilityTable: need at least 2 blocks");
  if (cfg.top_k < 2) throw std::invalid_argument("CompatibilityTable: top_k must be >= 2");
  dense_ = static_cast<long long>(n) * states_per_block() <= cfg.dense_state_limit;
  top_k_ = dense_ ? 0 : cfg.top_k;

  const bool any_orientation = hypothesis_ != Hypothesis::positions;
  const int polarities = hypothesis_ == Hypothesis::orientations_polarity ? 2 : 1;
  const int threads = std::max(1, std::min(cfg.threads, n - 1));

  std::vector<std::vector<BoundedList>> partial(
      threads, std::vector<BoundedList>(static_cast<std::size_t>(n) * 4,
                                        BoundedList(!dense_, cfg.top_k)));
  auto work = [&](int t) {
    auto& lists = partial[t];
    for (int a = t; a < n; a += threads) {
      for (int b = a + 1; b < n; ++b) {
        for (int ka = 0; ka < 4; ++ka) {
          const auto side_a = static_cast<Direction>(ka);
          for (int kb = 0; kb < 4; ++kb) {
            const auto side_b = static_cast<Direction>(kb);
            if (!any_orientation && side_b != opposite(side_a)) continue;
            for (int rev = 0; rev < (any_orientation ? 2 : 1); ++rev) {
              for (int pol = 0; pol < polarities; ++pol) {
                const double s = model_.junction(a, side_a, b, side_b, rev != 0, pol);
                lists[static_cast<std::size_t>(a) * 4 + ka].push(
                    {s, b, side_b, static_cast<std::uint8_t>(rev), static_cast<std::uint8_t>(pol)});
                lists[static_cast<std::size_t>(b) * 4 + kb].push(
                    {s, a, side_a, static_cast<std::uint8_t>(rev), static_cast<std::uint8_t>(pol)});
              }
            }
          }
        }
      }
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }

  lists_.resize(static_cast<std::size_t>(n) * 4);
  for (std::size_t i = 0; i < lists_.size(); ++i) {
    auto& out = lists_[i];
    for (auto& part : partial) {
      auto& items = part[i].items();
      out.insert(out.end(), items.begin(), items.end());
      items.clear();
      items.shrink_to_fit();
    }
    std::sort(out.begin(), out.end(), candidate_less);
    if (!dense_ && static_cast<int>(out.size()) > cfg.top_k) out.resize(cfg.top_k);
    out.shrink_to_fit();
  }
}

double CompatibilityTable::right(const PieceState& a, const PieceState& b) const {
  return score(a, Direction::right, b);
}

double CompatibilityTable::score(const PieceState& a, Direction d, const PieceState& b) const {
  if (a.block == b.block) throw std::invalid_argument("score: a block cannot touch itself");
  return model_.score(a, d, b);
}

PieceState CompatibilityTable::candidate_state(const PieceState& a, Direction d,
                                               const Candidate& c) const {
  const SideRef sa = side_facing(a.orientation, d);
  const SideRef sb{c.side, sa.reversed != (c.reversed != 0)};
  return {c.block, orientation_showing(opposite(d), sb),
          static_cast<std::uint8_t>(a.polarity ^ c.polarity)};
}

double CompatibilityTable::confidence(const PieceState& s, Direction d) const {
  const auto list = candidates(s.block, side_facing(s.orientation, d).side);
  if (list.empty()) return 0.0;
  if (list.size() < 2) return 1.0;
  const double best = list[0].score;
  const double second = list[1].score;
  if (second <= 0.0) return 0.0;
  return std::clamp(1.0 - best / second, 0.0, 1.0);
}

void CompatibilityTable::dump(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  auto u32 = [&](std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
  };
  out.write("PCTB", 4);
  u32(1);
  u32(static_cast<std::uint32_t>(block_count()));
  u32(static_cast<std::uint32_t>(states_per_block()));
  u32(static_cast<std::uint32_t>(top_k_));
  u32(1);
  for (const auto& list : lists_) {
    u32(static_cast<std::uint32_t>(list.size()));
    for (const Candidate& c : list) {
      u32(static_cast<std::uint32_t>(c.block));
      const unsigned char meta[4] = {static_cast<unsigned char>(c.side), c.reversed, c.polarity, 0};
      out.write(reinterpret_cast<const char*>(meta), 4);
      std::uint64_t bits;
      static_assert(sizeof bits == sizeof c.score);
      std::memcpy(&bits, &c.score, sizeof bits);
      for (int i = 0; i < 8; ++i) {
        const char byte = static_cast<char>(bits >> (8 * i));
        out.write(&byte, 1);
      }
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<double> best_ratio_confidence(const CompatibilityTable& table) {
  const auto states = allowed_states(table.hypothesis());
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(table.block_count()) * states.size() * 4);
  for (int b = 0; b < table.block_count(); ++b) {
    for (PieceState s : states) {
      s.block = b;
      for (int d = 0; d < 4; ++d) out.push_back(table.confidence(s, static_cast<Direction>(d)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Placement

bool Placement::complete() const {
  if (rows < 1 || columns < 1 || cells.size() != static_cast<std::size_t>(rows) * columns) {
    return false;
  }
  std::vector<char> seen(cells.size(), 0);
  for (const PlacedCell& c : cells) {
    if (c.empty() || c.block >= static_cast<int>(cells.size()) || seen[c.block]) return false;
    seen[c.block] = 1;
  }
  return true;
}

double total_dissimilarity(const CompatibilityTable& table, const Placement& p) {
  std::vector<double> terms;
  for (int r = 0; r < p.rows; ++r) {
    for (int c = 0; c < p.columns; ++c) {
      const PlacedCell& here = p.at(r, c);
      if (here.empty()) continue;
      const PieceState a{here.block, here.orientation, here.polarity};
      if (c + 1 < p.columns && !p.at(r, c + 1).empty()) {
        const PlacedCell& n = p.at(r, c + 1);
        terms.push_back(table.score(a, Direction::right, {n.block, n.orientation, n.polarity}));
      }
      if (r + 1 < p.rows && !p.at(r + 1, c).empty()) {
        const PlacedCell& n = p.at(r + 1, c);
        terms.push_back(table.score(a, Direction::down, {n.block, n.orientation, n.polarity}));
      }
    }
  }
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum;
}

Image render(std::span<const Block> blocks, const Placement& placement, int block_width,
             int block_height) {
  BlockGrid grid;
  grid.block_width = block_width;
  grid.block_height = block_height;
  grid.columns = placement.columns;
  grid.rows = placement.rows;
  grid.blocks.reserve(placement.cells.size());
  for (const PlacedCell& c : placement.cells) {
    if (c.empty()) {
      grid.blocks.emplace_back(block_width, block_height);
    } else {
      grid.blocks.push_back(
          negpos_transform(apply_orientation(blocks[c.block], c.orientation), c.polarity != 0));
    }
  }
  return deblockify(grid);
}

AttackOutput attack(const Image& encrypted, int block_size, const SolverConfig& cfg) {
  if (block_size < 1 || encrypted.width() % block_size != 0 ||
      encrypted.height() % block_size != 0) {
    throw std::invalid_argument("attack: image size is not a multiple of the block size");
  }
  const BlockGrid grid = blockify(encrypted, block_size, block_size);
  AttackOutput out;
  if (grid.size() == 1) {
    out.placement = Placement(1, 1);
    out.placement.at(0, 0).block = 0;
  } else {
    const CompatibilityTable table(grid.blocks, cfg);
    out.placement = assemble(table, grid.rows, grid.columns);
  }
  out.assembled = render(grid.blocks, out.placement, block_size, block_size);
  return out;
}

}  // namespace patchcrypt
