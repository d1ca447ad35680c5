#pragma once

// Brute-force checks for the closed forms in equilibrium.hpp. Nothing here
// uses the equilibrium formulas: the only shared code is the reward function
// itself, re-evaluated in long double.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "mdg/errors.hpp"
#include "mdg/game.hpp"

namespace mdg::oracle {

using Work = long double;

struct GridSpec {
  /// Points per axis and per round.
  int resolution = 64;
  int refinement_rounds = 6;

  void validate() const {
    if (resolution < 16) throw DomainError("grid resolution must be >= 16");
    if (refinement_rounds < 1) throw DomainError("grid needs at least one refinement round");
  }
};

/// Each refinement keeps this many cells on either side of the incumbent.
inline constexpr int kZoomCells = 4;

/// Cluster separation, in final cell widths.
inline constexpr double kClusterSeparation = 10.0;

/// 1-D best responses sampled per side when sizing a zoom box.
inline constexpr int kStretchSamples = 17;

namespace detail {

inline Work reward(const GameParams<Work>& g, Work x1, Work x2, Pool pool) {
  if (!(unchecked::effective_power(g.m1(), g.m2(), g.t(), g.p(), x1, x2) > Work(0))) {
    return -std::numeric_limits<Work>::infinity();
  }
  return unchecked::avg_reward(g.m1(), g.m2(), g.t(), g.p(), x1, x2, pool);
}

inline Work grid_point(Work lo, Work hi, int k, int resolution) {
  return k == resolution - 1 ? hi : lo + (hi - lo) * Work(k) / Work(resolution - 1);
}

/// Index of the largest value; the lowest index wins ties.
inline int argmax(const std::vector<Work>& values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace detail

template <typename Scalar>
struct GridArgmax {
  Scalar argmax{};
  /// Spacing of the last grid; the true maximiser of a concave objective is
  /// within one cell of argmax.
  Scalar cell_width{};
};

/// Best response of `pool` against the opponent playing `opponent_x`, by
/// uniform grid search over [0, m_pool] refined around the incumbent.
template <typename Scalar>
GridArgmax<Scalar> grid_best_response(const GameParams<Scalar>& params, Scalar opponent_x,
                                      Pool pool, const GridSpec& grid = {}) {
  grid.validate();
  const GameParams<Work> g = params.template cast<Work>();
  const Work extent = g.power(pool);
  const Work opp = opponent_x;
  if (!(opp >= Work(0) && opp <= g.power(other(pool)))) {
    throw DomainError("opponent strategy outside its range");
  }
  Work lo = 0;
  Work hi = extent;
  std::vector<Work> values(static_cast<std::size_t>(grid.resolution));
  Work best = 0;
  Work width = 0;
  for (int round = 0; round <= grid.refinement_rounds; ++round) {
    width = (hi - lo) / Work(grid.resolution - 1);
    for (int k = 0; k < grid.resolution; ++k) {
      const Work x = detail::grid_point(lo, hi, k, grid.resolution);
      values[static_cast<std::size_t>(k)] = pool == Pool::One ? detail::reward(g, x, opp, pool)
                                                              : detail::reward(g, opp, x, pool);
    }
    best = detail::grid_point(lo, hi, detail::argmax(values), grid.resolution);
    lo = std::max(Work(0), best - kZoomCells * width);
    hi = std::min(extent, best + kZoomCells * width);
  }
  return {static_cast<Scalar>(best), static_cast<Scalar>(width)};
}

/// How far `profile` is from being a fixed point of the grid best-response
/// map, per pool, next to the final cell widths.
template <typename Scalar>
struct FixedPointGap {
  Scalar gap1{}, gap2{};
  Scalar width1{}, width2{};

  bool within_one_cell() const { return gap1 <= width1 && gap2 <= width2; }
};

template <typename Scalar>
FixedPointGap<Scalar> grid_fixed_point_gap(const GameParams<Scalar>& params,
                                           const StrategyPair<Scalar>& profile,
                                           const GridSpec& grid = {}) {
  using std::abs;
  const auto br1 = grid_best_response(params, profile.x2, Pool::One, grid);
  const auto br2 = grid_best_response(params, profile.x1, Pool::Two, grid);
  return {abs(br1.argmax - profile.x1), abs(br2.argmax - profile.x2), br1.cell_width,
          br2.cell_width};
}

template <typename Scalar>
struct GridFixedPoint {
  StrategyPair<Scalar> profile{};
  int iterations = 0;
  bool converged = false;
};

/// Alternating grid best responses from honest mining until neither
/// coordinate moves by more than one final cell.
template <typename Scalar>
GridFixedPoint<Scalar> grid_best_response_fixed_point(const GameParams<Scalar>& params,
                                                      const GridSpec& grid = {},
                                                      int max_iters = 500) {
  using std::abs;
  GridFixedPoint<Scalar> out;
  StrategyPair<Scalar> s{};
  for (int k = 1; k <= max_iters; ++k) {
    const auto br1 = grid_best_response(params, s.x2, Pool::One, grid);
    const auto br2 = grid_best_response(params, br1.argmax, Pool::Two, grid);
    const bool still = abs(br1.argmax - s.x1) <= br1.cell_width && abs(br2.argmax - s.x2) <= br2.cell_width;
    s = {br1.argmax, br2.argmax};
    out.iterations = k;
    if (still) {
      out.converged = true;
      break;
    }
  }
  out.profile = s;
  return out;
}

namespace detail {

template <typename Scalar>
void check_margin(const GameParams<Scalar>& params, const StrategyPair<Scalar>& s, Pool pool,
                  Scalar step) {
  mdg::detail::check_profile(params, s);
  if (!(step > Scalar(0))) throw DomainError("finite-difference step must be > 0");
  const Scalar x = s[pool];
  if (x - step < Scalar(0) || x + step > params.power(pool)) {
    throw DomainError("finite-difference stencil leaves the strategy interval");
  }
}

/// Finite differences are evaluated in quad precision where available so
/// that second differences stay meaningful for pools far smaller than m.
#ifdef __SIZEOF_FLOAT128__
__extension__ typedef __float128 FdWork;
#else
typedef long double FdWork;
#endif

template <typename Scalar>
FdWork shifted(const GameParams<Scalar>& params, const StrategyPair<Scalar>& s, Pool pool,
               FdWork delta) {
  FdWork x1 = FdWork(s.x1), x2 = FdWork(s.x2);
  if (pool == Pool::One) {
    x1 += delta;
  } else {
    x2 += delta;
  }
  return unchecked::avg_reward<FdWork>(FdWork(params.m1()), FdWork(params.m2()), FdWork(params.t()),
                                       FdWork(params.p()), x1, x2, pool);
}

}  // namespace detail

/// Central difference of r_pool in x_pool.
template <typename Scalar>
Scalar fd_derivative(const GameParams<Scalar>& params, const StrategyPair<Scalar>& s, Pool pool,
                     Scalar step) {
  using detail::FdWork;
  detail::check_margin(params, s, pool, step);
  const FdWork h = FdWork(step);
  return static_cast<Scalar>((detail::shifted(params, s, pool, h) - detail::shifted(params, s, pool, -h))
                             / (FdWork(2) * h));
}

/// Second central difference of r_pool in x_pool.
template <typename Scalar>
Scalar fd_second_derivative(const GameParams<Scalar>& params, const StrategyPair<Scalar>& s,
                            Pool pool, Scalar step) {
  using detail::FdWork;
  detail::check_margin(params, s, pool, step);
  const FdWork h = FdWork(step);
  return static_cast<Scalar>((detail::shifted(params, s, pool, h)
                              - FdWork(2) * detail::shifted(params, s, pool, FdWork(0))
                              + detail::shifted(params, s, pool, -h))
                             / (h * h));
}

/// (r1, r2) from the defining linear system
///   r1 (m1 + x2) - x1 r2 = R1,   -x2 r1 + r2 (m2 + x1) = R2.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> linear_system_rewards(const GameParams<Scalar>& params,
                                                  const StrategyPair<Scalar>& s) {
  mdg::detail::check_profile(params, s);
  const GameParams<Work> g = params.template cast<Work>();
  const Work x1 = s.x1, x2 = s.x2;
  const Work eff = g.total() - (Work(1) - g.p()) * (x1 + x2);
  Eigen::Matrix<Work, 2, 2> a;
  a << g.m1() + x2, -x1, -x2, g.m2() + x1;
  Eigen::Matrix<Work, 2, 1> direct;
  direct << (g.m1() - x1 + g.p() * x2) / eff, (g.m2() - x2 + g.p() * x1) / eff;
  return a.partialPivLu().solve(direct).template cast<Scalar>();
}

template <typename Scalar>
struct EquilibriumCluster {
  StrategyPair<Scalar> center{};
  StrategyPair<Scalar> lower{};
  StrategyPair<Scalar> upper{};
  std::size_t points = 0;
  Scalar width1{}, width2{};

  /// Does the cluster's bounding box, grown by `cells` final cells, contain s?
  bool contains(const StrategyPair<Scalar>& s, Scalar cells = Scalar(1)) const {
    return s.x1 >= lower.x1 - cells * width1 && s.x1 <= upper.x1 + cells * width1
           && s.x2 >= lower.x2 - cells * width2 && s.x2 <= upper.x2 + cells * width2;
  }
};

template <typename Scalar>
struct ExhaustiveResult {
  std::vector<EquilibriumCluster<Scalar>> clusters;
  /// At t = p = 0 the rewards are discontinuous at the excluded profile
  /// (m1, m2) and grid approximations of equilibria accumulate there.
  /// Clusters reaching that corner are listed here instead.
  std::vector<EquilibriumCluster<Scalar>> degenerate;
};

namespace detail {

struct Box {
  Work lo1, hi1, lo2, hi2;
};

struct Cell {
  int i, j;
};

struct BoxScan {
  Box box;
  Work h1, h2;
  std::vector<Cell> accepted;
};

/// Grid-equilibrium candidates inside `box`. Column j's best response is the
/// argmax of r1 over the box's x1 grid; a profile (i, j) is kept when i lies
/// within one cell of the best responses of columns j-1..j+1 and likewise
/// for pool 2. Best responses stuck on a box edge that is not a domain edge
/// are discarded, since the true maximiser may lie outside the box.
inline BoxScan scan_box(const GameParams<Work>& g, const Box& box, int res) {
  BoxScan scan{box, (box.hi1 - box.lo1) / Work(res - 1), (box.hi2 - box.lo2) / Work(res - 1), {}};
  const auto n = static_cast<std::size_t>(res);
  std::vector<Work> xs1(n), xs2(n);
  for (int k = 0; k < res; ++k) {
    xs1[static_cast<std::size_t>(k)] = grid_point(box.lo1, box.hi1, k, res);
    xs2[static_cast<std::size_t>(k)] = grid_point(box.lo2, box.hi2, k, res);
  }
  const bool open_lo1 = box.lo1 > Work(0), open_hi1 = box.hi1 < g.m1();
  const bool open_lo2 = box.lo2 > Work(0), open_hi2 = box.hi2 < g.m2();
  std::vector<std::optional<int>> br1(n), br2(n);
  std::vector<Work> column(n);
  for (int j = 0; j < res; ++j) {
    for (int i = 0; i < res; ++i) {
      column[static_cast<std::size_t>(i)] =
          reward(g, xs1[static_cast<std::size_t>(i)], xs2[static_cast<std::size_t>(j)], Pool::One);
    }
    const int a = argmax(column);
    if (std::isfinite(column[static_cast<std::size_t>(a)])
        && !((a == 0 && open_lo1) || (a == res - 1 && open_hi1))) {
      br1[static_cast<std::size_t>(j)] = a;
    }
  }
  for (int i = 0; i < res; ++i) {
    for (int j = 0; j < res; ++j) {
      column[static_cast<std::size_t>(j)] =
          reward(g, xs1[static_cast<std::size_t>(i)], xs2[static_cast<std::size_t>(j)], Pool::Two);
    }
    const int a = argmax(column);
    if (std::isfinite(column[static_cast<std::size_t>(a)])
        && !((a == 0 && open_lo2) || (a == res - 1 && open_hi2))) {
      br2[static_cast<std::size_t>(i)] = a;
    }
  }
  // [lo, hi] band of best responses over a 3-neighbourhood, widened by one.
  const auto band = [res](const std::vector<std::optional<int>>& br, int k) {
    std::optional<std::pair<int, int>> out;
    for (int d = -1; d <= 1; ++d) {
      const int kk = k + d;
      if (kk < 0 || kk >= res || !br[static_cast<std::size_t>(kk)]) continue;
      const int v = *br[static_cast<std::size_t>(kk)];
      out = out ? std::pair{std::min(out->first, v), std::max(out->second, v)} : std::pair{v, v};
    }
    if (out) out = std::pair{out->first - 1, out->second + 1};
    return out;
  };
  for (int j = 0; j < res; ++j) {
    const auto rows = band(br1, j);
    if (!rows) continue;
    for (int i = std::max(0, rows->first); i <= std::min(res - 1, rows->second); ++i) {
      const auto cols = band(br2, i);
      if (cols && j >= cols->first && j <= cols->second) scan.accepted.push_back({i, j});
    }
  }
  return scan;
}

/// Connected components under Chebyshev index distance <= `link`.
inline std::vector<std::vector<Cell>> components(const std::vector<Cell>& cells, int link) {
  std::vector<std::size_t> parent(cells.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  const auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (std::size_t a = 0; a < cells.size(); ++a) {
    for (std::size_t b = a + 1; b < cells.size(); ++b) {
      if (std::abs(cells[a].i - cells[b].i) <= link && std::abs(cells[a].j - cells[b].j) <= link) {
        parent[find(a)] = find(b);
      }
    }
  }
  std::vector<std::vector<Cell>> groups;
  std::vector<std::ptrdiff_t> slot(cells.size(), -1);
  for (std::size_t a = 0; a < cells.size(); ++a) {
    const std::size_t root = find(a);
    if (slot[root] < 0) {
      slot[root] = static_cast<std::ptrdiff_t>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(slot[root])].push_back(cells[a]);
  }
  return groups;
}

template <typename Scalar>
void refine(const GameParams<Work>& g, const Box& box, const GridSpec& grid, int round,
            std::vector<EquilibriumCluster<Scalar>>& out) {
  const BoxScan scan = scan_box(g, box, grid.resolution);
  const int link = static_cast<int>(kClusterSeparation);
  for (const auto& group : components(scan.accepted, link)) {
    int i_lo = grid.resolution, i_hi = -1, j_lo = grid.resolution, j_hi = -1;
    Work sum1 = 0, sum2 = 0;
    for (const Cell& c : group) {
      i_lo = std::min(i_lo, c.i);
      i_hi = std::max(i_hi, c.i);
      j_lo = std::min(j_lo, c.j);
      j_hi = std::max(j_hi, c.j);
      sum1 += grid_point(box.lo1, box.hi1, c.i, grid.resolution);
      sum2 += grid_point(box.lo2, box.hi2, c.j, grid.resolution);
    }
    const Work x1_lo = grid_point(box.lo1, box.hi1, i_lo, grid.resolution);
    const Work x1_hi = grid_point(box.lo1, box.hi1, i_hi, grid.resolution);
    const Work x2_lo = grid_point(box.lo2, box.hi2, j_lo, grid.resolution);
    const Work x2_hi = grid_point(box.lo2, box.hi2, j_hi, grid.resolution);
    if (round == grid.refinement_rounds) {
      EquilibriumCluster<Scalar> c;
      const Work n = Work(group.size());
      c.center = {static_cast<Scalar>(sum1 / n), static_cast<Scalar>(sum2 / n)};
      c.lower = {static_cast<Scalar>(x1_lo), static_cast<Scalar>(x2_lo)};
      c.upper = {static_cast<Scalar>(x1_hi), static_cast<Scalar>(x2_hi)};
      c.points = group.size();
      c.width1 = static_cast<Scalar>(scan.h1);
      c.width2 = static_cast<Scalar>(scan.h2);
      out.push_back(c);
      continue;
    }
    // A coarse grid may not resolve one coordinate, and the other pool's best
    // response can vary sharply (even non-monotonically) inside a single
    // unresolved cell. Stretch each side of the zoom box to the 1-D best
    // responses sampled across the neighbouring cells.
    Work lo1 = x1_lo, hi1 = x1_hi, lo2 = x2_lo, hi2 = x2_hi;
    const Work from1 = std::max(Work(0), x1_lo - scan.h1), to1 = std::min(g.m1(), x1_hi + scan.h1);
    const Work from2 = std::max(Work(0), x2_lo - scan.h2), to2 = std::min(g.m2(), x2_hi + scan.h2);
    for (int k = 0; k < kStretchSamples; ++k) {
      const Work b2 = grid_best_response(g, grid_point(from1, to1, k, kStretchSamples), Pool::Two, grid).argmax;
      const Work b1 = grid_best_response(g, grid_point(from2, to2, k, kStretchSamples), Pool::One, grid).argmax;
      lo2 = std::min(lo2, b2);
      hi2 = std::max(hi2, b2);
      lo1 = std::min(lo1, b1);
      hi1 = std::max(hi1, b1);
    }
    const Box next{std::max(Work(0), lo1 - kZoomCells * scan.h1),
                   std::min(g.m1(), hi1 + kZoomCells * scan.h1),
                   std::max(Work(0), lo2 - kZoomCells * scan.h2),
                   std::min(g.m2(), hi2 + kZoomCells * scan.h2)};
    refine(g, next, grid, round + 1, out);
  }
}

}  // namespace detail

/// All approximate pure equilibria: a full product-grid scan followed by
/// refinement of every candidate cluster. Clusters whose bounding boxes come
/// within kClusterSeparation final cells of each other are merged.
template <typename Scalar>
ExhaustiveResult<Scalar> exhaustive_equilibrium(const GameParams<Scalar>& params,
                                                const GridSpec& grid = {}) {
  using std::max;
  grid.validate();
  const GameParams<Work> g = params.template cast<Work>();
  std::vector<EquilibriumCluster<Scalar>> raw;
  detail::refine(g, detail::Box{0, g.m1(), 0, g.m2()}, grid, 0, raw);

  // Merge refinements of different coarse candidates that met again.
  ExhaustiveResult<Scalar> result;
  const bool singular_corner = params.t() == Scalar(0) && params.p() == Scalar(0);
  for (const auto& c : raw) {
    if (singular_corner && c.upper.x1 == params.m1() && c.upper.x2 == params.m2()) {
      result.degenerate.push_back(c);
      continue;
    }
    bool merged = false;
    for (auto& r : result.clusters) {
      const Scalar w1 = max(c.width1, r.width1) * Scalar(kClusterSeparation);
      const Scalar w2 = max(c.width2, r.width2) * Scalar(kClusterSeparation);
      const bool near = c.lower.x1 <= r.upper.x1 + w1 && r.lower.x1 <= c.upper.x1 + w1
                        && c.lower.x2 <= r.upper.x2 + w2 && r.lower.x2 <= c.upper.x2 + w2;
      if (!near) continue;
      const Scalar n = Scalar(r.points + c.points);
      r.center = {(r.center.x1 * Scalar(r.points) + c.center.x1 * Scalar(c.points)) / n,
                  (r.center.x2 * Scalar(r.points) + c.center.x2 * Scalar(c.points)) / n};
      r.lower = {std::min(r.lower.x1, c.lower.x1), std::min(r.lower.x2, c.lower.x2)};
      r.upper = {max(r.upper.x1, c.upper.x1), max(r.upper.x2, c.upper.x2)};
      r.points += c.points;
      r.width1 = max(r.width1, c.width1);
      r.width2 = max(r.width2, c.width2);
      merged = true;
      break;
    }
    if (!merged) result.clusters.push_back(c);
  }
  return result;
}

}  // namespace mdg::oracle
