#pragma once

// N-pool generalisation and iterated best responses from honest mining.
//
// Pool i sends x(i, j) of its power m_i into pool j. Direct rewards follow
// the two-pool model with the sums over attackers and victims:
//
//   R_i = (m_i - sum_j x(i,j) + p sum_j x(j,i)) / (m - (1-p) sum x)
//
// and the average rewards solve the linear system
//
//   r_i (m_i + sum_j x(j,i)) = R_i + sum_j x(i,j) r_j.
//
// For N = 2 this is exactly the two-pool model.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "mdg/errors.hpp"

namespace mdg {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// x(i, j): power pool i uses to attack pool j. Zero diagonal.
template <typename Scalar>
using StrategyMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
class NGameParams {
 public:
  NGameParams(Vector<Scalar> powers, Scalar t, Scalar p) : powers_(std::move(powers)), t_(t), p_(p) {
    using std::isfinite;
    if (powers_.size() < 2) throw DomainError("need at least two pools");
    for (Eigen::Index i = 0; i < powers_.size(); ++i) {
      if (!isfinite(powers_[i]) || !(powers_[i] > Scalar(0))) {
        throw DomainError("pool powers must be finite and > 0");
      }
    }
    if (!isfinite(t) || !(t >= Scalar(0))) throw DomainError("t must be >= 0");
    if (!isfinite(p) || !(p >= Scalar(0) && p < Scalar(1))) {
      throw DomainError("p must lie in [0, 1)");
    }
  }

  NGameParams(const std::vector<Scalar>& powers, Scalar t, Scalar p)
      : NGameParams(Eigen::Map<const Vector<Scalar>>(powers.data(),
                                                     static_cast<Eigen::Index>(powers.size())),
                    t, p) {}

  Eigen::Index size() const { return powers_.size(); }
  const Vector<Scalar>& powers() const { return powers_; }
  Scalar power(Eigen::Index i) const { return powers_[i]; }
  Scalar t() const { return t_; }
  Scalar p() const { return p_; }
  Scalar total() const { return powers_.sum() + t_; }

 private:
  Vector<Scalar> powers_;
  Scalar t_, p_;
};

template <typename Scalar>
StrategyMatrix<Scalar> honest_strategy(const NGameParams<Scalar>& params) {
  return StrategyMatrix<Scalar>::Zero(params.size(), params.size());
}

/// Throws DomainError unless x is N x N, finite, nonnegative, has a zero
/// diagonal and every row sum is at most the pool's power.
template <typename Scalar>
void validate_strategy(const NGameParams<Scalar>& params, const StrategyMatrix<Scalar>& x) {
  using std::isfinite;
  const Eigen::Index n = params.size();
  if (x.rows() != n || x.cols() != n) throw DomainError("strategy matrix must be N x N");
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!isfinite(x(i, j)) || x(i, j) < Scalar(0)) {
        throw DomainError("strategy entries must be finite and >= 0");
      }
    }
    if (x(i, i) != Scalar(0)) throw DomainError("a pool cannot infiltrate itself");
    if (x.row(i).sum() > params.power(i) * (Scalar(1) + Scalar(1e-12))) {
      std::ostringstream msg;
      msg << "pool " << i << " infiltrates " << x.row(i).sum() << " > its power "
          << params.power(i);
      throw DomainError(msg.str());
    }
  }
}

namespace unchecked {

template <typename Scalar>
Scalar n_effective_power(const Vector<Scalar>& powers, Scalar t, Scalar p,
                         const StrategyMatrix<Scalar>& x) {
  return powers.sum() + t - (Scalar(1) - p) * x.sum();
}

/// Reward system A r = R with its LU factorisation, so that partials can
/// reuse it.
template <typename Scalar>
struct RewardSystem {
  Eigen::PartialPivLU<StrategyMatrix<Scalar>> lu;
  Vector<Scalar> numer;  // m_i - sum_j x(i,j) + p sum_j x(j,i)
  Vector<Scalar> rewards;
  Scalar effective{};

  RewardSystem(const Vector<Scalar>& powers, Scalar t, Scalar p, const StrategyMatrix<Scalar>& x) {
    effective = n_effective_power(powers, t, p, x);
    const Vector<Scalar> infiltrated = x.colwise().sum().transpose();
    numer = powers - x.rowwise().sum() + p * infiltrated;
    StrategyMatrix<Scalar> a = -x;
    a.diagonal() += powers + infiltrated;
    lu.compute(a);
    rewards = lu.solve(numer / effective);
  }

  /// d r_i / d x(i, j).
  Scalar partial(Scalar p, Eigen::Index i, Eigen::Index j) const {
    const Scalar q = Scalar(1) - p;
    Vector<Scalar> rhs = numer * (q / (effective * effective));
    rhs[i] -= Scalar(1) / effective;
    rhs[j] += p / effective;
    // d A / d x(i,j) adds 1 at (j,j) and -1 at (i,j).
    rhs[j] -= rewards[j];
    rhs[i] += rewards[j];
    return lu.solve(rhs)[i];
  }
};

template <typename Scalar>
Vector<Scalar> n_rewards(const Vector<Scalar>& powers, Scalar t, Scalar p,
                         const StrategyMatrix<Scalar>& x) {
  return RewardSystem<Scalar>(powers, t, p, x).rewards;
}

}  // namespace unchecked

/// Per-pool average rewards r_i.
template <typename Scalar>
Vector<Scalar> n_rewards(const NGameParams<Scalar>& params, const StrategyMatrix<Scalar>& x) {
  using std::isfinite;
  validate_strategy(params, x);
  if (!(unchecked::n_effective_power(params.powers(), params.t(), params.p(), x) > Scalar(0))) {
    throw DomainError("effective mining power must be > 0");
  }
  Vector<Scalar> r = unchecked::n_rewards(params.powers(), params.t(), params.p(), x);
  if (!r.allFinite()) throw NumericalError("singular reward system");
  return r;
}

/// Direct rewards R_i; together with the outsiders' t / (m - (1-p) sum x)
/// they add up to one.
template <typename Scalar>
Vector<Scalar> n_direct_rewards(const NGameParams<Scalar>& params, const StrategyMatrix<Scalar>& x) {
  validate_strategy(params, x);
  const Scalar eff = unchecked::n_effective_power(params.powers(), params.t(), params.p(), x);
  if (!(eff > Scalar(0))) throw DomainError("effective mining power must be > 0");
  return (params.powers() - x.rowwise().sum() + params.p() * x.colwise().sum().transpose()) / eff;
}

/// sum m_i / (sum m_i - (1-p) sum x).
template <typename Scalar>
Scalar n_ppoa(const NGameParams<Scalar>& params, const StrategyMatrix<Scalar>& x) {
  const Scalar pools = params.powers().sum();
  const Scalar effective = pools - (Scalar(1) - params.p()) * x.sum();
  if (!(effective > Scalar(0))) throw DomainError("PPoA undefined: no effective pool power");
  return pools / effective;
}

namespace detail {

/// Row-i objective with the rest of x fixed; -inf where the game is
/// undefined (nobody mining).
template <typename Scalar>
Scalar row_objective(const NGameParams<Scalar>& params, const StrategyMatrix<Scalar>& x,
                     Eigen::Index i) {
  if (!(unchecked::n_effective_power(params.powers(), params.t(), params.p(), x) > Scalar(0))) {
    return -std::numeric_limits<Scalar>::infinity();
  }
  return unchecked::RewardSystem<Scalar>(params.powers(), params.t(), params.p(), x).rewards[i];
}

template <typename Scalar>
Scalar row_partial(const NGameParams<Scalar>& params, const StrategyMatrix<Scalar>& x,
                   Eigen::Index i, Eigen::Index j) {
  if (!(unchecked::n_effective_power(params.powers(), params.t(), params.p(), x) > Scalar(0))) {
    return -std::numeric_limits<Scalar>::infinity();
  }
  return unchecked::RewardSystem<Scalar>(params.powers(), params.t(), params.p(), x)
      .partial(params.p(), i, j);
}

/// Maximise r_i over x(i, j) in [0, upper]; x is scratch space and holds the
/// maximiser on return.
template <typename Scalar>
void maximize_coordinate(const NGameParams<Scalar>& params, StrategyMatrix<Scalar>& x,
                         Eigen::Index i, Eigen::Index j, Scalar upper) {
  const auto partial_at = [&](Scalar v) {
    x(i, j) = v;
    return row_partial(params, x, i, j);
  };
  const auto objective_at = [&](Scalar v) {
    x(i, j) = v;
    return row_objective(params, x, i);
  };
  if (!(upper > Scalar(0))) {
    x(i, j) = Scalar(0);
    return;
  }
  Scalar candidate;
  if (!(partial_at(Scalar(0)) > Scalar(0))) {
    candidate = Scalar(0);
  } else if (partial_at(upper) >= Scalar(0)) {
    candidate = upper;
  } else {
    Scalar lo(0), hi = upper;
    for (int k = 0; k < 200; ++k) {
      const Scalar mid = lo + (hi - lo) / Scalar(2);
      if (mid <= lo || mid >= hi) break;
      if (partial_at(mid) > Scalar(0)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    candidate = lo + (hi - lo) / Scalar(2);
  }
  // Guard against non-concavity: keep the best of candidate and endpoints,
  // preferring the smaller value on ties.
  Scalar best = candidate;
  Scalar best_value = objective_at(candidate);
  for (const Scalar end : {Scalar(0), upper}) {
    if (end == candidate) continue;
    const Scalar value = objective_at(end);
    if (value > best_value || (value == best_value && end < best)) {
      best = end;
      best_value = value;
    }
  }
  x(i, j) = best;
}

/// Projected coordinate ascent on row i starting from `start`.
template <typename Scalar>
Vector<Scalar> ascend_row(const NGameParams<Scalar>& params, StrategyMatrix<Scalar> x,
                          Eigen::Index i, const Vector<Scalar>& start) {
  using std::max;
  const Eigen::Index n = params.size();
  const Scalar mi = params.power(i);
  x.row(i) = start.transpose();
  for (int pass = 0; pass < 500; ++pass) {
    const Vector<Scalar> before = x.row(i).transpose();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const Scalar others = x.row(i).sum() - x(i, j);
      maximize_coordinate(params, x, i, j, max(Scalar(0), mi - others));
    }
    if ((x.row(i).transpose() - before).cwiseAbs().sum() <= Scalar(1e-12) * mi) break;
  }
  Vector<Scalar> row = x.row(i).transpose();
  const Scalar total = row.sum();
  if (total > mi) row *= mi / total;
  return row;
}

/// First-order optimality of row i: vanishing partials inside, nonpositive
/// partials at zero, nonnegative partials when the budget is exhausted.
template <typename Scalar>
bool row_is_stationary(const NGameParams<Scalar>& params, const StrategyMatrix<Scalar>& x,
                       Eigen::Index i, Scalar tol) {
  using std::abs;
  const Scalar m = params.total();
  const bool full = x.row(i).sum() >= params.power(i) * (Scalar(1) - Scalar(1e-12));
  for (Eigen::Index j = 0; j < params.size(); ++j) {
    if (j == i) continue;
    const Scalar d = row_partial(params, x, i, j) * m * m;
    if (x(i, j) <= Scalar(0)) {
      if (d > tol) return false;
    } else if (full) {
      if (d < -tol) return false;
    } else if (abs(d) > tol) {
      return false;
    }
  }
  return true;
}

}  // namespace detail

/// Reward-maximising row i against the other rows of x. Ascent is run from
/// the incumbent row and from honest mining; the better result wins and ties
/// go to the smaller L1 norm.
template <typename Scalar>
Vector<Scalar> best_response(const NGameParams<Scalar>& params, const StrategyMatrix<Scalar>& x,
                             Eigen::Index i) {
  using std::abs;
  using std::max;
  validate_strategy(params, x);
  if (i < 0 || i >= params.size()) throw DomainError("pool index out of range");
  const Vector<Scalar> incumbent = x.row(i).transpose();
  const Vector<Scalar> from_incumbent = detail::ascend_row(params, x, i, incumbent);
  const Vector<Scalar> from_zero =
      detail::ascend_row<Scalar>(params, x, i, Vector<Scalar>::Zero(params.size()));

  StrategyMatrix<Scalar> scratch = x;
  const auto value_of = [&](const Vector<Scalar>& row) {
    scratch.row(i) = row.transpose();
    return detail::row_objective(params, scratch, i);
  };
  const Scalar v_inc = value_of(from_incumbent);
  const Scalar v_zero = value_of(from_zero);
  const Scalar tie = Scalar(8) * std::numeric_limits<Scalar>::epsilon() * max(abs(v_inc), abs(v_zero));
  Vector<Scalar> best;
  Scalar best_value;
  if (abs(v_inc - v_zero) <= tie) {
    const bool zero_smaller = from_zero.sum() < from_incumbent.sum();
    best = zero_smaller ? from_zero : from_incumbent;
    best_value = zero_smaller ? v_zero : v_inc;
  } else if (v_zero > v_inc) {
    best = from_zero;
    best_value = v_zero;
  } else {
    best = from_incumbent;
    best_value = v_inc;
  }

  const Scalar v_old = value_of(incumbent);
  if (best_value < v_old - Scalar(1e-12) * abs(v_old)) {
    scratch.row(i) = incumbent.transpose();
    if (detail::row_is_stationary(params, scratch, i, Scalar(1e-8))) return incumbent;
    std::ostringstream msg;
    msg.precision(17);
    msg << "best response for pool " << i << " is worse than the incumbent (" << best_value
        << " < " << v_old << ") and the incumbent is not stationary";
    throw OptimizationError(msg.str());
  }
  return best;
}

enum class Schedule {
  /// Every pool responds to the previous sweep's matrix.
  Jacobi,
  /// Pools respond in index order to the latest rows.
  RoundRobin
};

template <typename Scalar>
struct IterateOptions {
  Scalar tol = Scalar(1) / Scalar(1 << 18);
  int max_iters = 10000;
  Schedule schedule = Schedule::Jacobi;
};

template <typename Scalar>
struct DynamicsResult {
  StrategyMatrix<Scalar> matrix;
  Vector<Scalar> rewards;
  int iterations = 0;
  bool converged = false;
  Scalar ppoa{};
  /// L1 change of the off-diagonal entries over the last sweep.
  Scalar last_change{};
};

/// Best-response dynamics from honest mining. Stops once a sweep changes the
/// matrix by at most `tol` in L1; non-convergence is reported, not thrown.
template <typename Scalar>
DynamicsResult<Scalar> iterate(const NGameParams<Scalar>& params,
                               const IterateOptions<Scalar>& options = {}) {
  if (!(options.tol > Scalar(0))) throw PreconditionError("tol must be > 0");
  if (options.max_iters < 1) throw PreconditionError("max_iters must be >= 1");
  DynamicsResult<Scalar> result;
  StrategyMatrix<Scalar> x = honest_strategy(params);
  for (int k = 1; k <= options.max_iters; ++k) {
    StrategyMatrix<Scalar> next = x;
    for (Eigen::Index i = 0; i < params.size(); ++i) {
      const StrategyMatrix<Scalar>& against = options.schedule == Schedule::Jacobi ? x : next;
      next.row(i) = best_response(params, against, i).transpose();
    }
    result.last_change = (next - x).cwiseAbs().sum();
    result.iterations = k;
    x = std::move(next);
    if (result.last_change <= options.tol) {
      result.converged = true;
      break;
    }
  }
  result.matrix = x;
  result.rewards = n_rewards(params, x);
  result.ppoa = n_ppoa(params, x);
  return result;
}

using NGameParamsd = NGameParams<double>;

}  // namespace mdg
