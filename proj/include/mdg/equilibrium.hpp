#pragma once

// Closed-form pure Nash equilibrium of the two-pool game.
//
// The equilibrium is unique. Which formula produces it depends on the
// instance: one pool attacks nobody when g <= 0 in one orientation (extreme),
// otherwise both partials vanish and the profile comes from the symmetric
// formula (m1 == m2), the t = 0 closed form, or the unique root of a quartic
// in y = x1 + x2.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>

#include "mdg/errors.hpp"
#include "mdg/game.hpp"

namespace mdg {

enum class EquilibriumKind { ExtremeX1Zero, ExtremeX2Zero, Symmetric, Binary, General };

constexpr std::string_view to_string(EquilibriumKind kind) {
  switch (kind) {
    case EquilibriumKind::ExtremeX1Zero: return "extreme-x1-zero";
    case EquilibriumKind::ExtremeX2Zero: return "extreme-x2-zero";
    case EquilibriumKind::Symmetric: return "symmetric";
    case EquilibriumKind::Binary: return "binary";
    case EquilibriumKind::General: return "general";
  }
  return "unknown";
}

constexpr bool is_extreme(EquilibriumKind kind) {
  return kind == EquilibriumKind::ExtremeX1Zero || kind == EquilibriumKind::ExtremeX2Zero;
}

template <typename Scalar>
struct Equilibrium {
  EquilibriumKind kind{};
  StrategyPair<Scalar> profile{};
  Scalar y_star{};
  Scalar ppoa{};
};

/// Pools whose powers differ by less than this fraction of m1 + m2 are
/// solved as symmetric.
inline constexpr double kSymmetricSnap = 1e-12;

namespace detail {

template <typename Scalar, int N>
Scalar horner(const Eigen::Matrix<Scalar, N, 1>& highest_first, Scalar x) {
  Scalar acc(0);
  for (Eigen::Index i = 0; i < highest_first.size(); ++i) acc = acc * x + highest_first[i];
  return acc;
}

template <typename Scalar, int N>
Scalar horner_derivative(const Eigen::Matrix<Scalar, N, 1>& highest_first, Scalar x) {
  Scalar acc(0);
  const Eigen::Index degree = highest_first.size() - 1;
  for (Eigen::Index i = 0; i < degree; ++i) {
    acc = acc * x + Scalar(degree - i) * highest_first[i];
  }
  return acc;
}

/// Root of an increasing sign change: requires f(lo) < 0 < f(hi). Bisection
/// until the bracket is narrower than width_tol (at most 200 halvings), then
/// up to 20 Newton steps that must stay inside the bracket and must not
/// increase |f|.
template <typename Scalar, typename F, typename DF>
Scalar bracketed_root(F&& f, DF&& df, Scalar lo, Scalar hi, Scalar width_tol) {
  using std::abs;
  using std::isfinite;
  for (int i = 0; i < 200 && hi - lo > width_tol; ++i) {
    const Scalar mid = lo + (hi - lo) / Scalar(2);
    if (mid <= lo || mid >= hi) break;
    const Scalar fm = f(mid);
    if (fm == Scalar(0)) return mid;
    if (fm < Scalar(0)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  Scalar x = lo + (hi - lo) / Scalar(2);
  Scalar fx = f(x);
  for (int i = 0; i < 20 && fx != Scalar(0); ++i) {
    const Scalar d = df(x);
    if (d == Scalar(0) || !isfinite(d)) break;
    const Scalar next = x - fx / d;
    if (!(next >= lo && next <= hi) || next == x) break;
    const Scalar fnext = f(next);
    if (abs(fnext) > abs(fx)) break;
    x = next;
    fx = fnext;
  }
  return x;
}

}  // namespace detail

/// g(t, p, m1, m2) as a cubic in the outside power t; g <= 0 is exactly the
/// condition for (0, x2*) to be the equilibrium.
template <typename Scalar>
struct GPolynomial {
  /// t^3, t^2, t^1, t^0. The leading coefficient is always 4.
  Eigen::Matrix<Scalar, 4, 1> coeffs;

  GPolynomial(Scalar p, Scalar m1, Scalar m2) {
    const Scalar q = Scalar(1) - p;
    coeffs << Scalar(4), Scalar(4) * (Scalar(3) * m1 + m2),
        Scalar(12) * m1 * m1 + (Scalar(2) + Scalar(8) * p - Scalar(2) * p * p) * m1 * m2
            - q * q * m2 * m2,
        m1 * (m1 + p * m2) * (Scalar(4) * m1 - q * q * m2);
  }

  Scalar operator()(Scalar t) const { return detail::horner(coeffs, t); }
  Scalar derivative(Scalar t) const { return detail::horner_derivative(coeffs, t); }
};

/// g(t, p, m1, m2), or g(t, p, m2, m1) when swapped.
template <typename Scalar>
Scalar eval_g(const GameParams<Scalar>& params, bool swapped = false) {
  const GPolynomial<Scalar> g = swapped ? GPolynomial<Scalar>(params.p(), params.m2(), params.m1())
                                        : GPolynomial<Scalar>(params.p(), params.m1(), params.m2());
#ifdef MDG_MUTATE_G_SIGN
  return -g(params.t());
#else
  return g(params.t());
#endif
}

/// Largest outside power for which pool 1 stays out of the attack:
/// g(t, p, m1, m2) <= 0 exactly on [0, t_star]. Requires m1 <= (1-p)^2 m2 / 4.
template <typename Scalar>
Scalar t_star(Scalar p, Scalar m1, Scalar m2) {
  if (!(m1 > Scalar(0) && m2 > Scalar(0) && p >= Scalar(0) && p < Scalar(1))) {
    throw DomainError("t_star needs m1, m2 > 0 and p in [0, 1)");
  }
  const Scalar q = Scalar(1) - p;
  if (m1 > q * q * m2 / Scalar(4)) {
    throw PreconditionError("t_star requires m1 <= (1-p)^2 m2 / 4");
  }
  const GPolynomial<Scalar> g(p, m1, m2);
  if (g(Scalar(0)) >= Scalar(0)) return Scalar(0);
  const Scalar scale = m1 + m2;
  Scalar hi = scale;
  for (int i = 0; i < 2000 && g(hi) <= Scalar(0); ++i) hi *= Scalar(2);
  return detail::bracketed_root(
      [&](Scalar t) { return g(t); }, [&](Scalar t) { return g.derivative(t); }, Scalar(0), hi,
      Scalar(1e-14) * scale);
}

/// PPoA = (m1 + m2) / (m1 + m2 - (1-p)(x1 + x2)).
template <typename Scalar>
Scalar ppoa(const GameParams<Scalar>& params, const StrategyPair<Scalar>& profile) {
  const Scalar pools = params.m1() + params.m2();
  const Scalar effective = pools - (Scalar(1) - params.p()) * profile.sum();
  if (!(effective > Scalar(0))) {
    throw DomainError("PPoA undefined: pools have no effective mining power");
  }
  return pools / effective;
}

namespace detail {

template <typename Scalar>
Equilibrium<Scalar> make_equilibrium(const GameParams<Scalar>& params, EquilibriumKind kind,
                                     StrategyPair<Scalar> profile) {
  return {kind, profile, profile.sum(), ppoa(params, profile)};
}

}  // namespace detail

/// Equilibrium in which `zero_pool` infiltrates nothing. The other pool's
/// strategy is the positive root of its first-order condition against an
/// honest opponent, written without the 1/(t + p m) factor so that the
/// t = p = 0 instance (x = m_other / 2) needs no special case.
template <typename Scalar>
Equilibrium<Scalar> solve_extreme(const GameParams<Scalar>& params, Pool zero_pool) {
  using std::sqrt;
  const bool swapped = zero_pool == Pool::Two;
  if (eval_g(params, swapped) > Scalar(0)) {
    throw PreconditionError(swapped ? "extreme equilibrium with x2 = 0 requires g(t,p,m2,m1) <= 0"
                                    : "extreme equilibrium with x1 = 0 requires g(t,p,m1,m2) <= 0");
  }
  const Scalar mz = params.power(zero_pool);
  const Scalar mo = params.power(other(zero_pool));
  const Scalar a = mz + params.t();
  const Scalar b = mo * (params.t() + params.p() * mz);
  const Scalar attack = mz * mo / (a + sqrt(a * a + b));
  if (zero_pool == Pool::One) {
    return detail::make_equilibrium(params, EquilibriumKind::ExtremeX1Zero,
                                    StrategyPair<Scalar>{Scalar(0), attack});
  }
  return detail::make_equilibrium(params, EquilibriumKind::ExtremeX2Zero,
                                  StrategyPair<Scalar>{attack, Scalar(0)});
}

/// m1 == m2: both pools play x* = 2 m / (A + sqrt(A^2 - 8(1-p))) with
/// A = 3 - p + 2t/m. Powers closer than kSymmetricSnap are averaged.
template <typename Scalar>
Equilibrium<Scalar> solve_symmetric(const GameParams<Scalar>& params) {
  using std::abs;
  using std::sqrt;
  const Scalar m1 = params.m1();
  const Scalar m2 = params.m2();
  if (m1 != m2 && !(abs(m2 - m1) < Scalar(kSymmetricSnap) * (m1 + m2))) {
    throw PreconditionError("symmetric solver requires m1 == m2");
  }
  const Scalar mbar = (m1 + m2) / Scalar(2);
  const Scalar p = params.p();
  const Scalar a = Scalar(3) - p + Scalar(2) * params.t() / mbar;
  const Scalar x = Scalar(2) * mbar / (a + sqrt(a * a - Scalar(8) * (Scalar(1) - p)));
  return detail::make_equilibrium(params, EquilibriumKind::Symmetric, StrategyPair<Scalar>{x, x});
}

/// No outside power. Interior equilibria have y* = sqrt(m1 m2) for every p.
template <typename Scalar>
Equilibrium<Scalar> solve_binary(const GameParams<Scalar>& params) {
  using std::sqrt;
  if (params.t() != Scalar(0)) throw PreconditionError("binary solver requires t == 0");
  if (eval_g(params, false) <= Scalar(0)) return solve_extreme(params, Pool::One);
  if (eval_g(params, true) <= Scalar(0)) return solve_extreme(params, Pool::Two);
  const Scalar p = params.p();
  const Scalar q = Scalar(1) - p;
  const Scalar s1 = sqrt(params.m1());
  const Scalar s2 = sqrt(params.m2());
  const Scalar scale = s1 * s2 / ((Scalar(1) + p) * (s1 + s2));
  const StrategyPair<Scalar> profile{scale * (Scalar(2) * s1 - q * s2),
                                     scale * (Scalar(2) * s2 - q * s1)};
  return detail::make_equilibrium(params, EquilibriumKind::Binary, profile);
}

/// f(y) whose unique root in (0, (m1+m2)/2) is y* = x1* + x2* when t > 0 and
/// m1 != m2.
template <typename Scalar>
struct FQuartic {
  /// y^4, y^3, y^2, y^1, y^0.
  Eigen::Matrix<Scalar, 5, 1> coeffs;

  Scalar operator()(Scalar y) const { return detail::horner(coeffs, y); }
  Scalar derivative(Scalar y) const { return detail::horner_derivative(coeffs, y); }
};

template <typename Scalar>
FQuartic<Scalar> build_f(const GameParams<Scalar>& params) {
  const Scalar m1 = params.m1();
  const Scalar m2 = params.m2();
  const Scalar t = params.t();
  const Scalar p = params.p();
  if (m1 == m2) throw PreconditionError("quartic route requires m1 != m2");
  if (!(t > Scalar(0))) throw PreconditionError("quartic route requires t > 0");
  const Scalar q = Scalar(1) - p;
  const Scalar pp = (Scalar(1) + p) * (Scalar(1) + p);
  const Scalar sum = m1 + m2;
  const Scalar prod = m1 * m2;
  FQuartic<Scalar> f;
  f.coeffs << q * q * t,
      -q * (Scalar(4) * t * t + Scalar(4) * sum * t + pp * prod),
      Scalar(4) * t * t * t + Scalar(8) * sum * t * t
          + (Scalar(4) * m1 * m1 + Scalar(4) * m2 * m2 + Scalar(11) * prod
             + Scalar(3) * p * p * prod - Scalar(2) * p * prod) * t
          + pp * prod * sum,
      q * prod * (pp * prod - Scalar(4) * sum * t - Scalar(4) * t * t),
      -prod * prod * (pp * sum + Scalar(4) * p * t);
  return f;
}

/// The root of f in (0, (m1+m2)/2).
template <typename Scalar>
Scalar root_f(const FQuartic<Scalar>& f, Scalar m1, Scalar m2) {
  const Scalar hi = (m1 + m2) / Scalar(2);
  const Scalar f_lo = f(Scalar(0));
  const Scalar f_hi = f(hi);
  if (!(f_lo < Scalar(0) && f_hi > Scalar(0))) {
    std::ostringstream msg;
    msg << "quartic has no sign change on (0, (m1+m2)/2): f(0) = " << f_lo << ", f(mid) = " << f_hi;
    throw NumericalError(msg.str());
  }
  return detail::bracketed_root([&](Scalar y) { return f(y); },
                                [&](Scalar y) { return f.derivative(y); }, Scalar(0), hi,
                                Scalar(1e-14) * (m1 + m2));
}

/// x1* from y* via the first stationarity equation with x2 = y - x1.
template <typename Scalar>
Scalar x1_from_y(const GameParams<Scalar>& params, Scalar y) {
  const Scalar m1 = params.m1();
  const Scalar m2 = params.m2();
  if (m1 == m2) throw DomainError("x1_from_y divides by m2 - m1; use solve_symmetric");
  const Scalar q = Scalar(1) - params.p();
  const Scalar t = params.t();
  return (q * y * y - (Scalar(2) * m1 + q * m2 + Scalar(2) * t) * y + Scalar(2) * m1 * m2)
         / ((m2 - m1) * (Scalar(1) + params.p()));
}

namespace detail {

/// Residuals of the two polynomial stationarity conditions (the sum of the
/// partials and the weighted difference, with common positive factors
/// removed). Both vanish exactly where d r1/dx1 = d r2/dx2 = 0.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> stationarity_residual(const GameParams<Scalar>& params,
                                                  const StrategyPair<Scalar>& s) {
  const Scalar m1 = params.m1(), m2 = params.m2(), t = params.t(), p = params.p();
  const Scalar q = Scalar(1) - p;
  const Scalar y = s.sum();
  Eigen::Matrix<Scalar, 2, 1> r;
  r << q * y * y - Scalar(2) * t * y + Scalar(2) * (m1 * m2 - m1 * s.x2 - m2 * s.x1)
           - q * (m1 * s.x1 + m2 * s.x2),
      (Scalar(1) + p + Scalar(2) * t / m1) * s.x2 * s.x2
          + (Scalar(2) * m1 - q * m2 + Scalar(2) * t) * s.x2
          - (Scalar(1) + p + Scalar(2) * t / m2) * s.x1 * s.x1
          - (Scalar(2) * m2 - q * m1 + Scalar(2) * t) * s.x1;
  return r;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> stationarity_jacobian(const GameParams<Scalar>& params,
                                                  const StrategyPair<Scalar>& s) {
  const Scalar m1 = params.m1(), m2 = params.m2(), t = params.t(), p = params.p();
  const Scalar q = Scalar(1) - p;
  const Scalar y = s.sum();
  Eigen::Matrix<Scalar, 2, 2> j;
  j << Scalar(2) * q * y - Scalar(2) * t - Scalar(2) * m2 - q * m1,
      Scalar(2) * q * y - Scalar(2) * t - Scalar(2) * m1 - q * m2,
      -Scalar(2) * (Scalar(1) + p + Scalar(2) * t / m2) * s.x1
          - (Scalar(2) * m2 - q * m1 + Scalar(2) * t),
      Scalar(2) * (Scalar(1) + p + Scalar(2) * t / m1) * s.x2
          + (Scalar(2) * m1 - q * m2 + Scalar(2) * t);
  return j;
}

/// Newton refinement of an interior profile. Steps that leave the strategy
/// box or do not shrink the residual are rejected.
template <typename Scalar>
StrategyPair<Scalar> polish_interior(const GameParams<Scalar>& params, StrategyPair<Scalar> s) {
  Scalar res = stationarity_residual(params, s).norm();
  for (int i = 0; i < 8 && res > Scalar(0); ++i) {
    const Eigen::Matrix<Scalar, 2, 1> step =
        stationarity_jacobian(params, s).partialPivLu().solve(stationarity_residual(params, s));
    const StrategyPair<Scalar> next{s.x1 - step[0], s.x2 - step[1]};
    if (!(next.x1 > Scalar(0) && next.x1 < params.m1() && next.x2 > Scalar(0)
          && next.x2 < params.m2())) {
      break;
    }
    const Scalar next_res = stationarity_residual(params, next).norm();
    if (!(next_res < res)) break;
    s = next;
    res = next_res;
  }
  return s;
}

/// Dimensionless |d r_i / d x_i| (multiplied by m^2).
template <typename Scalar>
Scalar scaled_partial(const GameParams<Scalar>& params, const StrategyPair<Scalar>& s, Pool pool) {
  const Scalar m = params.total();
  return unchecked::d_avg_reward(params.m1(), params.m2(), params.t(), params.p(), s.x1, s.x2,
                                 pool)
         * m * m;
}

template <typename Scalar>
void check_equilibrium(const GameParams<Scalar>& params, const Equilibrium<Scalar>& eq) {
  using std::abs;
  const auto fail = [&](const std::string& what) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "equilibrium invariant violated (" << what << ") for m1=" << params.m1()
        << " m2=" << params.m2() << " t=" << params.t() << " p=" << params.p() << ": kind "
        << to_string(eq.kind) << ", profile (" << eq.profile.x1 << ", " << eq.profile.x2 << ")";
    throw InternalError(msg.str());
  };
  const auto& s = eq.profile;
  if (!(s.x1 >= Scalar(0) && s.x1 < params.m1() && s.x2 >= Scalar(0) && s.x2 < params.m2())) {
    fail("profile outside [0, m1) x [0, m2)");
  }
  const Scalar half = (params.m1() + params.m2()) / Scalar(2);
  if (eq.y_star > half * (Scalar(1) + Scalar(1e-12))) fail("x1 + x2 > (m1 + m2) / 2");
  if (!(eq.ppoa > Scalar(1) && eq.ppoa <= Scalar(2) * (Scalar(1) + Scalar(1e-12)))) {
    fail("PPoA outside (1, 2]");
  }
  // Loose first-order checks; the test suites assert the tight ones.
  const Scalar interior_tol(1e-6);
  const Scalar boundary_tol(1e-9);
  if (eq.kind == EquilibriumKind::ExtremeX1Zero) {
    if (s.x1 != Scalar(0) || !(s.x2 > Scalar(0))) fail("extreme profile shape");
    if (scaled_partial(params, s, Pool::One) > boundary_tol) fail("pool 1 gains by attacking");
    if (abs(scaled_partial(params, s, Pool::Two)) > interior_tol) fail("pool 2 not stationary");
  } else if (eq.kind == EquilibriumKind::ExtremeX2Zero) {
    if (s.x2 != Scalar(0) || !(s.x1 > Scalar(0))) fail("extreme profile shape");
    if (scaled_partial(params, s, Pool::Two) > boundary_tol) fail("pool 2 gains by attacking");
    if (abs(scaled_partial(params, s, Pool::One)) > interior_tol) fail("pool 1 not stationary");
  } else {
    if (!(s.x1 > Scalar(0) && s.x2 > Scalar(0))) fail("interior profile on the boundary");
    if (abs(scaled_partial(params, s, Pool::One)) > interior_tol
        || abs(scaled_partial(params, s, Pool::Two)) > interior_tol) {
      fail("partials do not vanish");
    }
  }
}

}  // namespace detail

/// The unique pure Nash equilibrium.
template <typename Scalar>
Equilibrium<Scalar> solve(const GameParams<Scalar>& params) {
  using std::abs;
  const bool x1_zero = eval_g(params, false) <= Scalar(0);
  const bool x2_zero = eval_g(params, true) <= Scalar(0);
  if (x1_zero && x2_zero) {
    throw InternalError("g <= 0 in both orientations; extreme equilibria cannot coexist");
  }
  Equilibrium<Scalar> eq;
  if (x1_zero) {
    eq = solve_extreme(params, Pool::One);
  } else if (x2_zero) {
    eq = solve_extreme(params, Pool::Two);
  } else if (abs(params.m2() - params.m1()) < Scalar(kSymmetricSnap) * (params.m1() + params.m2())) {
    eq = solve_symmetric(params);
  } else if (params.t() == Scalar(0)) {
    eq = solve_binary(params);
  } else {
    const Scalar y = root_f(build_f(params), params.m1(), params.m2());
    const Scalar x1 = x1_from_y(params, y);
    StrategyPair<Scalar> profile{x1, y - x1};
    if (!(profile.x1 > Scalar(0) && profile.x1 < params.m1() && profile.x2 > Scalar(0)
          && profile.x2 < params.m2())) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "quartic root gives infeasible profile (" << profile.x1 << ", " << profile.x2
          << ") although neither extreme condition holds";
      throw InternalError(msg.str());
    }
    eq = detail::make_equilibrium(params, EquilibriumKind::General,
                                  detail::polish_interior(params, profile));
  }
  detail::check_equilibrium(params, eq);
  return eq;
}

using Equilibriumd = Equilibrium<double>;

}  // namespace mdg
