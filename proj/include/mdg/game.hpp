#pragma once

// Two-pool block-withholding game with betrayal: parameters, strategy
// profiles, rewards and the analytic partials of the average rewards.
//
// Everything is templated on the scalar type. The library itself works in
// double; the oracles re-evaluate the same formulas in long double.

#include <cmath>
#include <sstream>
#include <string>

#include "mdg/errors.hpp"

namespace mdg {

enum class Pool { One = 1, Two = 2 };

constexpr Pool other(Pool pool) { return pool == Pool::One ? Pool::Two : Pool::One; }

template <typename Scalar>
class GameParams {
 public:
  /// Throws DomainError unless m1 > 0, m2 > 0, t >= 0 and 0 <= p < 1.
  GameParams(Scalar m1, Scalar m2, Scalar t, Scalar p) : m1_(m1), m2_(m2), t_(t), p_(p) {
    using std::isfinite;
    if (!(isfinite(m1) && isfinite(m2) && isfinite(t) && isfinite(p))) {
      throw DomainError("game parameters must be finite");
    }
    if (!(m1 > Scalar(0))) throw DomainError("m1 must be > 0");
    if (!(m2 > Scalar(0))) throw DomainError("m2 must be > 0");
    if (!(t >= Scalar(0))) throw DomainError("t must be >= 0");
    if (!(p >= Scalar(0) && p < Scalar(1))) throw DomainError("p must lie in [0, 1)");
  }

  Scalar m1() const { return m1_; }
  Scalar m2() const { return m2_; }
  Scalar t() const { return t_; }
  Scalar p() const { return p_; }
  Scalar power(Pool pool) const { return pool == Pool::One ? m1_ : m2_; }

  /// m = m1 + m2 + t.
  Scalar total() const { return m1_ + m2_ + t_; }

  GameParams swapped() const { return GameParams(m2_, m1_, t_, p_); }

  /// Every power multiplied by alpha; p is dimensionless and unchanged.
  GameParams scaled(Scalar alpha) const {
    return GameParams(alpha * m1_, alpha * m2_, alpha * t_, p_);
  }

  template <typename NewScalar>
  GameParams<NewScalar> cast() const {
    return GameParams<NewScalar>(NewScalar(m1_), NewScalar(m2_), NewScalar(t_), NewScalar(p_));
  }

  friend bool operator==(const GameParams&, const GameParams&) = default;

 private:
  Scalar m1_, m2_, t_, p_;
};

template <typename Scalar>
struct StrategyPair {
  Scalar x1{};
  Scalar x2{};

  Scalar operator[](Pool pool) const { return pool == Pool::One ? x1 : x2; }
  Scalar sum() const { return x1 + x2; }
  StrategyPair swapped() const { return {x2, x1}; }

  template <typename NewScalar>
  StrategyPair<NewScalar> cast() const {
    return {NewScalar(x1), NewScalar(x2)};
  }

  friend bool operator==(const StrategyPair&, const StrategyPair&) = default;
};

/// Raw formulas over plain scalars. No validation; p = 1 is allowed here and
/// nowhere else.
namespace unchecked {

template <typename Scalar>
Scalar effective_power(Scalar m1, Scalar m2, Scalar t, Scalar p, Scalar x1, Scalar x2) {
  return (m1 + m2 + t) - (Scalar(1) - p) * (x1 + x2);
}

template <typename Scalar>
Scalar direct_reward(Scalar m1, Scalar m2, Scalar t, Scalar p, Scalar x1, Scalar x2, Pool pool) {
  if (pool == Pool::Two) return direct_reward(m2, m1, t, p, x2, x1, Pool::One);
  return (m1 - x1 + p * x2) / effective_power(m1, m2, t, p, x1, x2);
}

/// Closed-form solution of r1 (m1 + x2) = R1 + x1 r2, r2 (m2 + x1) = R2 + x2 r1.
template <typename Scalar>
Scalar avg_reward(Scalar m1, Scalar m2, Scalar t, Scalar p, Scalar x1, Scalar x2, Pool pool) {
  if (pool == Pool::Two) return avg_reward(m2, m1, t, p, x2, x1, Pool::One);
  const Scalar q = Scalar(1) - p;
  const Scalar numer = m1 * m2 + m1 * x1 + p * m2 * x2 - q * x1 * x1 - q * x1 * x2;
  const Scalar shares = m1 * m2 + m1 * x1 + m2 * x2;
  return numer / (effective_power(m1, m2, t, p, x1, x2) * shares);
}

/// d r_pool / d x_pool.
template <typename Scalar>
Scalar d_avg_reward(Scalar m1, Scalar m2, Scalar t, Scalar p, Scalar x1, Scalar x2, Pool pool) {
  if (pool == Pool::Two) return d_avg_reward(m2, m1, t, p, x2, x1, Pool::One);
  const Scalar q = Scalar(1) - p;
  const Scalar m = m1 + m2 + t;
  const Scalar y = x1 + x2;
  const Scalar inner = q * (m2 * x2 * y * y + m1 * m2 * x1 * x1)
                       + m1 * m1 * (m2 + x1) * (m2 + x1)
                       + p * m2 * m2 * x2 * x2
                       - m * m2 * x2 * (Scalar(2) * x1 + x2)
                       + m1 * (m2 * ((Scalar(1) + p) * m2 * x2 + Scalar(2) * x1 * x2)
                               - m * x1 * (Scalar(2) * m2 + x1));
  const Scalar eff = effective_power(m1, m2, t, p, x1, x2);
  const Scalar shares = m1 * m2 + m1 * x1 + m2 * x2;
  return q * inner / (eff * eff * shares * shares);
}

}  // namespace unchecked

namespace detail {

template <typename Scalar>
void check_profile(const GameParams<Scalar>& params, const StrategyPair<Scalar>& s) {
  using std::isfinite;
  if (!isfinite(s.x1) || !isfinite(s.x2)) throw DomainError("strategy must be finite");
  if (s.x1 < Scalar(0) || s.x1 > params.m1()) {
    std::ostringstream msg;
    msg << "x1 = " << s.x1 << " outside [0, m1 = " << params.m1() << "]";
    throw DomainError(msg.str());
  }
  if (s.x2 < Scalar(0) || s.x2 > params.m2()) {
    std::ostringstream msg;
    msg << "x2 = " << s.x2 << " outside [0, m2 = " << params.m2() << "]";
    throw DomainError(msg.str());
  }
  const Scalar eff = unchecked::effective_power(params.m1(), params.m2(), params.t(), params.p(),
                                                s.x1, s.x2);
  if (!(eff > Scalar(0))) {
    throw DomainError("effective mining power m - (1-p)(x1+x2) must be > 0");
  }
}

}  // namespace detail

template <typename Scalar>
Scalar effective_power(const GameParams<Scalar>& params, const StrategyPair<Scalar>& s) {
  return unchecked::effective_power(params.m1(), params.m2(), params.t(), params.p(), s.x1, s.x2);
}

/// Share R_pool of the block reward paid by the network to the pool.
template <typename Scalar>
Scalar direct_reward(const GameParams<Scalar>& params, const StrategyPair<Scalar>& s, Pool pool) {
  detail::check_profile(params, s);
  return unchecked::direct_reward(params.m1(), params.m2(), params.t(), params.p(), s.x1, s.x2,
                                  pool);
}

/// Reward per unit of mining power r_pool, including what infiltrators
/// bring back from the other pool.
template <typename Scalar>
Scalar avg_reward(const GameParams<Scalar>& params, const StrategyPair<Scalar>& s, Pool pool) {
  detail::check_profile(params, s);
  return unchecked::avg_reward(params.m1(), params.m2(), params.t(), params.p(), s.x1, s.x2, pool);
}

template <typename Scalar>
Scalar d_avg_reward(const GameParams<Scalar>& params, const StrategyPair<Scalar>& s, Pool pool) {
  detail::check_profile(params, s);
  return unchecked::d_avg_reward(params.m1(), params.m2(), params.t(), params.p(), s.x1, s.x2,
                                 pool);
}

using GameParamsd = GameParams<double>;
using StrategyPaird = StrategyPair<double>;

}  // namespace mdg
