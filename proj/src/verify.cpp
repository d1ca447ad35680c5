#include "mdg/verify.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <optional>
#include <ostream>

#include "mdg/equilibrium.hpp"
#include "mdg/format.hpp"

namespace mdg::verify {

GameParamsd draw_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> log_power(-2.0, 8.0);
  std::uniform_real_distribution<double> outside(0.0, 256.0);
  std::uniform_real_distribution<double> betrayal(0.0, 0.95);
  std::uniform_int_distribution<int> branch(0, 7);
  const double m1 = std::exp2(log_power(rng));
  double m2 = std::exp2(log_power(rng));
  double t = outside(rng);
  const double p = betrayal(rng);
  switch (branch(rng)) {
    case 0: t = 0.0; break;
    case 1: m2 = m1; break;
    default: break;
  }
  return GameParamsd(m1, m2, t, p);
}

std::string describe(const GameParamsd& params) {
  return "m1=" + format_double(params.m1()) + " m2=" + format_double(params.m2())
         + " t=" + format_double(params.t()) + " p=" + format_double(params.p());
}

bool VerifyReport::passed() const {
  return std::all_of(properties.begin(), properties.end(),
                     [](const PropertyResult& p) { return p.passed(); });
}

namespace {

using Check = std::optional<std::string>;

std::string fmt(double v) { return format_double(v); }

double scale_of(const GameParamsd& g) { return g.total(); }

Check check_dispatch(const GameParamsd& g, const Equilibriumd& eq) {
  const bool x1_zero = eval_g(g, false) <= 0.0;
  const bool x2_zero = eval_g(g, true) <= 0.0;
  if (x1_zero && x2_zero) return "g <= 0 in both orientations";
  if (x1_zero != (eq.kind == EquilibriumKind::ExtremeX1Zero)
      || x2_zero != (eq.kind == EquilibriumKind::ExtremeX2Zero)) {
    return "kind " + std::string(to_string(eq.kind)) + " disagrees with the sign of g";
  }
  return std::nullopt;
}

Check check_bounds(const GameParamsd& g, const Equilibriumd& eq) {
  const double half = (g.m1() + g.m2()) / 2.0;
  if (!(eq.ppoa > 1.0 && eq.ppoa <= 2.0)) return "ppoa " + fmt(eq.ppoa) + " outside (1, 2]";
  if (eq.ppoa > 2.0 / (1.0 + g.p()) + 1e-9) return "ppoa " + fmt(eq.ppoa) + " > 2/(1+p)";
  if (eq.y_star > half + 1e-9 * scale_of(g)) return "y* " + fmt(eq.y_star) + " > (m1+m2)/2";
  return std::nullopt;
}

Check check_first_order(const GameParamsd& g, const Equilibriumd& eq) {
  const double m2 = scale_of(g) * scale_of(g);
  const double d1 = unchecked::d_avg_reward(g.m1(), g.m2(), g.t(), g.p(), eq.profile.x1,
                                            eq.profile.x2, Pool::One) * m2;
  const double d2 = unchecked::d_avg_reward(g.m1(), g.m2(), g.t(), g.p(), eq.profile.x1,
                                            eq.profile.x2, Pool::Two) * m2;
  switch (eq.kind) {
    case EquilibriumKind::ExtremeX1Zero:
      if (d1 > 1e-10) return "pool 1 gains at x1 = 0 (scaled partial " + fmt(d1) + ")";
      if (std::abs(d2) > 1e-8) return "pool 2 partial " + fmt(d2) + " does not vanish";
      break;
    case EquilibriumKind::ExtremeX2Zero:
      if (d2 > 1e-10) return "pool 2 gains at x2 = 0 (scaled partial " + fmt(d2) + ")";
      if (std::abs(d1) > 1e-8) return "pool 1 partial " + fmt(d1) + " does not vanish";
      break;
    default:
      if (std::abs(d1) > 1e-8 || std::abs(d2) > 1e-8) {
        return "scaled partials (" + fmt(d1) + ", " + fmt(d2) + ") do not vanish";
      }
  }
  return std::nullopt;
}

}  // namespace

VerifyReport run(const VerifyOptions& options) {
  VerifyReport report;
  report.seed = options.seed;
  report.cases = options.cases;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  enum { kDispatch, kBounds, kFirstOrder, kGrid, kUnique, kDeriv, kConcave, kFixedPoint, kScaling };
  for (const char* name :
       {"dispatch-exclusive", "ppoa-and-sum-bounds", "first-order-conditions",
        "grid-best-response-agreement", "uniqueness-single-cluster",
        "derivative-vs-finite-difference", "concavity", "reward-fixed-point-consistency",
        "scaling-equivariance"}) {
    report.properties.push_back(PropertyResult{name, 0, 0, {}});
  }

  for (int c = 0; c < options.cases; ++c) {
    const GameParamsd g = draw_params(rng);
    const auto record = [&](int which, const std::function<Check()>& body) {
      PropertyResult& prop = report.properties[static_cast<std::size_t>(which)];
      ++prop.checks;
      Check failure;
      try {
        failure = body();
      } catch (const std::exception& e) {
        failure = std::string("exception: ") + e.what();
      }
      if (failure) {
        if (prop.failures++ == 0) {
          prop.first_failure = "case " + std::to_string(c) + " " + describe(g) + ": " + *failure;
        }
      }
    };

    std::optional<Equilibriumd> eq;
    record(kDispatch, [&]() -> Check {
      eq = solve(g);
      return check_dispatch(g, *eq);
    });
    // Checks against the closed form; the derivative-level ones below do not need it.
    const auto with_eq = [&](int which, const std::function<Check()>& body) {
      if (eq) {
        record(which, body);
      } else {
        record(which, [] { return Check("solve failed"); });
      }
    };
    with_eq(kBounds, [&] { return check_bounds(g, *eq); });
    with_eq(kFirstOrder, [&] { return check_first_order(g, *eq); });
    with_eq(kGrid, [&]() -> Check {
      const auto gap = oracle::grid_fixed_point_gap(g, eq->profile, options.grid);
      if (gap.within_one_cell()) return std::nullopt;
      return "grid best responses are (" + fmt(gap.gap1 / gap.width1) + ", "
             + fmt(gap.gap2 / gap.width2) + ") cells away";
    });
    with_eq(kUnique, [&]() -> Check {
      const auto found = oracle::exhaustive_equilibrium(g, options.grid);
      if (found.clusters.size() != 1) {
        return std::to_string(found.clusters.size()) + " equilibrium clusters";
      }
      if (!found.clusters.front().contains(eq->profile)) {
        return "cluster around (" + fmt(found.clusters.front().center.x1) + ", "
               + fmt(found.clusters.front().center.x2) + ") misses the closed form";
      }
      return std::nullopt;
    });

    // Random interior profiles for the derivative-level checks.
    for (int k = 0; k < 5; ++k) {
      const StrategyPaird s{g.m1() * (0.01 + 0.98 * unit(rng)), g.m2() * (0.01 + 0.98 * unit(rng))};
      const double m = scale_of(g);
      for (Pool pool : {Pool::One, Pool::Two}) {
        record(kDeriv, [&]() -> Check {
          const double analytic = d_avg_reward(g, s, pool);
          const double fd = oracle::fd_derivative(g, s, pool, 1e-6 * (g.m1() + g.m2()));
          const double floor = 1e-6 / (m * m);
          if (std::abs(fd - analytic) <= 1e-6 * std::max(std::abs(analytic), floor)) {
            return std::nullopt;
          }
          return "analytic " + fmt(analytic) + " vs finite difference " + fmt(fd);
        });
        record(kConcave, [&]() -> Check {
          const double h = 1e-4 * g.power(pool);
          const double second = oracle::fd_second_derivative(g, s, pool, h) * m * m * m;
          if (second <= 1e-8) return std::nullopt;
          return "scaled second difference " + fmt(second) + " > 1e-8";
        });
      }
      record(kFixedPoint, [&]() -> Check {
        const auto r = oracle::linear_system_rewards(g, s);
        const double r1 = avg_reward(g, s, Pool::One);
        const double r2 = avg_reward(g, s, Pool::Two);
        const double res1 = r1 * (g.m1() + s.x2) - direct_reward(g, s, Pool::One) - s.x1 * r2;
        if (std::abs(r[0] - r1) > 1e-12 * std::abs(r1) || std::abs(r[1] - r2) > 1e-12 * std::abs(r2)
            || std::abs(res1) > 1e-12) {
          return "closed-form rewards (" + fmt(r1) + ", " + fmt(r2) + ") vs linear system ("
                 + fmt(r[0]) + ", " + fmt(r[1]) + ")";
        }
        return std::nullopt;
      });
    }

    with_eq(kScaling, [&]() -> Check {
      for (double alpha : {1e-3, 1e3}) {
        const Equilibriumd scaled = solve(g.scaled(alpha));
        const double tol = 1e-9 * alpha * (g.m1() + g.m2());
        if (scaled.kind != eq->kind || std::abs(scaled.profile.x1 - alpha * eq->profile.x1) > tol
            || std::abs(scaled.profile.x2 - alpha * eq->profile.x2) > tol
            || std::abs(scaled.ppoa - eq->ppoa) > 1e-9) {
          return "alpha=" + fmt(alpha) + " gives (" + fmt(scaled.profile.x1) + ", "
                 + fmt(scaled.profile.x2) + "), ppoa " + fmt(scaled.ppoa);
        }
      }
      return std::nullopt;
    });
  }
  return report;
}

void print(std::ostream& out, const VerifyReport& report) {
  out << "seed " << report.seed << ", " << report.cases << " cases\n";
  for (const PropertyResult& p : report.properties) {
    out << (p.passed() ? "PASS " : "FAIL ") << p.name << " (" << p.checks << " checks";
    if (!p.passed()) out << ", " << p.failures << " failed";
    out << ")\n";
    if (!p.passed()) out << "  first failure: " << p.first_failure << '\n';
  }
  out << (report.passed() ? "all properties passed\n" : "verification FAILED\n");
}

}  // namespace mdg::verify
