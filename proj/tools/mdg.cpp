// mdg: solve, simulate, figure and verify for the miner's dilemma game.
//
// Exit codes: 0 success, 1 verification failure, 2 bad input, 3 dynamics did
// not converge.

#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mdg/dynamics.hpp"
#include "mdg/equilibrium.hpp"
#include "mdg/errors.hpp"
#include "mdg/figure.hpp"
#include "mdg/format.hpp"
#include "mdg/verify.hpp"

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kBadInput = 2, kNotConverged = 3 };

struct BadInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double parse_number(const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw BadInput("'" + text + "' is not a finite number");
  }
  return v;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number(item));
  if (out.empty()) throw BadInput("empty list");
  return out;
}

// ---- solve -----------------------------------------------------------------

struct SolveArgs {
  std::string m1, m2, t = "0", p = "0";
  bool json = false;
};

int cmd_solve(const SolveArgs& a) {
  const mdg::GameParamsd g(parse_number(a.m1), parse_number(a.m2), parse_number(a.t),
                           parse_number(a.p));
  const auto eq = mdg::solve(g);
  if (a.json) {
    nlohmann::ordered_json out;
    out["inputs"] = {{"m1", g.m1()}, {"m2", g.m2()}, {"t", g.t()}, {"p", g.p()}};
    out["kind"] = std::string(mdg::to_string(eq.kind));
    out["x1"] = eq.profile.x1;
    out["x2"] = eq.profile.x2;
    out["y_star"] = eq.y_star;
    out["ppoa"] = eq.ppoa;
    std::cout << out.dump() << '\n';
    return kOk;
  }
  using mdg::format_double;
  std::cout << "kind   " << mdg::to_string(eq.kind) << '\n'
            << "x1     " << format_double(eq.profile.x1) << '\n'
            << "x2     " << format_double(eq.profile.x2) << '\n'
            << "y_star " << format_double(eq.y_star) << '\n'
            << "ppoa   " << format_double(eq.ppoa) << '\n';
  return kOk;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string pools, t = "0", p = "0";
  double tol = 1.0 / (1 << 18);
  int max_iters = 10000;
  std::string schedule = "jacobi";
  bool csv = false;
  bool allow_nonconverged = false;
};

int cmd_simulate(const SimulateArgs& a) {
  const mdg::NGameParamsd params(parse_list(a.pools), parse_number(a.t), parse_number(a.p));
  mdg::IterateOptions<double> options;
  options.tol = a.tol;
  options.max_iters = a.max_iters;
  options.schedule = a.schedule == "roundrobin" ? mdg::Schedule::RoundRobin : mdg::Schedule::Jacobi;
  const auto result = mdg::iterate(params, options);

  using mdg::format_double;
  const Eigen::Index n = params.size();
  if (a.csv) {
    std::cout << "i,j,x,reward_i,iterations,converged,ppoa\n";
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        std::cout << i << ',' << j << ',' << format_double(result.matrix(i, j)) << ','
                  << format_double(result.rewards[i]) << ',' << result.iterations << ','
                  << (result.converged ? 1 : 0) << ',' << format_double(result.ppoa) << '\n';
      }
    }
  } else {
    std::cout << "matrix (row i infiltrates column j)\n";
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        std::cout << (j ? " " : "  ") << format_double(result.matrix(i, j));
      }
      std::cout << '\n';
    }
    std::cout << "rewards";
    for (Eigen::Index i = 0; i < n; ++i) std::cout << ' ' << format_double(result.rewards[i]);
    std::cout << "\niterations " << result.iterations << (result.converged ? "" : " (not converged)")
              << "\nppoa " << format_double(result.ppoa) << '\n';
  }
  if (!result.converged) {
    std::cerr << "mdg: dynamics did not converge after " << result.iterations
              << " sweeps (last change " << format_double(result.last_change) << ")\n";
    if (!a.allow_nonconverged) return kNotConverged;
  }
  return kOk;
}

// ---- figure ----------------------------------------------------------------

struct FigureArgs {
  std::string panel;
  std::string axis1, axis2;
  std::vector<std::string> fixed;
  std::string out_dir = ".";
  unsigned threads = 0;
  double tol = 1.0 / (1 << 18);
  int max_iters = 10000;
};

int cmd_figure(const FigureArgs& a) {
  mdg::figure::SweepSpec spec;
  try {
    spec = mdg::figure::default_sweep(mdg::figure::parse_panel(a.panel));
  } catch (const std::invalid_argument& e) {
    throw BadInput(e.what());
  }
  if (!a.axis1.empty()) spec.axes[0].values = parse_list(a.axis1);
  if (!a.axis2.empty()) spec.axes[1].values = parse_list(a.axis2);
  for (const std::string& kv : a.fixed) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw BadInput("--fixed expects name=value, got '" + kv + "'");
    const std::string name = kv.substr(0, eq);
    if (!spec.fixed.count(name)) {
      throw BadInput("'" + name + "' is not a fixed parameter of panel " + a.panel);
    }
    spec.fixed[name] = parse_number(kv.substr(eq + 1));
  }

  mdg::figure::SweepOptions options;
  options.threads = a.threads;
  options.iterate.tol = a.tol;
  options.iterate.max_iters = a.max_iters;
  const auto rows = mdg::figure::figure_sweep(spec, options);

  std::filesystem::create_directories(a.out_dir);
  const auto path = std::filesystem::path(a.out_dir) / spec.output_path;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  mdg::figure::write_csv(out, spec, rows);
  out.close();

  std::size_t failed = 0, unconverged = 0, violations = 0;
  for (const auto& row : rows) {
    failed += !row.error.empty();
    unconverged += row.error.empty() && !row.converged;
    violations += row.conjecture_violation;
  }
  std::cout << "wrote " << path.string() << " (" << rows.size() << " points, " << failed
            << " failed, " << unconverged << " not converged, " << violations
            << " conjecture violations)\n";
  return kOk;
}

// ---- verify ----------------------------------------------------------------

int cmd_verify(const mdg::verify::VerifyOptions& options) {
  const auto report = mdg::verify::run(options);
  mdg::verify::print(std::cout, report);
  return report.passed() ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool block-withholding (miner's dilemma) game"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "Two-pool equilibrium in closed form");
  solve->add_option("--m1", solve_args.m1, "Mining power of pool 1")->required();
  solve->add_option("--m2", solve_args.m2, "Mining power of pool 2")->required();
  solve->add_option("--t", solve_args.t, "Power outside both pools")->capture_default_str();
  solve->add_option("--p", solve_args.p, "Betrayal rate in [0, 1)")->capture_default_str();
  solve->add_flag("--json", solve_args.json, "Emit a single JSON object");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "N-pool best-response dynamics");
  simulate->add_option("--pools", sim_args.pools, "Comma-separated pool powers")->required();
  simulate->add_option("--t", sim_args.t, "Power outside the pools")->capture_default_str();
  simulate->add_option("--p", sim_args.p, "Betrayal rate in [0, 1)")->capture_default_str();
  simulate->add_option("--tol", sim_args.tol, "L1 change per sweep that counts as converged")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--max-iters", sim_args.max_iters, "Sweep limit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--schedule", sim_args.schedule, "Update schedule")
      ->check(CLI::IsMember({"jacobi", "roundrobin"}))
      ->capture_default_str();
  simulate->add_flag("--csv", sim_args.csv, "One CSV row per ordered pool pair");
  simulate->add_flag("--allow-nonconverged", sim_args.allow_nonconverged,
                     "Exit 0 even if the sweep limit is hit");

  FigureArgs fig_args;
  auto* figure = app.add_subcommand("figure", "Three-pool PPoA sweep for one panel");
  figure->add_option("--panel", fig_args.panel, "One of a, b, c, d, e, f")->required();
  figure->add_option("--axis1", fig_args.axis1, "Comma-separated values for the first axis");
  figure->add_option("--axis2", fig_args.axis2, "Comma-separated values for the second axis");
  figure->add_option("--fixed", fig_args.fixed, "Override a fixed parameter, name=value");
  figure->add_option("--out-dir", fig_args.out_dir, "Directory for figure_<panel>.csv")
      ->capture_default_str();
  figure->add_option("--threads", fig_args.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
  figure->add_option("--tol", fig_args.tol, "Convergence threshold")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  figure->add_option("--max-iters", fig_args.max_iters, "Sweep limit per point")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  mdg::verify::VerifyOptions ver_args;
  auto* verify = app.add_subcommand("verify", "Randomised checks against brute-force oracles");
  verify->add_option("--cases", ver_args.cases, "Random instances")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  verify->add_option("--seed", ver_args.seed, "RNG seed")->capture_default_str();
  verify->add_option("--resolution", ver_args.grid.resolution, "Oracle grid points per axis")
      ->capture_default_str();
  verify->add_option("--rounds", ver_args.grid.refinement_rounds, "Oracle zoom rounds")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*solve) return cmd_solve(solve_args);
    if (*simulate) return cmd_simulate(sim_args);
    if (*figure) return cmd_figure(fig_args);
    ver_args.grid.validate();
    return cmd_verify(ver_args);
  } catch (const BadInput& e) {
    std::cerr << "mdg: " << e.what() << '\n';
    return kBadInput;
  } catch (const mdg::DomainError& e) {
    std::cerr << "mdg: invalid parameters: " << e.what() << '\n';
    return kBadInput;
  } catch (const mdg::PreconditionError& e) {
    std::cerr << "mdg: invalid parameters: " << e.what() << '\n';
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "mdg: " << e.what() << '\n';
    return kVerifyFailed;
  }
}
