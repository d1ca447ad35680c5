#pragma once

// Three-pool parameter sweeps behind the PPoA heat-map panels a-f.
//
// Panel   swept axes        fixed
//   a     m1 x m2           m0 = 32, t = 0,  p = 0
//   b     m1 x m2           m0 = 32, t = 32, p = 0
//   c     m0_m1 x m2        t = 0, p = 0            (m0 = m1 move together)
//   d     m0_m1_m2 x t      p = 0                   (all pools equal)
//   e     m2 x t            m0 = m1 = 32, p = 0
//   f     p x t             m0 = m1 = m2 = 32

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mdg/dynamics.hpp"

namespace mdg::figure {

enum class Panel { A, B, C, D, E, F };

/// "a".."f" (case-insensitive); throws std::invalid_argument otherwise.
Panel parse_panel(std::string_view text);
char panel_letter(Panel panel);

struct Axis {
  std::string name;
  std::vector<double> values;
};

/// Axis and fixed-parameter names: m0, m1, m2, m0_m1 (sets m0 and m1),
/// m0_m1_m2 (sets all three), t, p.
struct SweepSpec {
  std::vector<Axis> axes;
  std::map<std::string, double> fixed;
  std::string output_path;
};

/// 2^0 .. 2^8.
std::vector<double> default_power_axis();
/// 0, 16, ..., 240.
std::vector<double> default_t_axis();
/// k / 16 for k = 0..15.
std::vector<double> default_p_axis();

SweepSpec default_sweep(Panel panel);

/// Three-pool parameters at one grid point; throws DomainError for invalid
/// combinations and std::invalid_argument for unknown names.
NGameParamsd point_params(const SweepSpec& spec, const std::vector<double>& coords);

struct SweepRow {
  std::vector<double> coords;
  double ppoa = 0.0;
  int iterations = 0;
  bool converged = false;
  /// PPoA outside (1, 2 + 1e-6].
  bool conjecture_violation = false;
  /// Empty unless the point could not be evaluated.
  std::string error;
};

struct SweepOptions {
  IterateOptions<double> iterate{};
  /// 0 uses std::thread::hardware_concurrency().
  unsigned threads = 0;
};

/// Runs the dynamics at every grid point (first axis outermost). Points may
/// run concurrently; rows come back in grid order regardless.
std::vector<SweepRow> figure_sweep(const SweepSpec& spec, const SweepOptions& options = {});

/// Header: axis names, then ppoa,iterations,converged,conjecture_violation,error.
void write_csv(std::ostream& out, const SweepSpec& spec, const std::vector<SweepRow>& rows);

}  // namespace mdg::figure
