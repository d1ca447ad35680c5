#include "mdg/figure.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "mdg/format.hpp"

namespace mdg::figure {

Panel parse_panel(std::string_view text) {
  if (text.size() == 1) {
    switch (std::tolower(static_cast<unsigned char>(text[0]))) {
      case 'a': return Panel::A;
      case 'b': return Panel::B;
      case 'c': return Panel::C;
      case 'd': return Panel::D;
      case 'e': return Panel::E;
      case 'f': return Panel::F;
      default: break;
    }
  }
  throw std::invalid_argument("panel must be one of a, b, c, d, e, f");
}

char panel_letter(Panel panel) { return static_cast<char>('a' + static_cast<int>(panel)); }

std::vector<double> default_power_axis() {
  std::vector<double> out;
  for (int k = 0; k <= 8; ++k) out.push_back(static_cast<double>(1 << k));
  return out;
}

std::vector<double> default_t_axis() {
  std::vector<double> out;
  for (int k = 0; k < 16; ++k) out.push_back(16.0 * k);
  return out;
}

std::vector<double> default_p_axis() {
  std::vector<double> out;
  for (int k = 0; k < 16; ++k) out.push_back(k / 16.0);
  return out;
}

SweepSpec default_sweep(Panel panel) {
  SweepSpec spec;
  spec.output_path = std::string("figure_") + panel_letter(panel) + ".csv";
  const auto powers = default_power_axis();
  const auto ts = default_t_axis();
  switch (panel) {
    case Panel::A:
      spec.axes = {{"m1", powers}, {"m2", powers}};
      spec.fixed = {{"m0", 32.0}, {"t", 0.0}, {"p", 0.0}};
      break;
    case Panel::B:
      spec.axes = {{"m1", powers}, {"m2", powers}};
      spec.fixed = {{"m0", 32.0}, {"t", 32.0}, {"p", 0.0}};
      break;
    case Panel::C:
      spec.axes = {{"m0_m1", powers}, {"m2", powers}};
      spec.fixed = {{"t", 0.0}, {"p", 0.0}};
      break;
    case Panel::D:
      spec.axes = {{"m0_m1_m2", powers}, {"t", ts}};
      spec.fixed = {{"p", 0.0}};
      break;
    case Panel::E:
      spec.axes = {{"m2", powers}, {"t", ts}};
      spec.fixed = {{"m0", 32.0}, {"m1", 32.0}, {"p", 0.0}};
      break;
    case Panel::F:
      spec.axes = {{"p", default_p_axis()}, {"t", ts}};
      spec.fixed = {{"m0_m1_m2", 32.0}};
      break;
  }
  return spec;
}

namespace {

struct PointValues {
  double m[3] = {0.0, 0.0, 0.0};
  double t = 0.0;
  double p = 0.0;
};

void assign(PointValues& v, const std::string& name, double value) {
  if (name == "m0") {
    v.m[0] = value;
  } else if (name == "m1") {
    v.m[1] = value;
  } else if (name == "m2") {
    v.m[2] = value;
  } else if (name == "m0_m1") {
    v.m[0] = v.m[1] = value;
  } else if (name == "m0_m1_m2") {
    v.m[0] = v.m[1] = v.m[2] = value;
  } else if (name == "t") {
    v.t = value;
  } else if (name == "p") {
    v.p = value;
  } else {
    throw std::invalid_argument("unknown sweep parameter '" + name + "'");
  }
}

std::vector<std::vector<double>> grid_points(const SweepSpec& spec) {
  std::vector<std::vector<double>> points{{}};
  for (const Axis& axis : spec.axes) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : points) {
      for (double v : axis.values) {
        auto point = prefix;
        point.push_back(v);
        next.push_back(std::move(point));
      }
    }
    points = std::move(next);
  }
  return points;
}

SweepRow evaluate(const SweepSpec& spec, const std::vector<double>& coords,
                  const IterateOptions<double>& options) {
  SweepRow row;
  row.coords = coords;
  try {
    const auto result = iterate(point_params(spec, coords), options);
    row.ppoa = result.ppoa;
    row.iterations = result.iterations;
    row.converged = result.converged;
    row.conjecture_violation = !(result.ppoa > 1.0 && result.ppoa <= 2.0 + 1e-6);
  } catch (const std::exception& e) {
    row.ppoa = std::numeric_limits<double>::quiet_NaN();
    row.error = e.what();
  }
  return row;
}

}  // namespace

NGameParamsd point_params(const SweepSpec& spec, const std::vector<double>& coords) {
  if (coords.size() != spec.axes.size()) {
    throw std::invalid_argument("grid point has the wrong number of coordinates");
  }
  PointValues v;
  for (const auto& [name, value] : spec.fixed) assign(v, name, value);
  for (std::size_t k = 0; k < coords.size(); ++k) assign(v, spec.axes[k].name, coords[k]);
  return NGameParamsd(std::vector<double>{v.m[0], v.m[1], v.m[2]}, v.t, v.p);
}

std::vector<SweepRow> figure_sweep(const SweepSpec& spec, const SweepOptions& options) {
  if (spec.axes.empty()) throw std::invalid_argument("sweep needs at least one axis");
  for (const Axis& axis : spec.axes) {
    if (axis.values.empty()) throw std::invalid_argument("axis '" + axis.name + "' is empty");
  }
  const auto points = grid_points(spec);
  std::vector<SweepRow> rows(points.size());
  unsigned threads = options.threads != 0 ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp(threads, 1u, static_cast<unsigned>(std::max<std::size_t>(points.size(), 1)));

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < points.size(); k = next++) {
      rows[k] = evaluate(spec, points[k], options.iterate);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  return rows;
}

namespace {

std::string csv_escape(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

void write_csv(std::ostream& out, const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  for (const Axis& axis : spec.axes) out << axis.name << ',';
  out << "ppoa,iterations,converged,conjecture_violation,error\n";
  for (const SweepRow& row : rows) {
    for (double c : row.coords) out << format_double(c) << ',';
    out << format_double(row.ppoa) << ',' << row.iterations << ',' << (row.converged ? 1 : 0)
        << ',' << (row.conjecture_violation ? 1 : 0) << ',' << csv_escape(row.error) << '\n';
  }
}

}  // namespace mdg::figure
