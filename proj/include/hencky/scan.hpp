#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hencky/error.hpp"
#include "hencky/parallel.hpp"

namespace hencky {

enum class Spacing { Linear, Log };

/// One scanned variable: count points from lo to hi inclusive.
struct Axis {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  std::size_t count = 2;
  Spacing spacing = Spacing::Linear;

  void validate() const {
    if (!(lo < hi)) throw Error(ErrorCode::InvalidGrid, name + ": need lo < hi");
    if (count < 2) throw Error(ErrorCode::InvalidGrid, name + ": need count >= 2");
    if (spacing == Spacing::Log && !(lo > 0.0)) throw Error(ErrorCode::InvalidGrid, name + ": log spacing needs lo > 0");
  }

  double at(std::size_t i) const {
    if (i + 1 == count) return hi;
    const double s = static_cast<double>(i) / static_cast<double>(count - 1);
    if (spacing == Spacing::Log) return std::exp(std::log(lo) + s * (std::log(hi) - std::log(lo)));
    return lo + s * (hi - lo);
  }

  std::string spec() const;

  /// "lo:hi:count[:log]", numbers may be fractions like 1/3.
  static Axis parse(std::string name, std::string_view text);
};

/// Parses a decimal number or a fraction "p/q".
inline double parse_number(std::string_view text) {
  auto one = [&](std::string_view t) {
    double v = 0.0;
    const auto* end = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(t.data(), end, v);
    if (ec != std::errc() || ptr != end || t.empty())
      throw Error(ErrorCode::ParseError, "not a number: '" + std::string(text) + "'");
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return one(text);
  const double den = one(text.substr(slash + 1));
  if (den == 0.0) throw Error(ErrorCode::ParseError, "zero denominator in '" + std::string(text) + "'");
  return one(text.substr(0, slash)) / den;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string Axis::spec() const {
  return name + "=" + format_number(lo) + ":" + format_number(hi) + ":" + std::to_string(count) +
         (spacing == Spacing::Log ? ":log" : "");
}

inline Axis Axis::parse(std::string name, std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(':', start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (parts.size() != 3 && parts.size() != 4)
    throw Error(ErrorCode::ParseError, "grid must be lo:hi:count[:log], got '" + std::string(text) + "'");
  Axis a;
  a.name = std::move(name);
  a.lo = parse_number(parts[0]);
  a.hi = parse_number(parts[1]);
  const double c = parse_number(parts[2]);
  if (!(c >= 0.0) || c != std::floor(c)) throw Error(ErrorCode::ParseError, "grid count must be a whole number");
  a.count = static_cast<std::size_t>(c);
  if (parts.size() == 4) {
    if (parts[3] == "log")
      a.spacing = Spacing::Log;
    else if (parts[3] == "lin")
      a.spacing = Spacing::Linear;
    else
      throw Error(ErrorCode::ParseError, "grid spacing must be 'log' or 'lin'");
  }
  a.validate();
  return a;
}

/// Tensor-product grid; flat index runs fastest along the last axis.
struct ScanGrid {
  std::vector<Axis> axes;

  ScanGrid() = default;
  ScanGrid(std::initializer_list<Axis> a) : axes(a) {}

  void validate() const {
    if (axes.empty()) throw Error(ErrorCode::InvalidGrid, "grid has no axes");
    for (const auto& a : axes) a.validate();
  }

  std::size_t total() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.count;
    return n;
  }

  std::vector<std::size_t> unflatten(std::size_t flat) const {
    std::vector<std::size_t> idx(axes.size());
    for (std::size_t d = axes.size(); d-- > 0;) {
      idx[d] = flat % axes[d].count;
      flat /= axes[d].count;
    }
    return idx;
  }

  std::vector<double> point(std::size_t flat) const {
    const auto idx = unflatten(flat);
    std::vector<double> p(axes.size());
    for (std::size_t d = 0; d < axes.size(); ++d) p[d] = axes[d].at(idx[d]);
    return p;
  }

  std::string spec() const {
    std::string s;
    for (const auto& a : axes) s += (s.empty() ? "" : " ") + a.spec();
    return s;
  }
};

enum class Verdict { Holds, Fails, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "Holds";
    case Verdict::Fails: return "Fails";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct Violation {
  std::vector<double> point;
  double value = 0.0;
  double margin = 0.0;
};

/// Result of checking one claim over a grid or a sample set. A point is a
/// violation when its normalized margin is below -tolerance.
struct ScanReport {
  static constexpr std::size_t kStoredViolations = 64;

  std::string claim;
  std::map<std::string, double> parameters;
  std::vector<std::string> coordinates;
  std::string grid_spec;
  double tolerance = 0.0;
  std::size_t points_tested = 0;
  std::size_t skipped = 0;
  std::size_t violation_count = 0;
  std::vector<Violation> violations;
  double min_margin = std::numeric_limits<double>::infinity();
  std::vector<double> min_margin_point;
  Verdict verdict = Verdict::Inconclusive;

  const Violation* witness() const { return violations.empty() ? nullptr : &violations.front(); }

  void add(const std::vector<double>& point, double value, double margin) {
    ++points_tested;
    if (min_margin_point.empty() || margin < min_margin) {
      min_margin = margin;
      min_margin_point = point;
    }
    if (margin < -tolerance) {
      ++violation_count;
      if (violations.size() < kStoredViolations) violations.push_back({point, value, margin});
    }
  }

  void skip() { ++skipped; }

  void finalize() {
    if (violation_count > 0)
      verdict = Verdict::Fails;
    else if (points_tested == 0)
      verdict = Verdict::Inconclusive;
    else
      verdict = Verdict::Holds;
  }
};

/// Outcome of one scanned point: tested with (value, margin) or skipped.
struct PointResult {
  static constexpr int kMaxCoords = 4;
  bool tested = false;
  double value = 0.0;
  double margin = 0.0;
  std::array<double, kMaxCoords> coords{};
  int ncoords = 0;

  static PointResult skipped() { return {}; }
  static PointResult of(double value, double margin, std::initializer_list<double> coords) {
    PointResult r;
    r.tested = true;
    r.value = value;
    r.margin = margin;
    for (double c : coords) {
      if (r.ncoords < kMaxCoords) r.coords[r.ncoords++] = c;
    }
    return r;
  }
};

/// Evaluates fn(i) for i < n in parallel and folds the results into the
/// report in index order.
template <class Fn>
void run_indexed(ScanReport& report, std::size_t n, Fn&& fn) {
  const std::vector<PointResult> results = parallel_map<PointResult>(n, fn);
  for (const PointResult& r : results) {
    if (!r.tested) {
      report.skip();
      continue;
    }
    report.add(std::vector<double>(r.coords.begin(), r.coords.begin() + r.ncoords), r.value, r.margin);
  }
  report.finalize();
}

/// Grid version: fn receives the point coordinates, which are recorded unless
/// fn reports its own.
template <class Fn>
void run_grid(ScanReport& report, const ScanGrid& grid, Fn&& fn) {
  grid.validate();
  report.grid_spec = grid.spec();
  report.coordinates.clear();
  for (const auto& a : grid.axes) report.coordinates.push_back(a.name);
  run_indexed(report, grid.total(), [&](std::size_t i) {
    const std::vector<double> p = grid.point(i);
    PointResult r = fn(p);
    if (r.tested && r.ncoords == 0) {
      for (double c : p)
        if (r.ncoords < PointResult::kMaxCoords) r.coords[r.ncoords++] = c;
    }
    return r;
  });
}

/// margin = value / scale with a floor on the scale.
inline double normalized(double value, double scale) {
  return value / std::max(scale, 1e-300);
}

}  // namespace hencky
