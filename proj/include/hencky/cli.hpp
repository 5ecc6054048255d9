////////////////////////////////////////////////////////////////////////////////
// cli.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Command-line front end. run() takes the arguments after the program name
//  and returns the exit code, so tests can drive it in-process.
//
//  Exit codes: 0 ok, 1 a claim expected to hold failed, 2 usage/config/IO
//  error, 3 det F <= 0 on a stress request, 4 no feasible start, 5 solver
//  not converged.
*///////////////////////////////////////////////////////////////////////////////
#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hencky/coercivity.hpp"
#include "hencky/convexity.hpp"
#include "hencky/energy.hpp"
#include "hencky/io.hpp"
#include "hencky/parallel.hpp"
#include "hencky/solver.hpp"

namespace hencky::cli {

enum ExitCode : int {
  kOk = 0,
  kClaimFailed = 1,
  kUsage = 2,
  kDeterminant = 3,
  kNoFeasibleStart = 4,
  kNotConverged = 5,
};

struct RunConfig {
  std::string command;
  MaterialParams params;
  std::vector<std::string> k_list;     // fractions like 1/3 allowed
  std::vector<std::string> khat_list;
  std::vector<std::string> grid;       // one Axis spec per axis
  std::uint64_t seed = 1;
  std::string out;                     // output path prefix
  std::vector<int> dims;
  std::string method = "qn";
  int threads = 0;
  std::string config_file;
  std::optional<double> tolerance;
  std::size_t samples = 0;             // 0: command default

  // eval
  std::vector<std::string> f_entries;
  bool stress = false;

  // scan-convexity
  std::vector<std::string> checks;
  bool rank_one = false;
  std::string energy = "eh";

  // scan-coercivity
  std::vector<std::string> q_list;
  double lo = 1e-3, hi = 1e3;
  bool dev_witness = false;
  double witness_k1 = 1.0, witness_k2 = 0.0, witness_alpha = 1.0, witness_target = 1e6;

  // solve
  std::string mesh = "rect:16x16";
  std::string affine;
  std::string data_file;
  std::string initial_file;
  int max_iterations = 2000;
};

namespace detail {

inline std::vector<double> parse_list(const std::vector<std::string>& raw, double fallback) {
  if (raw.empty()) return {fallback};
  std::vector<double> v;
  for (const auto& s : raw) v.push_back(parse_number(s));
  return v;
}

inline double parse_single(const std::vector<std::string>& raw, double fallback, const char* name) {
  if (raw.size() > 1) throw Error(ErrorCode::ParseError, std::string("--") + name + " takes one value here");
  return raw.empty() ? fallback : parse_number(raw.front());
}

// shortest text that reads back as v
inline std::string short_number(double v) { return Json(v).dump(); }

inline std::string file_stem(std::string claim) {
  for (char& ch : claim)
    if (ch == ':' || ch == '/' || ch == ' ') ch = '-';
  return claim;
}

class Outputs {
 public:
  explicit Outputs(std::string prefix) : prefix_(std::move(prefix)) {
    const std::filesystem::path dir = std::filesystem::path(prefix_ + "x").parent_path();
    if (!dir.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (ec) throw Error(ErrorCode::ParseError, "cannot create output directory '" + dir.string() + "'");
    }
  }

  std::string json(const std::string& name, const Json& j) {
    const std::string path = prefix_ + name + ".json";
    write_json(path, j);
    return path;
  }

  std::string text(const std::string& name, const std::string& content) {
    const std::string path = prefix_ + name;
    write_file_atomic(path, content);
    return path;
  }

 private:
  std::string prefix_;
};

struct Tally {
  bool expected_hold_failed = false;

  // expected: empty when the claim has no recorded expectation
  void record(std::ostream& log, const ScanReport& r, const std::string& label, std::optional<Verdict> expected,
              const std::string& path) {
    log << r.claim << " " << label << " " << to_string(r.verdict);
    if (expected) log << " (expected " << to_string(*expected) << ")";
    log << " violations=" << r.violation_count << "/" << r.points_tested << " -> " << path << "\n";
    if (expected == Verdict::Holds && r.verdict != Verdict::Holds) expected_hold_failed = true;
  }
};

inline Json report_with_expectation(const ScanReport& r, std::optional<Verdict> expected) {
  Json j = scan_report_to_json(r);
  j["expected"] = expected ? Json(to_string(*expected)) : Json(nullptr);
  return j;
}

inline ScanGrid grid_or(const RunConfig& c, const std::vector<std::string>& names, const ScanGrid& fallback) {
  if (c.grid.empty()) return fallback;
  if (c.grid.size() != names.size())
    throw Error(ErrorCode::InvalidGrid, "this check needs " + std::to_string(names.size()) + " --grid axes");
  ScanGrid g;
  for (std::size_t i = 0; i < names.size(); ++i) g.axes.push_back(Axis::parse(names[i], c.grid[i]));
  g.validate();
  return g;
}

inline MaterialParams single_params(const RunConfig& c) {
  MaterialParams p = c.params;
  p.k = parse_single(c.k_list, p.k, "k");
  p.khat = parse_single(c.khat_list, p.khat, "khat");
  p.validate();
  return p;
}

constexpr double kThird = 1.0 / 3.0;
constexpr double kEighth = 0.125;

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

template <int Dim>
int eval_dim(const RunConfig& c, const std::vector<double>& entries, std::ostream& out, std::ostream& err) {
  const MaterialParams p = single_params(c);
  Mat<Dim> f;
  for (int i = 0; i < Dim; ++i)
    for (int j = 0; j < Dim; ++j) f(i, j) = entries[Dim * i + j];
  const double det = f.determinant();
  if (c.stress && !(det > 0.0)) {
    err << "error: det F = " << format_number(det) << " <= 0, the stress is undefined\n";
    return kDeterminant;
  }
  Json j;
  j["F"] = json_matrix<Dim>(f);
  j["parameters"] = {{"mu", p.mu}, {"kappa", p.kappa}, {"k", p.k}, {"khat", p.khat}, {"m", p.m}};
  j["det"] = json_number(det);
  j["energy"] = json_number(energy_eH<Dim>(f, p).value);
  j["energy_iso"] = json_number(energy_iso<Dim>(f, p).value);
  j["energy_vol"] = json_number(energy_vol<Dim>(f, p).value);
  j["quadratic_hencky"] = json_number(energy_quadratic_hencky<Dim>(f, p).value);
  if (det > 0.0) {
    const InvariantPoint ip = invariants<Dim>(right_stretch<Dim>(f));
    Json inv = {{"i1", json_number(ip.i1)}, {"i2", json_number(ip.i2)}};
    if (Dim == 3) inv["i3"] = json_number(ip.i3);
    inv["region"] = to_string(ip.region);
    j["invariants"] = inv;
    j["dev_log_norm"] = json_number(std::sqrt(log_strain<Dim>(f)->dev_sq));
  } else {
    j["invariants"] = nullptr;
    j["dev_log_norm"] = nullptr;
  }
  if constexpr (Dim == 2) {
    if (det > 0.0 && p.m == 2)
      j["stress"] = json_matrix<2>(piola_stress<2>(f, p));
    else if (c.stress)
      throw Error(ErrorCode::InvalidParams, "the closed-form stress needs m = 2");
    else
      j["stress"] = nullptr;
  } else if (c.stress) {
    throw Error(ErrorCode::InvalidDimensions, "stress output is planar only");
  }
  out << j.dump(2) << "\n";
  if (!c.out.empty()) Outputs(c.out).json("eval", j);
  return kOk;
}

inline int cmd_eval(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const int dim = c.dims.empty() ? (c.f_entries.size() == 9 ? 3 : 2) : c.dims.front();
  if (c.dims.size() > 1 || (dim != 2 && dim != 3)) throw Error(ErrorCode::ParseError, "--dim must be 2 or 3");
  if (c.f_entries.size() != static_cast<std::size_t>(dim * dim))
    throw Error(ErrorCode::ParseError, "F needs " + std::to_string(dim * dim) + " numbers (row-major), got " +
                                           std::to_string(c.f_entries.size()));
  std::vector<double> e;
  for (const auto& s : c.f_entries) e.push_back(parse_number(s));
  return dim == 2 ? eval_dim<2>(c, e, out, err) : eval_dim<3>(c, e, out, err);
}

inline int cmd_scan_convexity(const RunConfig& c, std::ostream& out) {
  c.params.validate();
  std::set<std::string> checks(c.checks.begin(), c.checks.end());
  if (c.rank_one) checks.insert("rank-one");
  if (checks.empty()) checks = {"det-hessian", "volumetric"};
  for (const auto& ch : checks)
    if (ch != "det-hessian" && ch != "volumetric" && ch != "rank-one" && ch != "steigmann")
      throw Error(ErrorCode::ParseError, "unknown check '" + ch + "'");
  const std::vector<double> ks = parse_list(c.k_list, c.params.k), khats = parse_list(c.khat_list, c.params.khat);
  Outputs files(c.out);
  Tally tally;
  auto emit = [&](const ScanReport& r, const std::string& label, std::optional<Verdict> expected) {
    const std::string path = files.json(file_stem(r.claim) + "_" + label, report_with_expectation(r, expected));
    tally.record(out, r, label, expected, path);
  };

  if (checks.count("det-hessian")) {
    const ScanGrid g = grid_or(c, {"i1", "z"}, default_det_hessian_grid());
    for (double k : ks) {
      const ScanReport r = scan_det_hessian(k, g, c.tolerance.value_or(1e-10));
      emit(r, "k=" + short_number(k), k >= kThird ? Verdict::Holds : Verdict::Fails);
    }
  }
  if (checks.count("volumetric")) {
    const ScanGrid g = grid_or(c, {"t"}, default_volumetric_grid());
    for (double kh : khats) {
      const ScanReport r = volumetric_convexity_check(kh, c.params.m, g, c.tolerance.value_or(1e-10));
      std::optional<Verdict> expected;
      if (c.params.m == 2) expected = kh >= kEighth ? Verdict::Holds : Verdict::Fails;
      emit(r, "khat=" + short_number(kh), expected);
    }
  }
  if (checks.count("steigmann")) {
    const ScanGrid g = grid_or(c, {"i1", "i2"}, ScanGrid{{"i1", 0.1, 10.0, 60, Spacing::Log}, {"i2", 0.01, 25.0, 60, Spacing::Log}});
    SteigmannOptions opt;
    opt.seed = c.seed;
    for (double k : ks) {
      SteigmannReports r = steigmann_check_2d([k](double a, double b) { return psi_hat(a, b, k); }, g, opt);
      const std::optional<Verdict> expected = k >= kThird ? std::optional<Verdict>(Verdict::Holds) : std::nullopt;
      r.monotone.parameters["k"] = k;
      r.convex.parameters["k"] = k;
      emit(r.monotone, "k=" + short_number(k), expected);
      emit(r.convex, "k=" + short_number(k), expected);
    }
    // known polyconvex functions that the criterion rejects
    SteigmannReports fp = steigmann_check_2d(fixture_planar, g, opt);
    fp.monotone.claim = "fixture-planar:monotone";
    fp.convex.claim = "fixture-planar:convex";
    emit(fp.monotone, "fixture", std::nullopt);
    emit(fp.convex, "fixture", Verdict::Fails);
    const ScanGrid g3{{"i1", 0.5, 3.0, 6}, {"i2", 0.5, 3.0, 6}, {"i3", 0.1, 2.0, 6}};
    SteigmannReports fc = steigmann_check_3d(fixture_cof, g3, opt);
    fc.monotone.claim = "fixture-cof:monotone";
    fc.convex.claim = "fixture-cof:convex";
    emit(fc.monotone, "fixture", Verdict::Fails);
    emit(fc.convex, "fixture", std::nullopt);
  }
  if (checks.count("rank-one")) {
    if (c.energy != "eh" && c.energy != "quadratic-hencky")
      throw Error(ErrorCode::ParseError, "--energy must be eh or quadratic-hencky");
    const bool eh = c.energy == "eh";
    const std::size_t samples = c.samples ? c.samples : 100000;
    const double rtol = c.tolerance.value_or(1e-6);
    const std::vector<int> dims = c.dims.empty() ? std::vector<int>{2} : c.dims;
    for (int dim : dims) {
      if (dim != 2 && dim != 3) throw Error(ErrorCode::ParseError, "--dim must be 2 or 3");
      const std::vector<double> kk = eh ? ks : std::vector<double>{c.params.k};
      for (double k : kk) {
        MaterialParams p = c.params;
        p.k = k;
        p.khat = khats.front();
        p.validate();
        const std::string claim = "rank-one:" + std::to_string(dim) + "d-" + c.energy;
        const std::string label = eh ? "k=" + short_number(k) : "mu=" + short_number(p.mu);
        std::optional<Verdict> expected;
        if (dim == 2 && eh && k >= kThird && p.khat >= kEighth && p.m == 2) expected = Verdict::Holds;
        if (dim == 3 && !eh) expected = Verdict::Fails;
        Json witness;
        ScanReport rep;
        if (dim == 2) {
          auto w = [&](const Mat2& f) { return energy_of<2>(eh ? EnergyKind::ExpHencky : EnergyKind::QuadraticHencky, f, p).value; };
          auto res = rank_one_scan<2>(claim, w, StretchSampler<2>{}, samples, c.seed, rtol);
          if (res.witness) witness = rank_one_witness_to_json<2>(*res.witness);
          rep = std::move(res.report);
        } else {
          auto w = [&](const Mat3& f) { return energy_of<3>(eh ? EnergyKind::ExpHencky : EnergyKind::QuadraticHencky, f, p).value; };
          auto res = rank_one_scan<3>(claim, w, BiasedDevSampler3{}, samples, c.seed, rtol);
          if (res.witness) witness = rank_one_witness_to_json<3>(*res.witness);
          rep = std::move(res.report);
        }
        rep.parameters = {{"mu", p.mu}, {"kappa", p.kappa}, {"k", p.k}, {"khat", p.khat}, {"m", static_cast<double>(p.m)}};
        emit(rep, label, expected);
        if (!witness.is_null()) {
          const std::string path = files.json(file_stem(claim) + "_" + label + "_witness", witness);
          out << "  witness -> " << path << "\n";
        } else if (dim == 3 && eh) {
          out << "  no witness\n";
        }
      }
    }
  }
  return tally.expected_hold_failed ? kClaimFailed : kOk;
}

inline int cmd_scan_coercivity(const RunConfig& c, std::ostream& out) {
  c.params.validate();
  Outputs files(c.out);
  const MaterialParams p = single_params(c);
  bool failed = false;
  const std::vector<double> qs = c.q_list.empty() ? std::vector<double>{1.0, 2.0, 4.0} : parse_list(c.q_list, 0.0);
  const std::vector<int> dims = c.dims.empty() ? std::vector<int>{2, 3} : c.dims;
  const std::size_t samples = c.samples ? c.samples : 100000;
  for (double q : qs)
    for (int n : dims) {
      const CoercivityCertificate cert = verify_full_coercivity(p, q, n, samples, c.seed, c.lo, c.hi);
      const std::string label = "q=" + short_number(q) + "_n=" + std::to_string(n);
      const std::string path = files.json(file_stem(cert.claim) + "_" + label, certificate_to_json(cert));
      out << cert.claim << " " << label << " K1=" << format_number(cert.k1) << " K2=" << format_number(cert.k2) << " "
          << to_string(cert.report.verdict) << " violations=" << cert.report.violation_count << "/"
          << cert.report.points_tested << " -> " << path << "\n";
      if (!cert.holds()) failed = true;
    }
  if (c.dev_witness) {
    const NoncoercivityWitness w =
        dev_only_noncoercivity_witness(p.k, c.witness_alpha, c.witness_k1, c.witness_k2, c.witness_target);
    const bool ok = w.rhs1 > c.witness_target * w.lhs1 && w.rhs2 > c.witness_target * w.lhs2;
    Json j = noncoercivity_witness_to_json(w);
    j["parameters"] = {{"k", p.k}, {"alpha", c.witness_alpha}, {"K1", c.witness_k1}, {"K2", c.witness_k2},
                       {"target", c.witness_target}};
    j["verified"] = ok;
    const std::string path = files.json("dev-noncoercivity_witness", j);
    out << "dev-noncoercivity N=" << format_number(w.n) << (ok ? " verified" : " NOT verified") << " -> " << path << "\n";
    if (!ok) failed = true;
  }
  return failed ? kClaimFailed : kOk;
}

inline int cmd_verify_appendix(const RunConfig& c, std::ostream& out) {
  Outputs files(c.out);
  Tally tally;
  const std::vector<double> ks = c.k_list.empty() ? std::vector<double>{kThird, 1.0, 2.0} : parse_list(c.k_list, 0.0);
  LemmaGrids grids;
  if (c.tolerance) grids.tolerance = *c.tolerance;
  Json scalars = Json::array();
  for (double k : ks) {
    for (const ScanReport& r : verify_scalar_lemmas(k, grids)) {
      // the 1/3 lemmas are only asserted to fail at k <= 0.30, not in (0.30, 1/3)
      const double threshold = r.claim == "psi_monotone_i1" ? 0.0 : lemma_needs_one_third(r.claim) ? kThird : kEighth;
      std::optional<Verdict> expected;
      if (k >= threshold)
        expected = Verdict::Holds;
      else if (threshold == kThird && k <= 0.30)
        expected = Verdict::Fails;
      const std::string label = "k=" + short_number(k);
      const std::string path = files.json(file_stem(r.claim) + "_" + label, report_with_expectation(r, expected));
      tally.record(out, r, label, expected, path);
    }
    scalars.push_back({{"k", k}, {"rhat_at_1", json_number(scalar_rhat(1.0, k))}});
  }
  Json j;
  j["r_2_at_quarter"] = json_number(scalar_r(2.0, 0.25));
  j["rhat"] = scalars;
  const std::string path = files.json("scalar-values", j);
  out << "r(2; k=1/4) = " << format_number(scalar_r(2.0, 0.25)) << ", rhat(1) = 0 for every k -> " << path << "\n";
  return tally.expected_hold_failed ? kClaimFailed : kOk;
}

inline int cmd_ssli(const RunConfig& c, std::ostream& out) {
  Outputs files(c.out);
  Tally tally;
  const std::vector<int> dims = c.dims.empty() ? std::vector<int>{2, 3} : c.dims;
  const std::size_t samples = c.samples ? c.samples : 100000;
  for (int n : dims) {
    const ScanReport r = ssli_sampler(n, samples, c.seed, c.tolerance.value_or(1e-10));
    // n = 4 is open: evidence only
    const std::optional<Verdict> expected = n <= 3 ? std::optional<Verdict>(Verdict::Holds) : std::nullopt;
    const std::string label = "n=" + std::to_string(n);
    tally.record(out, r, label, expected, files.json("ssli_" + label, report_with_expectation(r, expected)));
  }
  return tally.expected_hold_failed ? kClaimFailed : kOk;
}

inline Mesh mesh_from_spec(const std::string& spec) {
  if (spec.rfind("rect:", 0) != 0) return mesh_from_json(read_json(spec));
  // rect:NXxNY[:WxH]
  const std::string body = spec.substr(5);
  const auto colon = body.find(':');
  const std::string counts = body.substr(0, colon);
  const std::string size = colon == std::string::npos ? "1x1" : body.substr(colon + 1);
  auto split = [&](const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos) throw Error(ErrorCode::ParseError, "mesh spec must look like rect:NXxNY[:WxH], got '" + spec + "'");
    return std::pair{s.substr(0, x), s.substr(x + 1)};
  };
  const auto [nx, ny] = split(counts);
  const auto [w, h] = split(size);
  const double nxv = parse_number(nx), nyv = parse_number(ny);
  if (nxv != std::floor(nxv) || nyv != std::floor(nyv) || nxv > 1e5 || nyv > 1e5)
    throw Error(ErrorCode::ParseError, "mesh cell counts must be whole numbers");
  return make_rect_mesh(static_cast<int>(nxv), static_cast<int>(nyv), parse_number(w), parse_number(h));
}

inline int cmd_solve(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const MaterialParams p = single_params(c);
  const Mesh m = mesh_from_spec(c.mesh);
  m.validate();

  std::vector<Vec2> data;
  std::optional<std::pair<Mat2, Vec2>> affine;
  if (!c.data_file.empty()) {
    if (!c.affine.empty()) throw Error(ErrorCode::ParseError, "give either --affine or --data-file");
    data = field_from_json(read_json(c.data_file));
    if (data.size() != m.nodes.size()) throw Error(ErrorCode::ParseError, "data file needs one value per node");
  } else {
    std::vector<double> a{1.0, 0.0, 0.0, 1.0, 0.0, 0.0};
    if (!c.affine.empty()) {
      std::vector<double> v;
      std::stringstream ss(c.affine);
      for (std::string item; std::getline(ss, item, ',');) v.push_back(parse_number(item));
      if (v.size() != 4 && v.size() != 6) throw Error(ErrorCode::ParseError, "--affine takes a11,a12,a21,a22[,b1,b2]");
      std::copy(v.begin(), v.end(), a.begin());
    }
    Mat2 am;
    am << a[0], a[1], a[2], a[3];
    affine = std::pair{am, Vec2(a[4], a[5])};
    data = affine_field(m, am, affine->second);
  }

  SolveOptions opt;
  opt.method = parse_method(c.method);
  opt.max_iterations = c.max_iterations;
  opt.gradient_tolerance = c.tolerance;
  if (!c.initial_file.empty()) opt.initial_field = field_from_json(read_json(c.initial_file));

  SolveResult r;
  try {
    r = solve(m, data, p, opt);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoFeasibleStart) throw;
    err << "error: " << e.what() << "\n";
    return kNoFeasibleStart;
  }
  Outputs files(c.out);
  Json rep = solve_report_to_json(r.report);
  rep["parameters"] = {{"mu", p.mu}, {"kappa", p.kappa}, {"k", p.k}, {"khat", p.khat}, {"m", p.m}};
  rep["mesh"] = {{"nodes", m.node_count()}, {"triangles", m.triangle_count()}, {"area", json_number(m.area())}};
  if (affine) {
    double e = 0.0;
    for (std::size_t i = 0; i < m.nodes.size(); ++i)
      e = std::max(e, (r.field[i] - (affine->first * m.nodes[i] + affine->second)).norm());
    rep["affine_max_error"] = json_number(e);
    rep["affine_energy"] = json_number(m.area() * energy_eH<2>(affine->first, p).value);
  }
  files.json("mesh", mesh_to_json(m));
  files.json("field", field_to_json(r.field));
  const std::string rpath = files.json("report", rep);
  files.text("elements.csv", element_csv(m, r.field, p));
  out << "solve " << r.report.method << " iterations=" << r.report.iterations
      << " energy=" << format_number(r.report.final_energy) << " |g|=" << format_number(r.report.final_gradient_norm)
      << " tol=" << format_number(r.report.tolerance) << " min_det=" << format_number(r.report.min_det) << " "
      << r.report.stop_reason << " -> " << rpath << "\n";
  return r.report.converged ? kOk : kNotConverged;
}

// ---------------------------------------------------------------------------
// Argument parsing
// ---------------------------------------------------------------------------

// one value per occurrence (comma lists allowed); repeats accumulate
template <class T>
void list_option(CLI::App* s, const std::string& name, std::vector<T>& v, const std::string& desc, bool commas = true) {
  CLI::Option* o = s->add_option(name, v, desc)->expected(1)->allow_extra_args(false);
  o->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  if (commas) o->delimiter(',');
}

inline void add_common(CLI::App* s, RunConfig& c) {
  s->add_option("--mu", c.params.mu, "shear modulus");
  s->add_option("--kappa", c.params.kappa, "bulk modulus");
  list_option(s, "--k", c.k_list, "isochoric exponent (list for scans, fractions allowed)");
  list_option(s, "--khat", c.khat_list, "volumetric exponent (list for scans)");
  s->add_option("--m", c.params.m, "power of tr log U in the volumetric term");
  s->add_option("--seed", c.seed, "random seed");
  s->add_option("--out", c.out, "output path prefix");
  list_option(s, "--dim", c.dims, "dimension(s): 2 or 3");
  s->add_option("--threads", c.threads, "worker threads (0: hardware)");
  s->add_option("--config", c.config_file, "JSON file with option values; flags override it");
}

inline void build(CLI::App& app, RunConfig& c) {
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  auto* eval = app.add_subcommand("eval", "energy, stress and invariants at one F");
  add_common(eval, c);
  eval->add_option("F", c.f_entries, "entries of F, row-major (4 or 9 numbers)")->allow_extra_args();
  eval->add_flag("--stress", c.stress, "require the stress (exit 3 when det F <= 0)");

  auto* conv = app.add_subcommand("scan-convexity", "Hessian, volumetric, Steigmann and rank-one scans");
  add_common(conv, c);
  list_option(conv, "--check", c.checks, "det-hessian, volumetric, steigmann, rank-one");
  conv->add_flag("--rank-one", c.rank_one, "same as --check rank-one");
  conv->add_option("--energy", c.energy, "rank-one energy: eh or quadratic-hencky");
  list_option(conv, "--grid", c.grid, "axis lo:hi:count[:log|lin], once per axis", false);
  conv->add_option("--samples", c.samples, "rank-one samples");
  conv->add_option("--tolerance", c.tolerance, "violation tolerance");

  auto* coer = app.add_subcommand("scan-coercivity", "coercivity certificates and the deviatoric witness");
  add_common(coer, c);
  list_option(coer, "--q", c.q_list, "exponents q (default 1,2,4)");
  coer->add_option("--samples", c.samples, "random stretch tensors per (q, n)");
  coer->add_option("--lo", c.lo, "smallest eigenvalue");
  coer->add_option("--hi", c.hi, "largest eigenvalue");
  coer->add_flag("--dev-witness", c.dev_witness, "search N breaking both bounds of the deviatoric part");
  coer->add_option("--K1", c.witness_k1, "candidate K1 for the witness");
  coer->add_option("--K2", c.witness_k2, "candidate K2 for the witness");
  coer->add_option("--alpha", c.witness_alpha, "candidate growth exponent for the witness");
  coer->add_option("--target", c.witness_target, "required ratio rhs / lhs");

  auto* app_b = app.add_subcommand("verify-appendix", "scalar lemma suite for a list of k");
  add_common(app_b, c);
  app_b->add_option("--tolerance", c.tolerance, "violation tolerance");

  auto* ssli = app.add_subcommand("ssli", "sum-of-squared-logarithms sampler");
  add_common(ssli, c);
  ssli->add_option("--samples", c.samples, "constructed tuples per dimension");
  ssli->add_option("--tolerance", c.tolerance, "slack");

  auto* sol = app.add_subcommand("solve", "minimize the discrete energy with Dirichlet data");
  add_common(sol, c);
  sol->add_option("--mesh", c.mesh, "rect:NXxNY[:WxH] or a mesh JSON file");
  sol->add_option("--affine", c.affine, "Dirichlet data A X + b as a11,a12,a21,a22[,b1,b2]");
  sol->add_option("--data-file", c.data_file, "Dirichlet data as a field JSON file");
  sol->add_option("--initial-field", c.initial_file, "starting field JSON file");
  sol->add_option("--method", c.method, "gd, qn or newton");
  sol->add_option("--max-iter", c.max_iterations, "iteration budget");
  sol->add_option("--tol", c.tolerance, "gradient-norm tolerance");

}

// Turns config-file entries into flags for options the command line did not set.
inline std::vector<std::string> config_args(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return {};
  const Json cfg = read_json(path);
  if (!cfg.is_object()) throw Error(ErrorCode::ParseError, "config file must hold a JSON object");

  // first pass: which options did the command line set?
  RunConfig probe_cfg;
  CLI::App probe;
  build(probe, probe_cfg);
  std::vector<const char*> argv{"hencky"};
  for (const auto& a : args) argv.push_back(a.c_str());
  probe.parse(static_cast<int>(argv.size()), argv.data());
  CLI::App* sub = probe.get_subcommands().front();

  std::vector<std::string> extra;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "command" || key == "config") continue;
    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt) throw Error(ErrorCode::ParseError, "config key '" + key + "' is not an option of " + sub->get_name());
    if (opt->count() > 0) continue;
    auto text = [](const Json& v) {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number_float()) return short_number(v.get<double>());
      return v.dump();
    };
    if (value.is_boolean()) {
      if (value.get<bool>()) extra.push_back("--" + key);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + text(v);
      extra.push_back("--" + key);
      extra.push_back(joined);
    } else {
      extra.push_back("--" + key);
      extra.push_back(text(value));
    }
  }
  return extra;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig c;
  CLI::App app{"Exponentiated Hencky energy: evaluation, convexity and coercivity checks, and a planar solver"};
  app.name("hencky_cli");
  detail::build(app, c);
  try {
    std::vector<std::string> all = args;
    const std::vector<std::string> extra = detail::config_args(args);
    all.insert(all.end(), extra.begin(), extra.end());
    std::vector<const char*> argv{"hencky_cli"};
    for (const auto& a : all) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  c.command = app.get_subcommands().front()->get_name();
  if (c.tolerance && !(*c.tolerance > 0.0)) {
    err << "error: tolerance must be > 0\n";
    return kUsage;
  }
  set_thread_count(c.threads < 0 ? 0 : static_cast<unsigned>(c.threads));
  try {
    if (c.command == "eval") return detail::cmd_eval(c, out, err);
    if (c.command == "scan-convexity") return detail::cmd_scan_convexity(c, out);
    if (c.command == "scan-coercivity") return detail::cmd_scan_coercivity(c, out);
    if (c.command == "verify-appendix") return detail::cmd_verify_appendix(c, out);
    if (c.command == "ssli") return detail::cmd_ssli(c, out);
    if (c.command == "solve") return detail::cmd_solve(c, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (e.code() == ErrorCode::NonPositiveDeterminant) return kDeterminant;
    if (e.code() == ErrorCode::NoFeasibleStart) return kNoFeasibleStart;
    return kUsage;
  }
  return kUsage;
}

}  // namespace hencky::cli
