////////////////////////////////////////////////////////////////////////////////
// io.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  JSON and CSV serialization of meshes, fields, solve and scan reports.
//  Files are written to a temporary sibling and renamed into place.
*///////////////////////////////////////////////////////////////////////////////
#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hencky/coercivity.hpp"
#include "hencky/convexity.hpp"
#include "hencky/mesh.hpp"
#include "hencky/scan.hpp"
#include "hencky/solver.hpp"

namespace hencky {

using Json = nlohmann::ordered_json;

// nlohmann prints doubles with the shortest digits that parse back to the
// same value; non-finite numbers have no JSON form, so they become strings.
inline Json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_number(j.get<std::string>());
  throw Error(ErrorCode::ParseError, "expected a number, got " + j.dump());
}

inline Json json_vector(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(json_number(x));
  return a;
}

template <int Dim>
Json json_matrix(const Mat<Dim>& m) {
  Json rows = Json::array();
  for (int i = 0; i < Dim; ++i) {
    Json r = Json::array();
    for (int j = 0; j < Dim; ++j) r.push_back(json_number(m(i, j)));
    rows.push_back(r);
  }
  return rows;
}

template <int Dim>
Json json_vec(const Vec<Dim>& v) {
  Json a = Json::array();
  for (int i = 0; i < Dim; ++i) a.push_back(json_number(v(i)));
  return a;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::ParseError, "cannot open '" + tmp + "' for writing");
    out << content;
    out.close();
    if (!out) throw Error(ErrorCode::ParseError, "write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::ParseError, "cannot move output into '" + path + "'");
  }
}

inline void write_json(const std::string& path, const Json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline Json read_json(const std::string& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Mesh and fields
// ---------------------------------------------------------------------------

/// {"nodes": [[x, y], ...], "triangles": [[a, b, c], ...],
///  "boundary": [[a, b, "D" | "N"], ...]}
inline Json mesh_to_json(const Mesh& m) {
  Json j;
  j["nodes"] = Json::array();
  for (const Vec2& x : m.nodes) j["nodes"].push_back(json_vec<2>(x));
  j["triangles"] = Json::array();
  for (const auto& t : m.triangles) j["triangles"].push_back({t[0], t[1], t[2]});
  j["boundary"] = Json::array();
  for (const auto& e : m.boundary) j["boundary"].push_back({e.a, e.b, to_string(e.tag)});
  return j;
}

inline Mesh mesh_from_json(const Json& j) {
  try {
    Mesh m;
    for (const auto& x : j.at("nodes")) {
      if (x.size() != 2) throw Error(ErrorCode::ParseError, "a node needs 2 coordinates");
      m.nodes.emplace_back(number_from_json(x[0]), number_from_json(x[1]));
    }
    for (const auto& t : j.at("triangles")) {
      if (t.size() != 3) throw Error(ErrorCode::ParseError, "a triangle needs 3 node ids");
      m.triangles.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>()});
    }
    for (const auto& e : j.at("boundary")) {
      if (e.size() != 3) throw Error(ErrorCode::ParseError, "a boundary edge is [a, b, tag]");
      const std::string tag = e[2].get<std::string>();
      if (tag != "D" && tag != "N") throw Error(ErrorCode::ParseError, "boundary tag must be D or N, got '" + tag + "'");
      m.boundary.push_back({e[0].get<int>(), e[1].get<int>(), tag == "D" ? BoundaryTag::DirichletD : BoundaryTag::NeumannN});
    }
    return m;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("mesh JSON: ") + e.what());
  }
}

/// {"values": [[x, y], ...]}, one entry per node.
inline Json field_to_json(const DiscreteField& f) {
  Json j;
  j["values"] = Json::array();
  for (const Vec2& v : f) j["values"].push_back(json_vec<2>(v));
  return j;
}

inline DiscreteField field_from_json(const Json& j) {
  try {
    DiscreteField f;
    for (const auto& v : j.at("values")) {
      if (v.size() != 2) throw Error(ErrorCode::ParseError, "a nodal value needs 2 components");
      f.emplace_back(number_from_json(v[0]), number_from_json(v[1]));
    }
    return f;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("field JSON: ") + e.what());
  }
}

inline Json solve_report_to_json(const SolveReport& r) {
  Json j;
  j["method"] = r.method;
  j["converged"] = r.converged;
  j["stop_reason"] = r.stop_reason;
  j["iterations"] = r.iterations;
  j["final_energy"] = json_number(r.final_energy);
  j["final_gradient_norm"] = json_number(r.final_gradient_norm);
  j["tolerance"] = json_number(r.tolerance);
  j["min_det"] = json_number(r.min_det);
  j["energy_history"] = json_vector(r.energy_history);
  return j;
}

/// Per-element CSV: element, energy_density, det, dev_log_norm.
inline std::string element_csv(const Mesh& m, const DiscreteField& phi, const MaterialParams& p) {
  std::string out = "element,energy_density,det,dev_log_norm\n";
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const Mat2 f = element_gradient(m, phi, t);
    const EnergyValue w = energy_eH<2>(f, p);
    const auto s = log_strain<2>(f);
    out += std::to_string(t) + "," + format_number(w.value) + "," + format_number(f.determinant()) + "," +
           format_number(s ? std::sqrt(s->dev_sq) : std::numeric_limits<double>::quiet_NaN()) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline Json scan_report_to_json(const ScanReport& r) {
  Json j;
  j["claim"] = r.claim;
  j["parameters"] = Json::object();
  for (const auto& [k, v] : r.parameters) j["parameters"][k] = json_number(v);
  j["coordinates"] = r.coordinates;
  j["grid"] = r.grid_spec;
  j["tolerance"] = json_number(r.tolerance);
  j["verdict"] = to_string(r.verdict);
  j["points_tested"] = r.points_tested;
  j["skipped"] = r.skipped;
  j["violation_count"] = r.violation_count;
  j["min_margin"] = json_number(r.min_margin);
  j["min_margin_point"] = json_vector(r.min_margin_point);
  j["violations"] = Json::array();
  for (const Violation& v : r.violations)
    j["violations"].push_back({{"point", json_vector(v.point)}, {"value", json_number(v.value)}, {"margin", json_number(v.margin)}});
  return j;
}

inline Json certificate_to_json(const CoercivityCertificate& c) {
  Json j;
  j["claim"] = c.claim;
  j["parameters"] = Json::object();
  for (const auto& [k, v] : c.parameters) j["parameters"][k] = json_number(v);
  j["k1"] = json_number(c.k1);
  j["k2"] = json_number(c.k2);
  j["empirical_k1"] = json_number(c.empirical_k1);
  j["min_slack"] = json_number(c.min_slack());
  j["report"] = scan_report_to_json(c.report);
  return j;
}

template <int Dim>
Json rank_one_witness_to_json(const RankOneWitness<Dim>& w) {
  Json j;
  j["sample"] = w.sample;
  j["F"] = json_matrix<Dim>(w.f);
  j["xi"] = json_vec<Dim>(w.xi);
  j["eta"] = json_vec<Dim>(w.eta);
  j["second_derivative"] = json_number(w.second_derivative);
  return j;
}

inline Json noncoercivity_witness_to_json(const NoncoercivityWitness& w) {
  Json j;
  j["N"] = json_number(w.n);
  j["N_equal_stretch"] = json_number(w.n_equal);
  j["N_ratio_two"] = json_number(w.n_ratio);
  j["bound1"] = {{"lhs", json_number(w.lhs1)}, {"rhs", json_number(w.rhs1)}};
  j["bound2"] = {{"lhs", json_number(w.lhs2)}, {"rhs", json_number(w.rhs2)}};
  return j;
}

}  // namespace hencky
