////////////////////////////////////////////////////////////////////////////////
// mesh.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Planar P1 triangulations and the discrete energy I(phi) = sum_T |T| W(grad phi_T)
//  with its nodal gradient. Element gradients are constant, so the discrete
//  functional is an exact restriction of the continuous one (no quadrature).
*///////////////////////////////////////////////////////////////////////////////
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hencky/energy.hpp"
#include "hencky/parallel.hpp"
#include "hencky/tensor.hpp"

namespace hencky {

enum class BoundaryTag { DirichletD, NeumannN };

inline const char* to_string(BoundaryTag t) { return t == BoundaryTag::DirichletD ? "D" : "N"; }

/// Boundary edge a -> b, oriented so the domain lies on the left.
struct BoundaryEdge {
  int a = 0;
  int b = 0;
  BoundaryTag tag = BoundaryTag::DirichletD;
};

struct Mesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<BoundaryEdge> boundary;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t triangle_count() const { return triangles.size(); }

  double signed_area(std::size_t t) const {
    const auto& tri = triangles[t];
    const Vec2 e1 = nodes[tri[1]] - nodes[tri[0]], e2 = nodes[tri[2]] - nodes[tri[0]];
    return 0.5 * (e1(0) * e2(1) - e1(1) * e2(0));
  }

  double area() const {
    double s = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) s += signed_area(t);
    return s;
  }

  double diameter() const {
    if (nodes.empty()) return 0.0;
    Vec2 lo = nodes[0], hi = nodes[0];
    for (const Vec2& x : nodes) lo = lo.cwiseMin(x), hi = hi.cwiseMax(x);
    return (hi - lo).norm();
  }

  /// Node flags: true for nodes on a Dirichlet edge.
  std::vector<bool> dirichlet_mask() const {
    std::vector<bool> m(nodes.size(), false);
    for (const auto& e : boundary)
      if (e.tag == BoundaryTag::DirichletD) m[e.a] = m[e.b] = true;
    return m;
  }

  bool has_dirichlet() const {
    return std::any_of(boundary.begin(), boundary.end(), [](const BoundaryEdge& e) { return e.tag == BoundaryTag::DirichletD; });
  }

  /// Positive areas, valid indices, and boundary edges equal to the edges
  /// used by exactly one triangle (with matching orientation).
  void validate() const {
    const int n = static_cast<int>(nodes.size());
    std::map<std::pair<int, int>, int> uses;
    for (std::size_t t = 0; t < triangles.size(); ++t) {
      for (int v : triangles[t])
        if (v < 0 || v >= n) throw Error(ErrorCode::InvalidDimensions, "triangle references a missing node");
      if (!(signed_area(t) > 0.0))
        throw Error(ErrorCode::InvalidDimensions, "triangle " + std::to_string(t) + " has non-positive area");
      for (int i = 0; i < 3; ++i) ++uses[{triangles[t][i], triangles[t][(i + 1) % 3]}];
    }
    std::map<std::pair<int, int>, int> outer;
    for (const auto& [e, c] : uses)
      if (!uses.count({e.second, e.first})) outer[e] = c;
    if (outer.size() != boundary.size()) throw Error(ErrorCode::InvalidDimensions, "boundary edges do not partition the boundary");
    for (const auto& e : boundary)
      if (!outer.count({e.a, e.b})) throw Error(ErrorCode::InvalidDimensions, "listed boundary edge is not on the boundary");
  }
};

/// nx x ny cells, each split along a diagonal that alternates like a
/// checkerboard (so uniform refinements are nested). Node (i, j) has index
/// j (nx + 1) + i. Boundary edges are tagged Dirichlet.
inline Mesh make_rect_mesh(int nx, int ny, double width, double height) {
  if (nx < 1 || ny < 1) throw Error(ErrorCode::InvalidDimensions, "need nx, ny >= 1");
  if (!(width > 0.0) || !(height > 0.0)) throw Error(ErrorCode::InvalidDimensions, "need width, height > 0");
  Mesh m;
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) m.nodes.emplace_back(width * i / nx, height * j / ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if ((i + j) % 2 == 0) {
        m.triangles.push_back({a, b, c});
        m.triangles.push_back({a, c, d});
      } else {
        m.triangles.push_back({a, b, d});
        m.triangles.push_back({b, c, d});
      }
    }
  for (int i = 0; i < nx; ++i) m.boundary.push_back({id(i, 0), id(i + 1, 0), BoundaryTag::DirichletD});
  for (int j = 0; j < ny; ++j) m.boundary.push_back({id(nx, j), id(nx, j + 1), BoundaryTag::DirichletD});
  for (int i = nx; i > 0; --i) m.boundary.push_back({id(i, ny), id(i - 1, ny), BoundaryTag::DirichletD});
  for (int j = ny; j > 0; --j) m.boundary.push_back({id(0, j), id(0, j - 1), BoundaryTag::DirichletD});
  return m;
}

/// Deformed nodal positions.
using DiscreteField = std::vector<Vec2>;

inline DiscreteField identity_field(const Mesh& m) { return m.nodes; }

inline DiscreteField affine_field(const Mesh& m, const Mat2& a, const Vec2& b = Vec2::Zero()) {
  DiscreteField f(m.nodes.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = a * m.nodes[i] + b;
  return f;
}

/// Inverse of the reference edge matrix [X1 - X0, X2 - X0]; row a gives the
/// gradient of the hat function of vertex a + 1.
inline Mat2 reference_inverse(const Mesh& m, std::size_t t) {
  const auto& tri = m.triangles[t];
  Mat2 dm;
  dm.col(0) = m.nodes[tri[1]] - m.nodes[tri[0]];
  dm.col(1) = m.nodes[tri[2]] - m.nodes[tri[0]];
  return dm.inverse();
}

inline Mat2 element_gradient(const Mesh& m, const DiscreteField& phi, std::size_t t) {
  const auto& tri = m.triangles[t];
  Mat2 ds;
  ds.col(0) = phi[tri[1]] - phi[tri[0]];
  ds.col(1) = phi[tri[2]] - phi[tri[0]];
  return ds * reference_inverse(m, t);
}

inline void check_field(const Mesh& m, const DiscreteField& phi) {
  if (phi.size() != m.nodes.size()) throw Error(ErrorCode::InvalidDimensions, "field length does not match the mesh");
}

inline double min_element_det(const Mesh& m, const DiscreteField& phi) {
  check_field(m, phi);
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < m.triangles.size(); ++t) d = std::min(d, element_gradient(m, phi, t).determinant());
  return d;
}

/// Sum over triangles of |T| W(grad phi_T), +inf once any element has det <= 0.
/// Element values are computed in parallel and summed in element order.
inline EnergyValue total_energy(const Mesh& m, const DiscreteField& phi, const MaterialParams& p) {
  check_field(m, phi);
  const std::vector<EnergyValue> e = parallel_map<EnergyValue>(m.triangles.size(), [&](std::size_t t) {
    const EnergyValue w = energy_eH<2>(element_gradient(m, phi, t), p);
    return w.finite ? EnergyValue::of(m.signed_area(t) * w.value) : w;
  });
  double s = 0.0;
  for (const EnergyValue& v : e) {
    if (!v.finite) return EnergyValue::infinite();
    s += v.value;
  }
  return EnergyValue::of(s);
}

/// I(phi) - |Omega| W(1), summed from expm1 terms with compensated summation.
/// Near a stress-free state this is small and keeps far more digits than I,
/// which is what a line search compares.
inline EnergyValue excess_energy(const Mesh& m, const DiscreteField& phi, const MaterialParams& p) {
  check_field(m, phi);
  const std::vector<EnergyValue> e = parallel_map<EnergyValue>(m.triangles.size(), [&](std::size_t t) {
    const auto s = log_strain<2>(element_gradient(m, phi, t));
    if (!s) return EnergyValue::infinite();
    const double w = p.mu / p.k * std::expm1(p.k * s->dev_sq) +
                     p.kappa / (2.0 * p.khat) * std::expm1(p.khat * int_pow(s->trace, p.m));
    return EnergyValue::of(m.signed_area(t) * w);
  });
  double sum = 0.0, comp = 0.0;  // Neumaier
  for (const EnergyValue& v : e) {
    if (!v.finite) return EnergyValue::infinite();
    const double t = sum + v.value;
    comp += std::abs(sum) >= std::abs(v.value) ? (sum - t) + v.value : (v.value - t) + sum;
    sum = t;
  }
  return EnergyValue::of(sum + comp);
}

/// dI/dphi: element forces |T| S1(F) grad N_a, accumulated in element order.
/// Rows of nodes flagged in `pinned` are zeroed.
inline std::vector<Vec2> energy_gradient(const Mesh& m, const DiscreteField& phi, const MaterialParams& p,
                                         const std::vector<bool>& pinned = {}) {
  check_field(m, phi);
  using Forces = std::array<Vec2, 3>;
  std::vector<char> bad(m.triangles.size(), 0);
  const std::vector<Forces> el = parallel_map<Forces>(m.triangles.size(), [&](std::size_t t) {
    Forces f{Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
    const Mat2 g = reference_inverse(m, t);
    const Mat2 fe = element_gradient(m, phi, t);
    if (!(fe.determinant() > 0.0)) {
      bad[t] = 1;
      return f;
    }
    const Mat2 s = m.signed_area(t) * piola_stress<2>(fe, p);
    f[1] = s * g.row(0).transpose();
    f[2] = s * g.row(1).transpose();
    f[0] = -(f[1] + f[2]);
    return f;
  });
  if (std::any_of(bad.begin(), bad.end(), [](char c) { return c != 0; }))
    throw Error(ErrorCode::InfeasibleState, "gradient requested at a field with det grad phi <= 0");
  std::vector<Vec2> out(m.nodes.size(), Vec2::Zero());
  for (std::size_t t = 0; t < m.triangles.size(); ++t)
    for (int a = 0; a < 3; ++a) out[m.triangles[t][a]] += el[t][a];
  for (std::size_t i = 0; i < pinned.size() && i < out.size(); ++i)
    if (pinned[i]) out[i].setZero();
  return out;
}

/// max over Neumann edges of |S1(F_T) n - s|, n the reference outward unit
/// normal and T the triangle owning the edge; `traction` is indexed like
/// mesh.boundary. Zero when there are no Neumann edges.
inline double neumann_residual(const Mesh& m, const DiscreteField& phi, const std::vector<Vec2>& traction,
                               const MaterialParams& p) {
  check_field(m, phi);
  if (traction.size() != m.boundary.size())
    throw Error(ErrorCode::InvalidDimensions, "traction must have one entry per boundary edge");
  std::map<std::pair<int, int>, std::size_t> owner;
  for (std::size_t t = 0; t < m.triangles.size(); ++t)
    for (int i = 0; i < 3; ++i) owner[{m.triangles[t][i], m.triangles[t][(i + 1) % 3]}] = t;
  double r = 0.0;
  for (std::size_t e = 0; e < m.boundary.size(); ++e) {
    const BoundaryEdge& be = m.boundary[e];
    if (be.tag != BoundaryTag::NeumannN) continue;
    const auto it = owner.find({be.a, be.b});
    if (it == owner.end()) throw Error(ErrorCode::InvalidDimensions, "Neumann edge has no owning triangle");
    const Vec2 d = m.nodes[be.b] - m.nodes[be.a];
    const Vec2 n = Vec2(d(1), -d(0)).normalized();
    const Mat2 s = piola_stress<2>(element_gradient(m, phi, it->second), p);
    r = std::max(r, (s * n - traction[e]).norm());
  }
  return r;
}

}  // namespace hencky
