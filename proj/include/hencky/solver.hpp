////////////////////////////////////////////////////////////////////////////////
// solver.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Direct minimization of the discrete energy with Dirichlet data. All three
//  methods share one backtracking Armijo line search that treats +inf (an
//  element with det grad phi <= 0) as a rejected trial, so every accepted
//  iterate stays in GL+ elementwise.
*///////////////////////////////////////////////////////////////////////////////
#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "hencky/energy.hpp"
#include "hencky/mesh.hpp"

namespace hencky {

enum class SolveMethod { GradientDescent, QuasiNewton, NewtonFD };

inline const char* to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::GradientDescent: return "gd";
    case SolveMethod::QuasiNewton: return "qn";
    case SolveMethod::NewtonFD: return "newton";
  }
  return "?";
}

inline SolveMethod parse_method(const std::string& s) {
  if (s == "gd") return SolveMethod::GradientDescent;
  if (s == "qn" || s == "lbfgs") return SolveMethod::QuasiNewton;
  if (s == "newton") return SolveMethod::NewtonFD;
  throw Error(ErrorCode::ParseError, "method must be gd, qn or newton, got '" + s + "'");
}

struct SolveOptions {
  int max_iterations = 2000;
  std::optional<double> gradient_tolerance;  // default 1e-8 (1 + |I(phi0)|) / diam
  double shrink = 0.5;
  double initial_step = 1.0;
  double armijo_c1 = 1e-4;
  int max_line_search = 60;
  int memory = 10;
  SolveMethod method = SolveMethod::QuasiNewton;
  std::optional<DiscreteField> initial_field;  // Dirichlet nodes are overwritten

  void validate() const {
    if (max_iterations < 0) throw Error(ErrorCode::InvalidParams, "max_iterations must be >= 0");
    if (gradient_tolerance && !(*gradient_tolerance > 0.0))
      throw Error(ErrorCode::InvalidParams, "gradient tolerance must be > 0");
    if (!(shrink > 0.0 && shrink < 1.0)) throw Error(ErrorCode::InvalidParams, "shrink must lie in (0,1)");
    if (!(initial_step > 0.0)) throw Error(ErrorCode::InvalidParams, "initial step must be > 0");
    if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) throw Error(ErrorCode::InvalidParams, "armijo c1 must lie in (0,1)");
    if (memory < 1) throw Error(ErrorCode::InvalidParams, "memory must be >= 1");
  }
};

struct SolveReport {
  int iterations = 0;
  double final_energy = 0.0;
  double final_gradient_norm = 0.0;
  double min_det = 0.0;  // over all elements of all accepted iterates
  bool converged = false;
  double tolerance = 0.0;
  std::string method;
  std::string stop_reason;
  std::vector<double> energy_history;
};

struct SolveResult {
  DiscreteField field;
  SolveReport report;
};

/// Least-squares affine fit x ~ A X + b to the Dirichlet data.
inline std::pair<Mat2, Vec2> fit_affine(const Mesh& m, const std::vector<Vec2>& data, const std::vector<bool>& pinned) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < pinned.size(); ++i)
    if (pinned[i]) ids.push_back(static_cast<int>(i));
  Eigen::MatrixXd a(ids.size(), 3), rhs(ids.size(), 2);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    a.row(r) << m.nodes[ids[r]](0), m.nodes[ids[r]](1), 1.0;
    rhs.row(r) = data[ids[r]].transpose();
  }
  const auto qr = a.colPivHouseholderQr();
  if (qr.rank() < 3) {
    // collinear data: translate by the mean offset only
    Vec2 shift = Vec2::Zero();
    for (int i : ids) shift += data[i] - m.nodes[i];
    return {Mat2::Identity(), shift / static_cast<double>(ids.size())};
  }
  const Eigen::MatrixXd x = qr.solve(rhs);
  Mat2 lin;
  lin << x(0, 0), x(1, 0), x(0, 1), x(1, 1);
  return {lin, Vec2(x(2, 0), x(2, 1))};
}

/// Affine extension of the boundary data; when that inverts an element, the
/// interior is blended toward the identity, X + s (A X + b - X) for s from 1
/// down to 0 in 50 attempts.
inline DiscreteField initial_field(const Mesh& m, const std::vector<Vec2>& data, const MaterialParams& p) {
  const std::vector<bool> pinned = m.dirichlet_mask();
  const auto [a, b] = fit_affine(m, data, pinned);
  for (int j = 0; j < 50; ++j) {
    const double s = 1.0 - j / 49.0;
    DiscreteField phi(m.nodes.size());
    for (std::size_t i = 0; i < phi.size(); ++i)
      phi[i] = pinned[i] ? data[i] : Vec2(m.nodes[i] + s * (a * m.nodes[i] + b - m.nodes[i]));
    if (total_energy(m, phi, p).finite) return phi;
  }
  throw Error(ErrorCode::NoFeasibleStart, "no blend of the boundary data gives a finite energy");
}

namespace detail {

// element stiffness from the FD tangent, dof order (node a, component i)
inline Eigen::Matrix<double, 6, 6> element_stiffness(const Mesh& m, const DiscreteField& phi, std::size_t t,
                                                     const MaterialParams& p) {
  const Mat2 g = reference_inverse(m, t);
  std::array<Vec2, 3> grad_n;
  grad_n[1] = g.row(0).transpose();
  grad_n[2] = g.row(1).transpose();
  grad_n[0] = -(grad_n[1] + grad_n[2]);
  const Tangent<2> tan = tangent_fd<2>(element_gradient(m, phi, t), p);
  const double area = m.signed_area(t);
  Eigen::Matrix<double, 6, 6> k = Eigen::Matrix<double, 6, 6>::Zero();
  for (int a = 0; a < 3; ++a)
    for (int i = 0; i < 2; ++i)
      for (int b = 0; b < 3; ++b)
        for (int kk = 0; kk < 2; ++kk) {
          double s = 0.0;
          for (int j = 0; j < 2; ++j)
            for (int l = 0; l < 2; ++l) s += tan(i, j, kk, l) * grad_n[a](j) * grad_n[b](l);
          k(2 * a + i, 2 * b + kk) = area * s;
        }
  return 0.5 * (k + k.transpose());
}

}  // namespace detail

/// Minimizes I over fields that match `data` on Dirichlet nodes. `data` has
/// one entry per node; only Dirichlet nodes are read.
inline SolveResult solve(const Mesh& m, const std::vector<Vec2>& data, const MaterialParams& p,
                         const SolveOptions& opt = {}) {
  p.validate();
  opt.validate();
  if (p.m != 2) throw Error(ErrorCode::InvalidParams, "the solver needs m = 2 (closed-form stress)");
  m.validate();
  if (!m.has_dirichlet()) throw Error(ErrorCode::InvalidDimensions, "a Dirichlet solve needs a nonempty Dirichlet boundary");
  if (data.size() != m.nodes.size()) throw Error(ErrorCode::InvalidDimensions, "Dirichlet data needs one entry per node");

  const std::vector<bool> pinned = m.dirichlet_mask();
  DiscreteField phi;
  if (opt.initial_field) {
    phi = *opt.initial_field;
    check_field(m, phi);
    for (std::size_t i = 0; i < phi.size(); ++i)
      if (pinned[i]) phi[i] = data[i];
    if (!total_energy(m, phi, p).finite) throw Error(ErrorCode::NoFeasibleStart, "supplied initial field has infinite energy");
  } else {
    phi = initial_field(m, data, p);
  }

  std::vector<int> free;
  std::vector<int> dof_of(m.nodes.size(), -1);
  for (std::size_t i = 0; i < pinned.size(); ++i)
    if (!pinned[i]) {
      dof_of[i] = static_cast<int>(free.size());
      free.push_back(static_cast<int>(i));
    }
  const Eigen::Index n = 2 * static_cast<Eigen::Index>(free.size());

  auto to_field = [&](const Eigen::VectorXd& x) {
    DiscreteField f = phi;
    for (std::size_t r = 0; r < free.size(); ++r) f[free[r]] = x.segment<2>(2 * r);
    return f;
  };
  auto gradient = [&](const DiscreteField& f) {
    const std::vector<Vec2> g = energy_gradient(m, f, p, pinned);
    Eigen::VectorXd out(n);
    for (std::size_t r = 0; r < free.size(); ++r) out.segment<2>(2 * r) = g[free[r]];
    return out;
  };

  Eigen::VectorXd x(n);
  for (std::size_t r = 0; r < free.size(); ++r) x.segment<2>(2 * r) = phi[free[r]];
  // the line search works on the excess energy; reported energies add |Omega| W(1) back
  const double base = m.area() * p.ground_energy();
  double f = excess_energy(m, phi, p).value;
  Eigen::VectorXd g = gradient(phi);

  SolveReport rep;
  rep.method = to_string(opt.method);
  rep.tolerance = opt.gradient_tolerance ? *opt.gradient_tolerance : 1e-8 * (1.0 + std::abs(f + base)) / m.diameter();
  rep.min_det = min_element_det(m, phi);
  rep.energy_history.push_back(f + base);

  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> mem;  // (s, y)
  double last_step = opt.initial_step;
  rep.stop_reason = "max_iterations";
  for (int it = 0;; ++it) {
    const double gn = g.norm();
    if (gn <= rep.tolerance) {
      rep.converged = true;
      rep.stop_reason = "gradient_tolerance";
      break;
    }
    if (it >= opt.max_iterations) break;

    Eigen::VectorXd d;
    double step = 1.0;
    switch (opt.method) {
      case SolveMethod::GradientDescent:
        d = -g;
        step = std::min(2.0 * last_step, opt.initial_step);
        break;
      case SolveMethod::QuasiNewton: {
        // two-loop recursion
        Eigen::VectorXd q = g;
        std::vector<double> alpha(mem.size());
        for (std::size_t i = mem.size(); i-- > 0;) {
          alpha[i] = mem[i].first.dot(q) / mem[i].second.dot(mem[i].first);
          q -= alpha[i] * mem[i].second;
        }
        if (!mem.empty()) {
          const auto& [s, y] = mem.back();
          q *= s.dot(y) / y.dot(y);
        } else {
          q *= std::min(1.0, opt.initial_step / gn);
        }
        for (std::size_t i = 0; i < mem.size(); ++i) {
          const double beta = mem[i].second.dot(q) / mem[i].second.dot(mem[i].first);
          q += (alpha[i] - beta) * mem[i].first;
        }
        d = -q;
        break;
      }
      case SolveMethod::NewtonFD: {
        std::vector<Eigen::Triplet<double>> trip;
        bool ok = true;
        try {
          const DiscreteField cur = to_field(x);
          for (std::size_t t = 0; t < m.triangles.size(); ++t) {
            const auto ke = detail::element_stiffness(m, cur, t, p);
            for (int a = 0; a < 3; ++a)
              for (int b = 0; b < 3; ++b) {
                const int ra = dof_of[m.triangles[t][a]], rb = dof_of[m.triangles[t][b]];
                if (ra < 0 || rb < 0) continue;
                for (int i = 0; i < 2; ++i)
                  for (int kk = 0; kk < 2; ++kk) trip.emplace_back(2 * ra + i, 2 * rb + kk, ke(2 * a + i, 2 * b + kk));
              }
          }
        } catch (const Error&) {
          ok = false;  // tangent stencil left GL+
        }
        if (ok) {
          Eigen::SparseMatrix<double> k(n, n);
          k.setFromTriplets(trip.begin(), trip.end());
          Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(k);
          if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > 0.0) d = -ldlt.solve(g);
        }
        if (d.size() != n || !d.allFinite()) d = -g * std::min(1.0, opt.initial_step / gn);
        break;
      }
    }
    double slope = g.dot(d);
    if (!(slope < 0.0) || !d.allFinite()) {
      d = -g * std::min(1.0, opt.initial_step / gn);
      slope = g.dot(d);
      mem.clear();
    }

    // Energy differences below `noise` are rounding, not progress. There the
    // Armijo test is meaningless and a trial that does not raise the computed
    // energy is accepted when it shrinks the (still accurate) gradient.
    const double noise = 1e3 * std::numeric_limits<double>::epsilon() * std::abs(f);
    bool accepted = false;
    Eigen::VectorXd x_new, g_new;
    double f_new = f;
    DiscreteField phi_new;
    for (int ls = 0; ls < opt.max_line_search; ++ls, step *= opt.shrink) {
      x_new = x + step * d;
      if (x_new == x) break;  // step below the resolution of x
      phi_new = to_field(x_new);
      const EnergyValue e = excess_energy(m, phi_new, p);
      if (!e.finite || e.value > f) continue;  // crossed det = 0 somewhere, or went uphill
      if (e.value <= f + opt.armijo_c1 * step * slope) {
        f_new = e.value;
        g_new = gradient(phi_new);
        accepted = true;
        break;
      }
      if (f - e.value <= noise) {
        Eigen::VectorXd gt = gradient(phi_new);
        if (gt.norm() < gn) {
          f_new = e.value;
          g_new = std::move(gt);
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      rep.stop_reason = "line_search_failed";
      break;
    }
    if (opt.method == SolveMethod::QuasiNewton) {
      Eigen::VectorXd s = x_new - x, y = g_new - g;
      if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
        mem.emplace_back(std::move(s), std::move(y));
        if (static_cast<int>(mem.size()) > opt.memory) mem.pop_front();
      }
    }
    last_step = step;
    x = std::move(x_new);
    g = g_new;
    f = f_new;
    rep.min_det = std::min(rep.min_det, min_element_det(m, phi_new));
    rep.energy_history.push_back(f + base);
    rep.iterations = it + 1;
  }
  rep.final_energy = f + base;
  rep.final_gradient_norm = g.norm();
  return {to_field(x), rep};
}

inline SolveResult solve(const Mesh& m, const std::function<Vec2(const Vec2&)>& dirichlet, const MaterialParams& p,
                         const SolveOptions& opt = {}) {
  std::vector<Vec2> data(m.nodes.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = dirichlet(m.nodes[i]);
  return solve(m, data, p, opt);
}

}  // namespace hencky
