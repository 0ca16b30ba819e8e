#pragma once

#include <algorithm>
#include <optional>

#include "dritz/adapt.hpp"
#include "dritz/functional.hpp"
#include "dritz/problem.hpp"

namespace dritz {

// ---------------------------------------------------------------------------
// Test case I: smooth stress on (-1,1)^2, mu = lambda = 1, manufactured
// solution u = (1-x^2)(1-y^2) (1,1)^T, traction on {x = 1}, clamped elsewhere.
// ---------------------------------------------------------------------------

inline ProblemSpec case1() {
  ProblemSpec p;
  p.name = "case1";
  p.domain = Domain::rectangle(Vec2(-1.0, -1.0), Vec2(1.0, 1.0), /*right_is_neumann=*/true);
  p.material = Material{1.0, 1.0};
  const double mu = p.material.mu, la = p.material.lambda;
  p.body_force = [mu, la](const Vec2& p_) {
    const double x = p_.x(), y = p_.y();
    return Vec2(2.0 * mu * (3.0 - x * x - 2.0 * y * y - 2.0 * x * y) +
                    2.0 * la * (1.0 - y * y - 2.0 * x * y),
                2.0 * mu * (3.0 - 2.0 * x * x - y * y - 2.0 * x * y) +
                    2.0 * la * (1.0 - x * x - 2.0 * x * y));
  };
  p.dirichlet = [](int, const Vec2&) { return Vec2::Zero(); };
  p.neumann = [mu, la](int, const Vec2& p_) {
    const double y = p_.y();
    return Vec2(2.0 * (y * y - 1.0) * (2.0 * mu + la), 2.0 * (y * y - 1.0) * mu);
  };
  AnalyticSolution exact;
  exact.u = [](const Vec2& p_) {
    const double phi = (1.0 - p_.x() * p_.x()) * (1.0 - p_.y() * p_.y());
    return Vec2(phi, phi);
  };
  exact.grad_u = [](const Vec2& p_) {
    const double x = p_.x(), y = p_.y();
    const double px = -2.0 * x * (1.0 - y * y);
    const double py = -2.0 * y * (1.0 - x * x);
    Mat2 g;
    g << px, py, px, py;
    return g;
  };
  p.exact = std::move(exact);
  return p;
}

// ---------------------------------------------------------------------------
// Test case II: L-shape plate with the r^alpha corner singularity.
// alpha solves alpha sin(2 omega) + sin(2 omega alpha) = 0 in (0,1) with
// omega = 3 pi / 4; the angle is measured from the bisector of the solid
// region so the two corner faces sit at theta = +- omega.
// ---------------------------------------------------------------------------

inline double lshape_critical_exponent() {
  const double omega = 3.0 * kPi / 4.0;
  const auto f = [omega](double a) { return a * std::sin(2.0 * omega) + std::sin(2.0 * omega * a); };
  double lo = 0.1, hi = 0.9;  // excludes the trivial root at 0
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(lo) * f(mid) <= 0.0 ? hi : lo) = mid;
    if (hi - lo < 1e-15) break;
  }
  return 0.5 * (lo + hi);
}

inline ProblemSpec case2() {
  ProblemSpec p;
  p.name = "case2";
  p.domain = Domain::lshape();
  p.material = elastic_from_E_nu(100000.0, 0.3);
  p.body_force = [](const Vec2&) { return Vec2::Zero(); };

  const double mu = p.material.mu, la = p.material.lambda;
  const double omega = 3.0 * kPi / 4.0;
  const double alpha = lshape_critical_exponent();
  const double c1 = -std::cos((alpha + 1.0) * omega) / std::cos((alpha - 1.0) * omega);
  const double c2 = 2.0 * (la + 2.0 * mu) / (la + mu);

  const auto exact_u = [mu, alpha, c1, c2](const Vec2& p_) -> Vec2 {
    const double r = p_.norm();
    if (r == 0.0) return Vec2::Zero();
    // Domain angles live in (0, 3pi/2). Points probed inside the removed
    // quadrant (ND stencils touching the cut faces) continue the nearer
    // branch smoothly: the branch jump is pushed to the quadrant's diagonal.
    double phi = std::atan2(p_.y(), p_.x());
    if (phi <= -kPi / 4.0) phi += 2.0 * kPi;
    const double th = phi - 3.0 * kPi / 4.0;  // measured from the corner bisector
    const double ra = std::pow(r, alpha) / (2.0 * mu);
    const double ur = ra * (-(1.0 + alpha) * std::cos((1.0 + alpha) * th) +
                            c1 * (c2 - 1.0 - alpha) * std::cos((1.0 - alpha) * th));
    const double ut = ra * ((1.0 + alpha) * std::sin((1.0 + alpha) * th) -
                            c1 * (c2 - 1.0 + alpha) * std::sin((1.0 - alpha) * th));
    return Vec2(ur * std::cos(phi) - ut * std::sin(phi), ur * std::sin(phi) + ut * std::cos(phi));
  };

  // High-accuracy ND fallback for the gradient; quadrature points always stay
  // much further than the stencil from the corner and the cut lines.
  const auto exact_grad = [exact_u](const Vec2& x) -> Mat2 {
    const double h = 1e-6 * std::max(1.0, x.norm());
    return nd_gradient(exact_u, x, h);
  };

  p.dirichlet = [exact_u](int, const Vec2& x) { return exact_u(x); };
  const Material mat = p.material;
  p.neumann = [exact_u, exact_grad, mat](int, const Vec2& x) {
    return Vec2(stress(mat, exact_grad(x)) * Vec2(1.0, 0.0));  // Gamma_N = {1} x (0,1)
  };
  p.exact = AnalyticSolution{exact_u, exact_grad};
  return p;
}

// ---------------------------------------------------------------------------
// Test case III: quarter of a membrane with a unit hole under vertical
// tension; symmetry conditions u_y = 0 on the bottom and u_x = 0 on the left
// radial edge, traction (0, 4.5) on the upper half of the outer arc.
// Reference peak values come from an adaptive FEA solution.
// ---------------------------------------------------------------------------

inline ProblemSpec case3() {
  ProblemSpec p;
  p.name = "case3";
  p.domain = Domain::quarter_annulus(1.0, 10.0);
  p.material = elastic_from_E_nu(206900.0, 0.29);
  p.body_force = [](const Vec2&) { return Vec2::Zero(); };
  p.dirichlet = [](int, const Vec2&) { return Vec2::Zero(); };
  p.neumann = [](int segment, const Vec2& x) -> Vec2 {
    if (segment == 3 && std::atan2(x.y(), x.x()) > kPi / 4.0) return Vec2(0.0, 4.5);
    return Vec2::Zero();
  };
  p.reference = ReferenceScalars{2.288e-4, 13.8876};
  return p;
}

inline ProblemSpec make_problem(const std::string& id) {
  if (id == "case1") return case1();
  if (id == "case2") return case2();
  if (id == "case3") return case3();
  throw std::invalid_argument("unknown problem id '" + id + "'");
}

// ---------------------------------------------------------------------------
// Error reporting
// ---------------------------------------------------------------------------

struct ErrorRow {
  std::size_t n_cells = 0;
  std::optional<ErrorNorms> norms;  // cases with an exact solution
  double max_u_norm = 0.0;
  double max_sigma_yy = 0.0;
  double mean_eta = 0.0;
};

// Table-style row on an evaluation mesh (finer than the training mesh;
// callers default to 2x per axis). Relative norms when an exact solution
// exists, peak displacement/stress scalars otherwise.
template <typename Field>
ErrorRow report_errors(Field&& u_n, const ProblemSpec& prob, const QuadMesh& eval_mesh,
                       const PenaltyConfig& penalty, std::optional<double> dx = std::nullopt) {
  if (!prob.exact && !prob.reference) {
    throw std::invalid_argument("report_errors: no exact solution and no reference scalars");
  }
  ErrorRow row;
  row.n_cells = eval_mesh.cells.size();
  const double h = dx ? *dx : min_cell_size(eval_mesh) / 4.0;
  if (prob.exact) row.norms = energy_norm_error(u_n, eval_mesh, prob, penalty, dx);
  for (const auto& c : eval_mesh.cells) {
    const Vec2 x = eval_mesh.cell_centroid(c);
    row.max_u_norm = std::max(row.max_u_norm, u_n(x).norm());
    const Mat2 sig = stress(prob.material, nd_gradient(u_n, x, h));
    row.max_sigma_yy = std::max(row.max_sigma_yy, sig(1, 1));
  }
  row.mean_eta = compute_indicators(u_n, eval_mesh, prob, h).mean;
  return row;
}

inline QuadMesh evaluation_mesh(const ProblemSpec& prob, int train_nx, int train_ny,
                                int factor = 2) {
  return build_uniform(prob.domain, train_nx * factor, train_ny * factor);
}

}  // namespace dritz
