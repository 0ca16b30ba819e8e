#pragma once

#include "dritz/core.hpp"

namespace dritz {

struct Material {
  double mu = 1.0;      // Lame shear modulus
  double lambda = 1.0;  // Lame first parameter
};

// Plane-strain conversion from engineering constants.
inline Material elastic_from_E_nu(double E, double nu) {
  if (E <= 0.0) throw std::invalid_argument("elastic_from_E_nu: E must be positive");
  if (nu < 0.0 || nu >= 0.5) {
    throw std::invalid_argument("elastic_from_E_nu: nu must lie in [0, 0.5)");
  }
  Material m;
  m.mu = E / (2.0 * (1.0 + nu));
  m.lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  return m;
}

struct PointState {
  Mat2 grad_u = Mat2::Zero();
  Mat2 strain = Mat2::Zero();
  double div_u = 0.0;
  Mat2 stress = Mat2::Zero();
};

// sigma = 2 mu eps + lambda (div u) I
inline Mat2 stress(const Material& m, const Mat2& grad_u) {
  const Mat2 eps = symmetric_part(grad_u);
  return 2.0 * m.mu * eps + m.lambda * grad_u.trace() * Mat2::Identity();
}

inline PointState point_state(const Material& m, const Mat2& grad_u) {
  PointState s;
  s.grad_u = grad_u;
  s.strain = symmetric_part(grad_u);
  s.div_u = grad_u.trace();
  s.stress = 2.0 * m.mu * s.strain + m.lambda * s.div_u * Mat2::Identity();
  return s;
}

// Central differences du_i/dx_j = (u_i(x + dx e_j) - u_i(x - dx e_j)) / (2 dx).
template <typename Field>
Mat2 nd_gradient(Field&& u, const Vec2& x, double dx) {
  if (!(dx > 0.0)) throw std::invalid_argument("nd_gradient: step must be positive");
  Mat2 g;
  const Vec2 ex(dx, 0.0), ey(0.0, dx);
  g.col(0) = (u(x + ex) - u(x - ex)) / (2.0 * dx);
  g.col(1) = (u(x + ey) - u(x - ey)) / (2.0 * dx);
  return g;
}

// div sigma by second-order central differencing of the stress field; stress
// at the stencil points is itself evaluated from nd_gradient with the same dx.
template <typename Field>
Vec2 stress_divergence(Field&& u, const Material& m, const Vec2& x, double dx) {
  if (!(dx > 0.0)) throw std::invalid_argument("stress_divergence: step must be positive");
  const auto sigma_at = [&](const Vec2& p) { return stress(m, nd_gradient(u, p, dx)); };
  Vec2 div = Vec2::Zero();
  const Vec2 ex(dx, 0.0), ey(0.0, dx);
  div += (sigma_at(x + ex).col(0) - sigma_at(x - ex).col(0)) / (2.0 * dx);
  div += (sigma_at(x + ey).col(1) - sigma_at(x - ey).col(1)) / (2.0 * dx);
  return div;
}

}  // namespace dritz
