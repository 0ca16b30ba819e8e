#pragma once

// Test-only oracles, kept independent of the library code paths they check.

#include <Eigen/Dense>

#include "dritz/network.hpp"

namespace dritz::testing {

// Spatial Jacobian du/dx of the network by the chain rule (no differencing).
inline Mat2 analytic_jacobian(const MlpParams& p, const Vec2& x) {
  const int L = p.layer_count();
  Eigen::VectorXd a = x;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(2, 2);
  for (int j = 0; j < L - 1; ++j) {
    Eigen::VectorXd z = p.weights[j] * a;
    if (j > 0) z -= p.biases[j];
    const Eigen::ArrayXd s = (1.0 + (-z.array()).exp()).inverse();
    jac = (s * (1.0 - s)).matrix().asDiagonal() * (p.weights[j] * jac);
    a = s.matrix();
  }
  return p.weights[L - 1] * jac;
}

// Central finite differences of a scalar objective over every parameter.
template <typename Obj>
Eigen::VectorXd fd_gradient(const MlpParams& p, Obj&& objective, double h = 1e-5) {
  Eigen::VectorXd theta = flatten(p);
  Eigen::VectorXd grad(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + h;
    const double jp = objective(unflatten(p.sizes, theta));
    theta[i] = saved - h;
    const double jm = objective(unflatten(p.sizes, theta));
    theta[i] = saved;
    grad[i] = (jp - jm) / (2.0 * h);
  }
  return grad;
}

// Worst relative mismatch between an analytic and an FD gradient, with a
// floor guarding against FD roundoff on near-zero entries.
inline double max_rel_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& fd) {
  const double scale = std::max(1e-12, fd.cwiseAbs().maxCoeff());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double denom = std::max(std::abs(fd[i]), 1e-9 * scale);
    worst = std::max(worst, std::abs(analytic[i] - fd[i]) / denom);
  }
  return worst;
}

}  // namespace dritz::testing
