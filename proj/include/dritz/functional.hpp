#pragma once

#include <optional>
#include <vector>

#include "dritz/elasticity.hpp"
#include "dritz/mesh.hpp"
#include "dritz/network.hpp"
#include "dritz/problem.hpp"

namespace dritz {

struct PenaltyConfig {
  double gamma_d = 100.0;  // dimensionless weight; the assembled constant is mu * gamma_d

  double gamma(const Material& m) const { return m.mu * gamma_d; }
};

inline void validate_penalty(const PenaltyConfig& p) {
  if (!(p.gamma_d > 0.0)) throw std::invalid_argument("penalty: gamma_d must be positive");
}

// Stored so that total = strain + div + penalty_l2 + penalty_seminorm
//                        - body_load - traction.
// The 1/2 factors of J are already folded into the stored terms.
struct EnergyBreakdown {
  double strain_term = 0.0;
  double div_term = 0.0;
  double penalty_l2_term = 0.0;
  double penalty_seminorm_term = 0.0;
  double body_load_term = 0.0;
  double traction_term = 0.0;
  double total = 0.0;
};

// ---------------------------------------------------------------------------
// Composite midpoint quadrature
// ---------------------------------------------------------------------------

template <typename F>
double integrate_cells(const QuadMesh& mesh, F&& v) {
  double sum = 0.0;
  for (const auto& c : mesh.cells) sum += v(mesh.cell_centroid(c)) * mesh.cell_measure(c);
  return sum;
}

template <typename F>
double integrate_edges(const std::vector<BoundaryEdge>& edges, F&& v) {
  double sum = 0.0;
  for (const auto& e : edges) sum += v(e.centroid) * e.measure;
  return sum;
}

// ---------------------------------------------------------------------------
// Divided differences along a Dirichlet piece. Off the diagonal this is the
// difference quotient with geodesic distance in the segment chart; on the
// diagonal it is the tangential derivative dv/dGamma at x_E by central
// differencing along the segment with step |E|/4.
// ---------------------------------------------------------------------------

template <typename F>
Vec2 divided_difference(const Segment& seg, F&& v, const BoundaryEdge& e,
                        const BoundaryEdge& ep) {
  if (e.segment != seg.id || ep.segment != seg.id) {
    throw std::invalid_argument("divided_difference: edges must lie on the given segment");
  }
  if (e.s0 == ep.s0 && e.s1 == ep.s1) {
    const double t = 0.25 * e.measure;
    const double s = e.s_mid();
    return (v(seg.point(s + t)) - v(seg.point(s - t))) / (2.0 * t);
  }
  const double d = seg.geodesic(e.s_mid(), ep.s_mid());
  return (v(e.centroid) - v(ep.centroid)) / d;
}

namespace detail {

inline Vec2 apply_mask(const std::array<bool, 2>& mask, const Vec2& v) {
  return Vec2(mask[0] ? v.x() : 0.0, mask[1] ? v.y() : 0.0);
}

}  // namespace detail

// Discrete Slobodeckij seminorm squared: per Dirichlet piece, the double sum
// over ordered edge pairs of |v[x_E; x_E']|^2 |E||E'| (diagonal included).
// Components are restricted to each segment's constrained-component mask.
template <typename F>
double slobodeckij_seminorm_sq(const QuadMesh& mesh, F&& v) {
  double total = 0.0;
  for (const auto& seg : mesh.domain.segments) {
    if (seg.type != BcType::Dirichlet) continue;
    const auto& group = mesh.edges[seg.id];
    const std::size_t m = group.size();
    std::vector<Vec2> vals(m);
    std::vector<double> smid(m), w(m);
    for (std::size_t i = 0; i < m; ++i) {
      vals[i] = detail::apply_mask(seg.mask, v(group[i].centroid));
      smid[i] = group[i].s_mid();
      w[i] = group[i].measure;
    }
    for (std::size_t i = 0; i < m; ++i) {
      // diagonal: tangential derivative of the masked field
      const double t = 0.25 * group[i].measure;
      const Vec2 dv = detail::apply_mask(
          seg.mask, (v(seg.point(smid[i] + t)) - v(seg.point(smid[i] - t))) / (2.0 * t));
      total += dv.squaredNorm() * w[i] * w[i];
      for (std::size_t j = i + 1; j < m; ++j) {
        const double d = seg.geodesic(smid[i], smid[j]);
        const Vec2 diff = (vals[i] - vals[j]) / d;
        total += 2.0 * diff.squaredNorm() * w[i] * w[j];
      }
    }
  }
  return total;
}

// || v ||^2_{1/2, Gamma_D} = integral of |v|^2 over Gamma_D + seminorm.
template <typename F>
double h_half_norm_sq(const QuadMesh& mesh, F&& v) {
  double l2 = 0.0;
  for (const auto& seg : mesh.domain.segments) {
    if (seg.type != BcType::Dirichlet) continue;
    for (const auto& e : mesh.edges[seg.id]) {
      l2 += detail::apply_mask(seg.mask, v(e.centroid)).squaredNorm() * e.measure;
    }
  }
  return l2 + slobodeckij_seminorm_sq(mesh, v);
}

// ---------------------------------------------------------------------------
// Loss assembly.
//
// All quadrature-point data that does not depend on the displacement field is
// precomputed once per mesh: evaluation points (cell centroids plus their ND
// stencils, Dirichlet edge centroids plus tangential stencils, Neumann edge
// centroids), weights, and boundary data. The same objective then serves the
// generic field path (energy evaluation) and the network path (energy plus
// exact reverse-mode parameter gradients).
// ---------------------------------------------------------------------------

class LossAssembly {
 public:
  LossAssembly(const QuadMesh& mesh, const ProblemSpec& prob, const PenaltyConfig& penalty,
               std::optional<double> dx_override = std::nullopt)
      : mu_(prob.material.mu), lambda_(prob.material.lambda), gamma_(penalty.gamma(prob.material)) {
    validate_penalty(penalty);
    if (mesh.domain.kind != prob.domain.kind) {
      throw std::invalid_argument("loss assembly: mesh and problem geometry disagree");
    }
    dx_ = dx_override ? *dx_override : min_cell_size(mesh) / 4.0;
    if (!(dx_ > 0.0)) throw std::invalid_argument("loss assembly: step must be positive");

    const std::size_t nc = mesh.cells.size();
    cells_.resize(nc);
    std::size_t n_dir = 0, n_neu = 0;
    for (const auto& seg : mesh.domain.segments) {
      (seg.type == BcType::Dirichlet ? n_dir : n_neu) += mesh.edges[seg.id].size();
    }
    points_.resize(2, Eigen::Index(5 * nc + 3 * n_dir + n_neu));

    Eigen::Index k = 0;
    const Vec2 ex(dx_, 0.0), ey(0.0, dx_);
    for (std::size_t t = 0; t < nc; ++t) {
      const Vec2 x = mesh.cell_centroid(mesh.cells[t]);
      const double w = mesh.cell_measure(mesh.cells[t]);
      cells_[t].weight = w;
      cells_[t].fw = prob.body_force(x) * w;
      points_.col(k++) = x;
      points_.col(k++) = x + ex;
      points_.col(k++) = x - ex;
      points_.col(k++) = x + ey;
      points_.col(k++) = x - ey;
    }

    dir_base_ = k;
    for (const auto& seg : mesh.domain.segments) {
      if (seg.type != BcType::Dirichlet) continue;
      DirSegment ds;
      ds.mask = Vec2(seg.mask[0] ? 1.0 : 0.0, seg.mask[1] ? 1.0 : 0.0);
      ds.closed = seg.closed;
      ds.length = seg.length;
      ds.first_point = k;
      for (const auto& e : mesh.edges[seg.id]) {
        DirEdge de;
        de.w = e.measure;
        de.smid = e.s_mid();
        de.half_step = 0.25 * e.measure;
        const Vec2 xp = seg.point(de.smid + de.half_step);
        const Vec2 xm = seg.point(de.smid - de.half_step);
        de.g_center = prob.dirichlet(seg.id, e.centroid);
        de.g_plus = prob.dirichlet(seg.id, xp);
        de.g_minus = prob.dirichlet(seg.id, xm);
        points_.col(k++) = e.centroid;
        points_.col(k++) = xp;
        points_.col(k++) = xm;
        ds.edges.push_back(de);
      }
      if (!ds.edges.empty()) dir_segments_.push_back(std::move(ds));
    }

    neu_base_ = k;
    for (const auto& seg : mesh.domain.segments) {
      if (seg.type != BcType::Neumann) continue;
      for (const auto& e : mesh.edges[seg.id]) {
        neumann_.push_back(prob.neumann(seg.id, e.centroid) * e.measure);
        points_.col(k++) = e.centroid;
      }
    }
  }

  double step() const { return dx_; }
  const Eigen::Matrix2Xd& points() const { return points_; }

  // J_T from precomputed outputs; accumulates dJ/dU into `bar` when given.
  EnergyBreakdown objective(const Eigen::Matrix2Xd& u, Eigen::Matrix2Xd* bar) const {
    EnergyBreakdown bd;
    const double inv2dx = 1.0 / (2.0 * dx_);
    for (std::size_t t = 0; t < cells_.size(); ++t) {
      const Eigen::Index q = Eigen::Index(5 * t);
      Mat2 g;
      g.col(0) = (u.col(q + 1) - u.col(q + 2)) * inv2dx;
      g.col(1) = (u.col(q + 3) - u.col(q + 4)) * inv2dx;
      const Mat2 eps = symmetric_part(g);
      const double div = g.trace();
      const double w = cells_[t].weight;
      bd.strain_term += mu_ * eps.squaredNorm() * w;
      bd.div_term += 0.5 * lambda_ * div * div * w;
      bd.body_load_term += cells_[t].fw.dot(u.col(q));
      if (bar) {
        const Mat2 sigma = 2.0 * mu_ * eps + lambda_ * div * Mat2::Identity();
        const Mat2 wsig = (w * inv2dx) * sigma;
        bar->col(q + 1) += wsig.col(0);
        bar->col(q + 2) -= wsig.col(0);
        bar->col(q + 3) += wsig.col(1);
        bar->col(q + 4) -= wsig.col(1);
        bar->col(q) -= cells_[t].fw;
      }
    }

    for (const auto& ds : dir_segments_) {
      const std::size_t m = ds.edges.size();
      for (std::size_t i = 0; i < m; ++i) {
        const DirEdge& e = ds.edges[i];
        const Eigen::Index q = ds.first_point + Eigen::Index(3 * i);
        const Vec2 rc = ds.mask.cwiseProduct(u.col(q) - e.g_center);
        bd.penalty_l2_term += 0.5 * gamma_ * rc.squaredNorm() * e.w;
        if (bar) bar->col(q) += (gamma_ * e.w) * rc;

        const Vec2 rp = ds.mask.cwiseProduct(u.col(q + 1) - e.g_plus);
        const Vec2 rm = ds.mask.cwiseProduct(u.col(q + 2) - e.g_minus);
        const Vec2 dd = (rp - rm) / (2.0 * e.half_step);
        bd.penalty_seminorm_term += 0.5 * gamma_ * dd.squaredNorm() * e.w * e.w;
        if (bar) {
          const Vec2 c = (gamma_ * e.w * e.w / (2.0 * e.half_step)) * dd;
          bar->col(q + 1) += c;
          bar->col(q + 2) -= c;
        }

        for (std::size_t j = i + 1; j < m; ++j) {
          const DirEdge& ep = ds.edges[j];
          const Eigen::Index qj = ds.first_point + Eigen::Index(3 * j);
          double dist = std::abs(e.smid - ep.smid);
          if (ds.closed) dist = std::min(dist, ds.length - dist);
          const Vec2 rcj = ds.mask.cwiseProduct(u.col(qj) - ep.g_center);
          const Vec2 diff = (rc - rcj) / dist;
          bd.penalty_seminorm_term += gamma_ * diff.squaredNorm() * e.w * ep.w;
          if (bar) {
            const Vec2 c = (2.0 * gamma_ * e.w * ep.w / dist) * diff;
            bar->col(q) += c;
            bar->col(qj) -= c;
          }
        }
      }
    }

    for (std::size_t i = 0; i < neumann_.size(); ++i) {
      const Eigen::Index q = neu_base_ + Eigen::Index(i);
      bd.traction_term += neumann_[i].dot(u.col(q));
      if (bar) bar->col(q) -= neumann_[i];
    }

    bd.total = bd.strain_term + bd.div_term + bd.penalty_l2_term + bd.penalty_seminorm_term -
               bd.body_load_term - bd.traction_term;
    return bd;
  }

  // Energy of a generic displacement field.
  template <typename Field>
  EnergyBreakdown evaluate(Field&& field) const {
    Eigen::Matrix2Xd u(2, points_.cols());
    for (Eigen::Index i = 0; i < points_.cols(); ++i) u.col(i) = field(Vec2(points_.col(i)));
    return objective(u, nullptr);
  }

  // Energy and exact parameter gradient of a network displacement.
  EnergyBreakdown energy_and_gradient(const MlpParams& params, ParamGradient& grad,
                                      BatchWorkspace& ws, int threads = 1) const {
    EnergyBreakdown bd;
    PointWorkload w;
    w.points = points_;  // note: copies; prefer the overload below in hot loops
    w.objective = [&](const Eigen::Matrix2Xd& u, Eigen::Matrix2Xd& bar) {
      bd = objective(u, &bar);
      return bd.total;
    };
    backward(params, w, grad, ws, threads);
    return bd;
  }

  // Allocation-free variant for training loops: forward into ws, assemble,
  // reverse. Equivalent to energy_and_gradient.
  EnergyBreakdown energy_and_gradient_inplace(const MlpParams& params, ParamGradient& grad,
                                              BatchWorkspace& ws, int threads = 1) const {
    forward_batch(params, points_, ws, threads);
    ws.out_bar.setZero(2, points_.cols());
    EnergyBreakdown bd = objective(ws.out, &ws.out_bar);

    const Eigen::Index n = points_.cols();
    const Eigen::Index nblocks = (n + kBatchBlock - 1) / kBatchBlock;
    if (ws.block_grads.size() != std::size_t(nblocks) ||
        ws.block_grads.front().sizes != params.sizes) {
      ws.block_grads.assign(std::size_t(nblocks), zeros_like_params(params.sizes));
    }
    detail::run_blocks(n, threads, [&](Eigen::Index b, int wid) {
      const Eigen::Index c0 = b * kBatchBlock;
      const Eigen::Index nc = std::min(kBatchBlock, n - c0);
      ParamGradient& g = ws.block_grads[std::size_t(b)];
      for (int j = 0; j < params.layer_count(); ++j) {
        g.weights[j].setZero();
        if (j > 0) g.biases[j].setZero();
      }
      detail::reverse_block(params, ws, c0, nc, wid, g);
    });
    detail::reduce_block_grads(params, ws, grad);
    return bd;
  }

 private:
  struct CellQuad {
    double weight = 0.0;
    Vec2 fw = Vec2::Zero();
  };
  struct DirEdge {
    double w = 0.0, smid = 0.0, half_step = 0.0;
    Vec2 g_center = Vec2::Zero(), g_plus = Vec2::Zero(), g_minus = Vec2::Zero();
  };
  struct DirSegment {
    Vec2 mask = Vec2::Ones();
    bool closed = false;
    double length = 0.0;
    Eigen::Index first_point = 0;
    std::vector<DirEdge> edges;
  };

  double mu_, lambda_, gamma_, dx_ = 0.0;
  std::vector<CellQuad> cells_;
  std::vector<DirSegment> dir_segments_;
  std::vector<Vec2> neumann_;
  Eigen::Index dir_base_ = 0, neu_base_ = 0;
  Eigen::Matrix2Xd points_;
};

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

template <typename Field>
EnergyBreakdown discrete_energy(Field&& field, const QuadMesh& mesh, const ProblemSpec& prob,
                                const PenaltyConfig& penalty,
                                std::optional<double> dx = std::nullopt) {
  return LossAssembly(mesh, prob, penalty, dx).evaluate(std::forward<Field>(field));
}

inline EnergyBreakdown discrete_energy(const MlpParams& params, const QuadMesh& mesh,
                                       const ProblemSpec& prob, const PenaltyConfig& penalty,
                                       std::optional<double> dx = std::nullopt) {
  return discrete_energy([&](const Vec2& x) { return forward(params, x); }, mesh, prob, penalty,
                         dx);
}

// Discrete bilinear form a_T(u, v): strain and divergence products over cell
// centroids plus the H^1/2 penalty products over Dirichlet edges. Assembled
// independently of LossAssembly (used to cross-check the energy identity).
template <typename FU, typename FV>
double assemble_bilinear(FU&& uf, FV&& vf, const QuadMesh& mesh, const ProblemSpec& prob,
                         const PenaltyConfig& penalty, std::optional<double> dx = std::nullopt) {
  const double h = dx ? *dx : min_cell_size(mesh) / 4.0;
  const Material& m = prob.material;
  double acc = 0.0;
  for (const auto& c : mesh.cells) {
    const Vec2 x = mesh.cell_centroid(c);
    const Mat2 gu = nd_gradient(uf, x, h);
    const Mat2 gv = nd_gradient(vf, x, h);
    const Mat2 eu = symmetric_part(gu), ev = symmetric_part(gv);
    acc += (2.0 * m.mu * eu.cwiseProduct(ev).sum() + m.lambda * gu.trace() * gv.trace()) *
           mesh.cell_measure(c);
  }
  const double gamma = penalty.gamma(m);
  for (const auto& seg : mesh.domain.segments) {
    if (seg.type != BcType::Dirichlet) continue;
    const auto& group = mesh.edges[seg.id];
    for (const auto& e : group) {
      const Vec2 ue = detail::apply_mask(seg.mask, uf(e.centroid));
      const Vec2 ve = detail::apply_mask(seg.mask, vf(e.centroid));
      acc += gamma * ue.dot(ve) * e.measure;
    }
    for (const auto& e : group) {
      for (const auto& ep : group) {
        const Vec2 du = detail::apply_mask(seg.mask, divided_difference(seg, uf, e, ep));
        const Vec2 dv = detail::apply_mask(seg.mask, divided_difference(seg, vf, e, ep));
        acc += gamma * du.dot(dv) * e.measure * ep.measure;
      }
    }
  }
  return acc;
}

// Discrete linear form f_T(v).
template <typename FV>
double assemble_linear(FV&& vf, const QuadMesh& mesh, const ProblemSpec& prob,
                       const PenaltyConfig& penalty) {
  double acc = 0.0;
  for (const auto& c : mesh.cells) {
    const Vec2 x = mesh.cell_centroid(c);
    acc += prob.body_force(x).dot(vf(x)) * mesh.cell_measure(c);
  }
  const double gamma = penalty.gamma(prob.material);
  for (const auto& seg : mesh.domain.segments) {
    const auto& group = mesh.edges[seg.id];
    if (seg.type == BcType::Neumann) {
      for (const auto& e : group) {
        acc += prob.neumann(seg.id, e.centroid).dot(vf(e.centroid)) * e.measure;
      }
      continue;
    }
    const auto gd = [&](const Vec2& x) { return prob.dirichlet(seg.id, x); };
    for (const auto& e : group) {
      const Vec2 ge = detail::apply_mask(seg.mask, gd(e.centroid));
      const Vec2 ve = detail::apply_mask(seg.mask, vf(e.centroid));
      acc += gamma * ge.dot(ve) * e.measure;
    }
    for (const auto& e : group) {
      for (const auto& ep : group) {
        const Vec2 dg = detail::apply_mask(seg.mask, divided_difference(seg, gd, e, ep));
        const Vec2 dv = detail::apply_mask(seg.mask, divided_difference(seg, vf, e, ep));
        acc += gamma * dg.dot(dv) * e.measure * ep.measure;
      }
    }
  }
  return acc;
}

struct ErrorNorms {
  double rel_energy = 0.0;
  double rel_sigma_l2 = 0.0;
  double rel_u_l2 = 0.0;
};

// Relative errors against the problem's exact solution, evaluated with the
// same composite quadrature: energy norm sqrt(a_T(e,e)/a_T(u,u)) on the error
// field, and relative L2 norms of u and sigma over cell centroids.
template <typename Field>
ErrorNorms energy_norm_error(Field&& u_n, const QuadMesh& mesh, const ProblemSpec& prob,
                             const PenaltyConfig& penalty,
                             std::optional<double> dx = std::nullopt) {
  if (!prob.exact) throw std::invalid_argument("energy_norm_error: no exact solution available");
  const auto& exact = *prob.exact;
  const auto err_field = [&](const Vec2& x) -> Vec2 { return exact.u(x) - u_n(x); };

  ErrorNorms out;
  const double num = assemble_bilinear(err_field, err_field, mesh, prob, penalty, dx);
  const double den = assemble_bilinear(exact.u, exact.u, mesh, prob, penalty, dx);
  out.rel_energy = std::sqrt(num / den);

  const double h = dx ? *dx : min_cell_size(mesh) / 4.0;
  double u_num = 0.0, u_den = 0.0, s_num = 0.0, s_den = 0.0;
  for (const auto& c : mesh.cells) {
    const Vec2 x = mesh.cell_centroid(c);
    const double w = mesh.cell_measure(c);
    const Vec2 ue = exact.u(x);
    const Vec2 un = u_n(x);
    u_num += (ue - un).squaredNorm() * w;
    u_den += ue.squaredNorm() * w;
    const Mat2 se = stress(prob.material, exact.grad_u(x));
    const Mat2 sn = stress(prob.material, nd_gradient(u_n, x, h));
    s_num += (se - sn).squaredNorm() * w;
    s_den += se.squaredNorm() * w;
  }
  out.rel_u_l2 = std::sqrt(u_num / u_den);
  out.rel_sigma_l2 = std::sqrt(s_num / s_den);
  return out;
}

}  // namespace dritz
