#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "dritz/functional.hpp"
#include "dritz/optimize.hpp"

namespace dritz {

// ---------------------------------------------------------------------------
// Residual-based local error indicator
//   eta_T = |T|^((2-d)/(2d)) | integral_{dT} sigma n dS + integral_T f dx |
// with d = 2 (prefactor 1). One midpoint per face for the boundary flux,
// cell-centroid midpoint for the body-force term.
// ---------------------------------------------------------------------------

template <typename Field>
double local_indicator(Field&& u, const Material& mat, const FieldFn& body_force,
                       const QuadMesh& mesh, const Cell& cell, double dx) {
  if (!(dx > 0.0)) throw std::invalid_argument("local_indicator: step must be positive");
  Vec2 acc = body_force(mesh.cell_centroid(cell)) * mesh.cell_measure(cell);
  for (int face = 0; face < 4; ++face) {
    const FaceGeom fg = mesh.domain.face_geom(cell.lo, cell.size, face);
    const Mat2 sig = stress(mat, nd_gradient(u, fg.midpoint, dx));
    acc += (sig * fg.normal) * fg.length;
  }
  return acc.norm();
}

struct IndicatorField {
  std::vector<CellId> ids;   // aligned with the mesh's cell order
  std::vector<double> eta;
  double total = 0.0;
  double mean = 0.0;
  std::vector<CellId> marked;
};

template <typename Field>
IndicatorField compute_indicators(Field&& u, const QuadMesh& mesh, const ProblemSpec& prob,
                                  double dx) {
  IndicatorField f;
  f.ids.reserve(mesh.cells.size());
  f.eta.reserve(mesh.cells.size());
  for (const auto& c : mesh.cells) {
    f.ids.push_back(c.id);
    f.eta.push_back(local_indicator(u, prob.material, prob.body_force, mesh, c, dx));
  }
  f.total = std::accumulate(f.eta.begin(), f.eta.end(), 0.0);
  f.mean = f.eta.empty() ? 0.0 : f.total / double(f.eta.size());
  return f;
}

// ---------------------------------------------------------------------------
// Marking strategies
// ---------------------------------------------------------------------------

// { T : eta_T >= (gamma2 / #T) * sum eta }
inline std::vector<CellId> mark_average(const IndicatorField& f, double gamma2) {
  if (!(gamma2 > 0.0)) throw std::invalid_argument("mark_average: gamma2 must be positive");
  if (f.eta.empty()) throw std::invalid_argument("mark_average: empty indicator field");
  const double threshold = gamma2 * f.total / double(f.eta.size());
  std::vector<CellId> out;
  for (std::size_t i = 0; i < f.eta.size(); ++i) {
    if (f.eta[i] >= threshold) out.push_back(f.ids[i]);
  }
  return out;
}

// Minimal subset with sum of marked eta^2 >= gamma1 * total eta^2: sort by
// eta descending (ties by cell id) and take the shortest qualifying prefix.
inline std::vector<CellId> mark_bulk(const IndicatorField& f, double gamma1) {
  if (!(gamma1 > 0.0 && gamma1 < 1.0)) {
    throw std::invalid_argument("mark_bulk: gamma1 must lie in (0, 1)");
  }
  std::vector<std::size_t> order(f.eta.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (f.eta[a] != f.eta[b]) return f.eta[a] > f.eta[b];
    return f.ids[a] < f.ids[b];
  });
  double total_sq = 0.0;
  for (double e : f.eta) total_sq += e * e;
  const double target = gamma1 * total_sq;
  std::vector<CellId> out;
  double acc = 0.0;
  for (std::size_t idx : order) {
    if (acc >= target) break;
    out.push_back(f.ids[idx]);
    acc += f.eta[idx] * f.eta[idx];
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Adaptive quadrature refinement (fixed network architecture):
//   (1) compute indicators, (2) mark + refine, (3) retrain on the new mesh
//   warm-started from the current weights, (4) continue while the aggregate
//   indicator keeps dropping by the stop factor; otherwise output the
//   previous mesh.
// ---------------------------------------------------------------------------

enum class MarkStrategy { Average, Bulk };
enum class EtaAggregate { Mean, Sum };

struct AqrConfig {
  MarkStrategy strategy = MarkStrategy::Average;
  double gamma1 = 0.3;       // bulk
  double gamma2 = 1.0;       // average
  double gamma_stop = 0.9;   // continue while eta' <= gamma_stop * eta
  int max_runs = 4;          // counts the initial (already trained) run as run 1
  double eta_floor = 0.0;    // aggregate below this stops immediately
  EtaAggregate aggregate = EtaAggregate::Mean;
  std::optional<double> dx_override;
};

struct AqrRunRecord {
  int run = 0;
  std::size_t n_cells = 0;
  double eta_mean = 0.0;
  double eta_total = 0.0;
  std::size_t marked = 0;
  std::string status;
};

struct AqrHistory {
  std::vector<AqrRunRecord> runs;
  std::string final_status;
};

namespace detail {

inline double aggregate_eta(const IndicatorField& f, EtaAggregate mode) {
  return mode == EtaAggregate::Mean ? f.mean : f.total;
}

inline std::vector<CellId> mark(const IndicatorField& f, const AqrConfig& cfg) {
  return cfg.strategy == MarkStrategy::Average ? mark_average(f, cfg.gamma2)
                                               : mark_bulk(f, cfg.gamma1);
}

}  // namespace detail

// Solver concept: field() returns the displacement evaluator for the current
// state; retrain(mesh) updates the state on a refined mesh (warm start);
// snapshot()/restore() support discarding a rejected refinement.
template <typename Solver,
          typename Callback = std::function<void(int, const QuadMesh&, const IndicatorField&)>>
AqrHistory aqr_run(Solver& solver, QuadMesh& mesh, const ProblemSpec& prob, const AqrConfig& cfg,
                   Callback&& per_run = [](int, const QuadMesh&, const IndicatorField&) {}) {
  if (cfg.max_runs < 1) throw std::invalid_argument("aqr_run: max_runs must be >= 1");
  AqrHistory hist;
  const auto dx_for = [&](const QuadMesh& m) {
    return cfg.dx_override ? *cfg.dx_override : min_cell_size(m) / 4.0;
  };

  IndicatorField ind = compute_indicators(solver.field(), mesh, prob, dx_for(mesh));
  hist.runs.push_back({1, mesh.cells.size(), ind.mean, ind.total, 0, "trained"});
  per_run(1, mesh, ind);

  for (int run = 2; run <= cfg.max_runs; ++run) {
    if (detail::aggregate_eta(ind, cfg.aggregate) <= cfg.eta_floor) {
      hist.final_status = "converged-indicator";
      return hist;
    }
    ind.marked = detail::mark(ind, cfg);
    hist.runs.back().marked = ind.marked.size();
    if (ind.marked.empty()) {
      hist.final_status = "converged-marking";
      return hist;
    }
    QuadMesh refined = refine(mesh, ind.marked);
    auto saved = solver.snapshot();
    solver.retrain(refined);
    IndicatorField ind2 = compute_indicators(solver.field(), refined, prob, dx_for(refined));
    hist.runs.push_back({run, refined.cells.size(), ind2.mean, ind2.total, 0, "trained"});
    per_run(run, refined, ind2);
    const double before = detail::aggregate_eta(ind, cfg.aggregate);
    const double after = detail::aggregate_eta(ind2, cfg.aggregate);
    if (after <= cfg.gamma_stop * before) {
      mesh = std::move(refined);
      ind = std::move(ind2);
      continue;
    }
    hist.runs.back().status = "rejected";
    solver.restore(saved);
    hist.final_status = "stopped-by-criterion";
    return hist;
  }
  hist.final_status = "max-runs";
  return hist;
}

// Network-backed solver: retraining minimizes J_T on the refined mesh with
// weights transferred from the previous run.
struct NetworkSolver {
  MlpParams params;
  const ProblemSpec* problem = nullptr;
  PenaltyConfig penalty;
  TrainConfig budget;  // per-run training budget
  TrainLog last_log;

  auto field() const {
    return [this](const Vec2& x) { return forward(params, x); };
  }
  MlpParams snapshot() const { return params; }
  void restore(MlpParams saved) { params = std::move(saved); }
  void retrain(const QuadMesh& mesh) {
    TrainResult r = train(params, mesh, *problem, penalty, budget);
    params = std::move(r.params);
    last_log = std::move(r.log);
  }
};

// Oracle solver for injecting a known displacement field (tests, diagnostics).
struct OracleSolver {
  FieldFn u;
  const FieldFn& field() const { return u; }
  int snapshot() const { return 0; }
  void restore(int) {}
  void retrain(const QuadMesh&) {}
};

}  // namespace dritz
