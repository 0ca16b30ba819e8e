#pragma once

#include <chrono>
#include <functional>

#include "dritz/functional.hpp"
#include "dritz/network.hpp"

namespace dritz {

// Step-decay schedule: rate = initial * decay^floor(iteration / interval).
// The benchmark setting "decays 90% every 50000 iterations" reads as
// decay = 0.1; the alternative multiply-by-0.9 reading is decay = 0.9.
struct LrSchedule {
  double initial = 0.01;
  double decay = 0.1;
  long interval = 50000;
};

inline double schedule_lr(const LrSchedule& s, long iteration) {
  if (iteration < 0) throw std::invalid_argument("schedule_lr: negative iteration");
  if (s.interval <= 0 || s.decay == 1.0) return s.initial;
  return s.initial * std::pow(s.decay, double(iteration / s.interval));
}

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  LrSchedule schedule;

  static AdamState fresh(Eigen::Index n, const LrSchedule& sched) {
    AdamState s;
    s.m = Eigen::VectorXd::Zero(n);
    s.v = Eigen::VectorXd::Zero(n);
    s.schedule = sched;
    return s;
  }
};

// One bias-corrected Adam update, in place.
inline void adam_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdamState& st) {
  if (theta.size() != grad.size() || theta.size() != st.m.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  const double lr = schedule_lr(st.schedule, st.t);  // iteration index before this step
  st.t += 1;
  st.m = st.beta1 * st.m + (1.0 - st.beta1) * grad;
  st.v = st.beta2 * st.v.array().matrix() + (1.0 - st.beta2) * grad.array().square().matrix();
  const double c1 = 1.0 - std::pow(st.beta1, double(st.t));
  const double c2 = 1.0 - std::pow(st.beta2, double(st.t));
  theta.array() -= lr * (st.m.array() / c1) / ((st.v.array() / c2).sqrt() + st.eps);
}

struct TrainLogEntry {
  long iteration = 0;
  double loss = 0.0;
  EnergyBreakdown breakdown;
  double grad_norm = 0.0;
  double lr = 0.0;
  double wall_ms = 0.0;  // kept in memory; omitted from the serialized log
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
};

struct TrainConfig {
  long iterations = 0;
  LrSchedule schedule;
  int threads = 1;
  long log_stride = 100;
  long checkpoint_stride = 0;  // 0 = no periodic checkpoints
  std::uint64_t seed = 0;      // bookkeeping only; training itself is deterministic
  std::function<void(long, const MlpParams&)> checkpoint_hook;
};

struct TrainResult {
  MlpParams params;
  TrainLog log;
};

// Full-batch minimization of J_T: every iteration assembles the exact
// gradient over all quadrature points and applies one Adam step. A final
// entry with the post-training loss is always appended (so a 0-iteration
// warm start reproduces the checkpointed loss).
inline TrainResult train(MlpParams net, const LossAssembly& assembly, const TrainConfig& cfg) {
  if (cfg.iterations < 0) throw std::invalid_argument("train: negative iteration count");
  const auto t0 = std::chrono::steady_clock::now();
  const auto wall = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  Eigen::VectorXd theta;
  flatten_into(net, theta);
  AdamState state = AdamState::fresh(theta.size(), cfg.schedule);
  ParamGradient grad = zeros_like_params(net.sizes);
  Eigen::VectorXd gflat(theta.size());
  BatchWorkspace ws;
  TrainResult out;

  for (long it = 0; it < cfg.iterations; ++it) {
    const EnergyBreakdown bd = assembly.energy_and_gradient_inplace(net, grad, ws, cfg.threads);
    if (!std::isfinite(bd.total)) throw NonFiniteLossError(it, theta.norm());
    flatten_into(grad, gflat);
    if (cfg.log_stride > 0 && it % cfg.log_stride == 0) {
      out.log.entries.push_back(
          {it, bd.total, bd, gflat.norm(), schedule_lr(cfg.schedule, it), wall()});
    }
    adam_step(theta, gflat, state);
    unflatten_into(net, theta);
    if (cfg.checkpoint_stride > 0 && cfg.checkpoint_hook && (it + 1) % cfg.checkpoint_stride == 0) {
      cfg.checkpoint_hook(it + 1, net);
    }
  }

  const EnergyBreakdown bd = assembly.energy_and_gradient_inplace(net, grad, ws, cfg.threads);
  if (!std::isfinite(bd.total)) throw NonFiniteLossError(cfg.iterations, theta.norm());
  flatten_into(grad, gflat);
  out.log.entries.push_back({cfg.iterations, bd.total, bd, gflat.norm(),
                             schedule_lr(cfg.schedule, cfg.iterations), wall()});
  out.params = std::move(net);
  return out;
}

inline TrainResult train(MlpParams net, const QuadMesh& mesh, const ProblemSpec& prob,
                         const PenaltyConfig& penalty, const TrainConfig& cfg,
                         std::optional<double> dx = std::nullopt) {
  return train(std::move(net), LossAssembly(mesh, prob, penalty, dx), cfg);
}

}  // namespace dritz
