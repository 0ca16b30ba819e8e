#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <functional>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dritz/core.hpp"

namespace dritz {

// ---------------------------------------------------------------------------
// Fully connected network x in R^2 -> u(x) in R^2.
//
// Hidden layers apply tau(W x - b) with tau the sigmoid; the output layer is
// affine, u = W a - b. The first hidden layer carries no bias parameter (the
// benchmark parameter counts 106/338/1186/... all follow this layout).
// ---------------------------------------------------------------------------

struct MlpParams {
  std::vector<int> sizes;                      // [2, n1, ..., 2]
  std::vector<Eigen::MatrixXd> weights;        // one per layer
  std::vector<Eigen::VectorXd> biases;         // biases[0] stays empty

  int layer_count() const { return static_cast<int>(weights.size()); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      n += static_cast<std::size_t>(weights[j].size());
      if (j > 0) n += static_cast<std::size_t>(biases[j].size());
    }
    return n;
  }
};

// Parameter gradients share the exact shape of the parameter set.
using ParamGradient = MlpParams;

inline void validate_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 3) throw std::invalid_argument("mlp: need at least one hidden layer");
  if (sizes.front() != 2 || sizes.back() != 2) {
    throw std::invalid_argument("mlp: input and output dimension must be 2");
  }
  for (std::size_t i = 1; i + 1 < sizes.size(); ++i) {
    if (sizes[i] < 1) throw std::invalid_argument("mlp: hidden sizes must be >= 1");
  }
}

inline MlpParams zeros_like_params(const std::vector<int>& sizes) {
  validate_sizes(sizes);
  MlpParams p;
  p.sizes = sizes;
  const int L = static_cast<int>(sizes.size()) - 1;
  p.weights.resize(L);
  p.biases.resize(L);
  for (int j = 0; j < L; ++j) {
    p.weights[j] = Eigen::MatrixXd::Zero(sizes[j + 1], sizes[j]);
    p.biases[j] = j == 0 ? Eigen::VectorXd() : Eigen::VectorXd::Zero(sizes[j + 1]);
  }
  return p;
}

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases, fully
// determined by the seed (row-major fill order).
inline MlpParams init_params(const std::vector<int>& sizes, std::uint64_t seed) {
  MlpParams p = zeros_like_params(sizes);
  std::mt19937_64 rng(seed);
  for (int j = 0; j < p.layer_count(); ++j) {
    const double bound = 1.0 / std::sqrt(double(sizes[j]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index r = 0; r < p.weights[j].rows(); ++r) {
      for (Eigen::Index c = 0; c < p.weights[j].cols(); ++c) {
        p.weights[j](r, c) = dist(rng);
      }
    }
  }
  return p;
}

inline Eigen::VectorXd flatten(const MlpParams& p) {
  Eigen::VectorXd v(p.parameter_count());
  Eigen::Index k = 0;
  for (int j = 0; j < p.layer_count(); ++j) {
    for (Eigen::Index r = 0; r < p.weights[j].rows(); ++r) {
      for (Eigen::Index c = 0; c < p.weights[j].cols(); ++c) v[k++] = p.weights[j](r, c);
    }
    if (j > 0) {
      for (Eigen::Index r = 0; r < p.biases[j].size(); ++r) v[k++] = p.biases[j][r];
    }
  }
  return v;
}

inline void flatten_into(const MlpParams& p, Eigen::VectorXd& v) {
  v.resize(p.parameter_count());
  Eigen::Index k = 0;
  for (int j = 0; j < p.layer_count(); ++j) {
    for (Eigen::Index r = 0; r < p.weights[j].rows(); ++r) {
      for (Eigen::Index c = 0; c < p.weights[j].cols(); ++c) v[k++] = p.weights[j](r, c);
    }
    if (j > 0) {
      for (Eigen::Index r = 0; r < p.biases[j].size(); ++r) v[k++] = p.biases[j][r];
    }
  }
}

inline void unflatten_into(MlpParams& p, const Eigen::VectorXd& v) {
  if (static_cast<std::size_t>(v.size()) != p.parameter_count()) {
    throw std::invalid_argument("unflatten: wrong parameter count");
  }
  Eigen::Index k = 0;
  for (int j = 0; j < p.layer_count(); ++j) {
    for (Eigen::Index r = 0; r < p.weights[j].rows(); ++r) {
      for (Eigen::Index c = 0; c < p.weights[j].cols(); ++c) p.weights[j](r, c) = v[k++];
    }
    if (j > 0) {
      for (Eigen::Index r = 0; r < p.biases[j].size(); ++r) p.biases[j][r] = v[k++];
    }
  }
}

inline MlpParams unflatten(const std::vector<int>& sizes, const Eigen::VectorXd& v) {
  MlpParams p = zeros_like_params(sizes);
  if (static_cast<std::size_t>(v.size()) != p.parameter_count()) {
    throw std::invalid_argument("unflatten: wrong parameter count");
  }
  Eigen::Index k = 0;
  for (int j = 0; j < p.layer_count(); ++j) {
    for (Eigen::Index r = 0; r < p.weights[j].rows(); ++r) {
      for (Eigen::Index c = 0; c < p.weights[j].cols(); ++c) p.weights[j](r, c) = v[k++];
    }
    if (j > 0) {
      for (Eigen::Index r = 0; r < p.biases[j].size(); ++r) p.biases[j][r] = v[k++];
    }
  }
  return p;
}

inline Vec2 forward(const MlpParams& p, const Vec2& x) {
  const int L = p.layer_count();
  Eigen::VectorXd a = x;
  for (int j = 0; j < L - 1; ++j) {
    Eigen::VectorXd z = p.weights[j] * a;
    if (j > 0) z -= p.biases[j];
    a = (1.0 + (-z.array()).exp()).inverse().matrix();
  }
  return p.weights[L - 1] * a - p.biases[L - 1];
}

// ---------------------------------------------------------------------------
// Batched evaluation. Points are fixed columns; layer activations are cached
// for the reverse pass. Work is split into fixed-size column blocks so the
// result (and the ordered gradient reduction below) is bitwise independent of
// the thread count.
// ---------------------------------------------------------------------------

inline constexpr Eigen::Index kBatchBlock = 8192;

struct BatchWorkspace {
  std::vector<Eigen::MatrixXd> act;  // act[0] = input copy, act[j] = layer-j output
  Eigen::Matrix2Xd out;              // 2 x N
  Eigen::Matrix2Xd out_bar;          // 2 x N cotangents
  std::vector<ParamGradient> block_grads;
  // per-worker ping-pong buffers; contents never cross block boundaries
  struct Scratch {
    Eigen::MatrixXd a, b;
  };
  std::vector<Scratch> scratch;

  void ensure_scratch(int workers, Eigen::Index rows) {
    if (static_cast<int>(scratch.size()) < workers) scratch.resize(workers);
    for (int t = 0; t < workers; ++t) {
      if (scratch[t].a.rows() < rows || scratch[t].a.cols() < kBatchBlock) {
        scratch[t].a.resize(rows, kBatchBlock);
        scratch[t].b.resize(rows, kBatchBlock);
      }
    }
  }
};

namespace detail {

// Fixed-size column blocks dispatched to a small worker pool. Block results
// depend only on block inputs, so the dispatch order (and the thread count)
// cannot change any output; reductions over blocks happen in block order.
template <typename Fn>
void run_blocks(Eigen::Index n, int threads, Fn&& fn) {
  const Eigen::Index nblocks = (n + kBatchBlock - 1) / kBatchBlock;
  const int nt = std::max(1, std::min<int>(threads, static_cast<int>(nblocks)));
  if (nt == 1) {
    for (Eigen::Index b = 0; b < nblocks; ++b) fn(b, 0);
    return;
  }
  std::atomic<Eigen::Index> next{0};
  auto worker = [&](int wid) {
    for (;;) {
      const Eigen::Index b = next.fetch_add(1);
      if (b >= nblocks) return;
      fn(b, wid);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nt - 1);
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker, t);
  worker(0);
  for (auto& t : pool) t.join();
}

}  // namespace detail

inline void forward_batch(const MlpParams& p, const Eigen::Matrix2Xd& points, BatchWorkspace& ws,
                          int threads = 1) {
  const int L = p.layer_count();
  const Eigen::Index n = points.cols();
  const int max_width = *std::max_element(p.sizes.begin(), p.sizes.end());
  ws.act.resize(L);
  ws.act[0] = points;
  for (int j = 1; j < L; ++j) ws.act[j].resize(p.sizes[j], n);
  ws.out.resize(2, n);
  const Eigen::Index nblocks = (n + kBatchBlock - 1) / kBatchBlock;
  ws.ensure_scratch(std::max(1, std::min<int>(threads, static_cast<int>(nblocks))), max_width);

  detail::run_blocks(n, threads, [&](Eigen::Index b, int wid) {
    const Eigen::Index c0 = b * kBatchBlock;
    const Eigen::Index nc = std::min(kBatchBlock, n - c0);
    Eigen::MatrixXd& z = ws.scratch[wid].a;
    for (int j = 0; j < L - 1; ++j) {
      auto zb = z.topLeftCorner(p.sizes[j + 1], nc);
      zb.noalias() = p.weights[j] * ws.act[j].middleCols(c0, nc);
      if (j > 0) zb.colwise() -= p.biases[j];
      ws.act[j + 1].middleCols(c0, nc) = (1.0 + (-zb.array()).exp()).inverse();
    }
    auto ob = ws.out.middleCols(c0, nc);
    ob.noalias() = p.weights[L - 1] * ws.act[L - 1].middleCols(c0, nc);
    ob.colwise() -= p.biases[L - 1];
  });
}

// A scalar objective built from forward evaluations at finitely many points.
// The callback receives the network outputs U (2 x N), accumulates dJ/dU into
// the zero-initialized cotangent matrix, and returns J.
struct PointWorkload {
  Eigen::Matrix2Xd points;
  std::function<double(const Eigen::Matrix2Xd& outputs, Eigen::Matrix2Xd& cotangents)> objective;
};

// Reverse-mode gradient of the workload's scalar with respect to every
// parameter. Exact for the scalar as defined (spatial derivatives enter as
// differences of forward passes and are differentiated through).
namespace detail {

// Reverse pass over one column block; activations for the block are already
// in ws.act. Gradient contributions accumulate into g.
inline void reverse_block(const MlpParams& p, BatchWorkspace& ws, Eigen::Index c0,
                          Eigen::Index nc, int wid, ParamGradient& g) {
  const int L = p.layer_count();
  Eigen::MatrixXd& s0 = ws.scratch[wid].a;
  Eigen::MatrixXd& s1 = ws.scratch[wid].b;
  s0.topLeftCorner(2, nc) = ws.out_bar.middleCols(c0, nc);
  Eigen::MatrixXd* cur = &s0;
  Eigen::MatrixXd* nxt = &s1;
  Eigen::Index rows = 2;
  for (int j = L - 1; j >= 0; --j) {
    auto delta = cur->topLeftCorner(rows, nc);
    if (j < L - 1) {
      const auto a = ws.act[j + 1].middleCols(c0, nc).array();
      delta.array() *= a * (1.0 - a);
    }
    g.weights[j].noalias() += delta * ws.act[j].middleCols(c0, nc).transpose();
    if (j > 0) {
      g.biases[j].noalias() -= delta.rowwise().sum();
      nxt->topLeftCorner(p.sizes[j], nc).noalias() = p.weights[j].transpose() * delta;
      std::swap(cur, nxt);
      rows = p.sizes[j];
    }
  }
}

inline void reduce_block_grads(const MlpParams& p, BatchWorkspace& ws, ParamGradient& grad) {
  if (grad.sizes != p.sizes) grad = zeros_like_params(p.sizes);
  const int L = p.layer_count();
  for (int j = 0; j < L; ++j) {
    grad.weights[j].setZero();
    if (j > 0) grad.biases[j].setZero();
  }
  for (const auto& g : ws.block_grads) {
    for (int j = 0; j < L; ++j) {
      grad.weights[j] += g.weights[j];
      if (j > 0) grad.biases[j] += g.biases[j];
    }
  }
}

}  // namespace detail

inline double backward(const MlpParams& p, const PointWorkload& w, ParamGradient& grad,
                       BatchWorkspace& ws, int threads = 1) {
  const Eigen::Index n = w.points.cols();
  forward_batch(p, w.points, ws, threads);

  ws.out_bar.setZero(2, n);
  const double value = w.objective(ws.out, ws.out_bar);

  const Eigen::Index nblocks = (n + kBatchBlock - 1) / kBatchBlock;
  if (ws.block_grads.size() != static_cast<std::size_t>(nblocks) ||
      ws.block_grads.front().sizes != p.sizes) {
    ws.block_grads.assign(static_cast<std::size_t>(nblocks), zeros_like_params(p.sizes));
  }
  detail::run_blocks(n, threads, [&](Eigen::Index b, int wid) {
    const Eigen::Index c0 = b * kBatchBlock;
    const Eigen::Index nc = std::min(kBatchBlock, n - c0);
    ParamGradient& g = ws.block_grads[static_cast<std::size_t>(b)];
    for (int j = 0; j < p.layer_count(); ++j) {
      g.weights[j].setZero();
      if (j > 0) g.biases[j].setZero();
    }
    detail::reverse_block(p, ws, c0, nc, wid, g);
  });
  detail::reduce_block_grads(p, ws, grad);
  return value;
}

inline double backward(const MlpParams& p, const PointWorkload& w, ParamGradient& grad,
                       int threads = 1) {
  BatchWorkspace ws;
  return backward(p, w, grad, ws, threads);
}

// ---------------------------------------------------------------------------
// Checkpoints: layer-size header plus one value per line, printed with 17
// significant digits so reloading reproduces the parameters bit for bit.
// ---------------------------------------------------------------------------

inline void save_checkpoint(const MlpParams& p, std::ostream& os) {
  os << "layers";
  for (int s : p.sizes) os << ',' << s;
  os << '\n';
  const Eigen::VectorXd v = flatten(p);
  char buf[64];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    os << buf << '\n';
  }
}

inline MlpParams load_checkpoint(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("layers,", 0) != 0) {
    throw std::runtime_error("checkpoint: missing layer header");
  }
  std::vector<int> sizes;
  std::stringstream hs(header.substr(7));
  std::string tok;
  while (std::getline(hs, tok, ',')) sizes.push_back(std::stoi(tok));
  validate_sizes(sizes);
  MlpParams shape = zeros_like_params(sizes);
  Eigen::VectorXd v(shape.parameter_count());
  std::string line;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::getline(is, line)) throw std::runtime_error("checkpoint: truncated parameter list");
    std::size_t pos = 0;
    v[i] = std::stod(line, &pos);
    if (pos == 0) throw std::runtime_error("checkpoint: malformed value '" + line + "'");
  }
  return unflatten(sizes, v);
}

}  // namespace dritz
