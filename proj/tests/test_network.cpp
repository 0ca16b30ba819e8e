#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "dritz/network.hpp"
#include "support/oracles.hpp"

using namespace dritz;

TEST_CASE("parameter counts match the benchmark table") {
  CHECK(init_params({2, 8, 8, 2}, 1).parameter_count() == 106);
  CHECK(init_params({2, 16, 16, 2}, 1).parameter_count() == 338);
  CHECK(init_params({2, 32, 32, 2}, 1).parameter_count() == 1186);
  CHECK(init_params({2, 48, 48, 48, 2}, 1).parameter_count() == 4898);
  CHECK(init_params({2, 64, 64, 64, 2}, 1).parameter_count() == 8578);
}

TEST_CASE("initialization is deterministic in the seed") {
  const MlpParams a = init_params({2, 8, 8, 2}, 42);
  const MlpParams b = init_params({2, 8, 8, 2}, 42);
  const MlpParams c = init_params({2, 8, 8, 2}, 43);
  CHECK(flatten(a) == flatten(b));
  CHECK(flatten(a) != flatten(c));
  CHECK(a.biases[1].isZero(0.0));
  CHECK(a.biases[2].isZero(0.0));
  const double bound = 1.0 / std::sqrt(2.0);
  CHECK(a.weights[0].cwiseAbs().maxCoeff() <= bound);
}

TEST_CASE("degenerate layer layouts are rejected") {
  CHECK_THROWS_AS(init_params({2, 2}, 1), std::invalid_argument);
  CHECK_THROWS_AS(init_params({2, 0, 2}, 1), std::invalid_argument);
  CHECK_THROWS_AS(init_params({3, 8, 2}, 1), std::invalid_argument);
  CHECK_THROWS_AS(init_params({2, 8, 3}, 1), std::invalid_argument);
}

TEST_CASE("forward: hand-checked evaluations") {
  SECTION("all-zero parameters give the zero map") {
    const MlpParams p = zeros_like_params({2, 8, 8, 2});
    CHECK(forward(p, Vec2(0.3, -0.7)) == Vec2(0.0, 0.0));
  }
  SECTION("single hidden unit, tau(0) = 0.5 routed through unit output weights") {
    MlpParams p = zeros_like_params({2, 1, 2});
    p.weights[1] << 1.0, 1.0;  // column vector [1;1]
    const Vec2 u = forward(p, Vec2(0.9, -0.4));
    CHECK(u.x() == Catch::Approx(0.5));
    CHECK(u.y() == Catch::Approx(0.5));
  }
  SECTION("output bias is subtracted") {
    MlpParams p = zeros_like_params({2, 4, 2});
    p.biases[1] = Eigen::Vector2d(1.0, 2.0);
    const Vec2 u = forward(p, Vec2(0.0, 0.0));
    CHECK(u.x() == Catch::Approx(-1.0));
    CHECK(u.y() == Catch::Approx(-2.0));
  }
}

TEST_CASE("flatten and unflatten round-trip exactly") {
  for (std::uint64_t seed : {1ull, 7ull, 99ull}) {
    const MlpParams p = init_params({2, 5, 3, 2}, seed);
    const Eigen::VectorXd v = flatten(p);
    const MlpParams q = unflatten(p.sizes, v);
    CHECK(flatten(q) == v);
  }
  const MlpParams p = init_params({2, 4, 2}, 3);
  Eigen::VectorXd bad(p.parameter_count() + 1);
  CHECK_THROWS_AS(unflatten(p.sizes, bad), std::invalid_argument);
}

TEST_CASE("batched forward matches pointwise forward, independent of threads") {
  const MlpParams p = init_params({2, 8, 8, 2}, 5);
  Eigen::Matrix2Xd pts(2, 533);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (Eigen::Index i = 0; i < pts.cols(); ++i) pts.col(i) = Vec2(dist(rng), dist(rng));

  BatchWorkspace ws1, ws2;
  forward_batch(p, pts, ws1, 1);
  forward_batch(p, pts, ws2, 2);
  CHECK(ws1.out == ws2.out);  // bitwise: fixed block partition
  for (Eigen::Index i = 0; i < pts.cols(); i += 97) {
    const Vec2 u = forward(p, Vec2(pts.col(i)));
    CHECK(ws1.out(0, i) == Catch::Approx(u.x()).epsilon(1e-14));
    CHECK(ws1.out(1, i) == Catch::Approx(u.y()).epsilon(1e-14));
  }
}

namespace {

PointWorkload squared_norm_at(const Vec2& x0) {
  PointWorkload w;
  w.points.resize(2, 1);
  w.points.col(0) = x0;
  w.objective = [](const Eigen::Matrix2Xd& u, Eigen::Matrix2Xd& bar) {
    bar.col(0) += 2.0 * u.col(0);
    return u.col(0).squaredNorm();
  };
  return w;
}

}  // namespace

TEST_CASE("backward: zero-initialized net") {
  const MlpParams p = zeros_like_params({2, 6, 6, 2});
  ParamGradient g;
  const double val = backward(p, squared_norm_at(Vec2(0.2, 0.1)), g);
  CHECK(val == 0.0);
  CHECK(flatten(g).isZero(0.0));  // dJ/du = 2u = 0 kills every path

  // a linear objective leaves gradient only in the output layer's path
  PointWorkload lin;
  lin.points.resize(2, 1);
  lin.points.col(0) = Vec2(0.2, 0.1);
  lin.objective = [](const Eigen::Matrix2Xd& u, Eigen::Matrix2Xd& bar) {
    bar(0, 0) += 1.0;
    return u(0, 0);
  };
  const double v2 = backward(p, lin, g);
  CHECK(v2 == 0.0);
  CHECK(g.biases[2] == Eigen::Vector2d(-1.0, 0.0));
  CHECK(g.weights[2].row(0).isApprox(Eigen::RowVectorXd::Constant(6, 0.5), 1e-15));
  CHECK(g.weights[0].isZero(0.0));  // zero output weights block the chain
  CHECK(g.weights[1].isZero(0.0));
}

TEST_CASE("backward matches central finite differences on random workloads") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (std::uint64_t seed : {11ull, 23ull, 31ull}) {
    const MlpParams p = init_params({2, 6, 5, 2}, seed);
    PointWorkload w;
    const int n = 40;
    w.points.resize(2, n);
    Eigen::VectorXd coef(n);
    for (int i = 0; i < n; ++i) {
      w.points.col(i) = Vec2(dist(rng), dist(rng));
      coef[i] = dist(rng);
    }
    w.objective = [&coef](const Eigen::Matrix2Xd& u, Eigen::Matrix2Xd& bar) {
      double j = 0.0;
      for (Eigen::Index i = 0; i < u.cols(); ++i) {
        j += coef[i] * u.col(i).squaredNorm() + 0.3 * u(1, i);
        bar.col(i) += 2.0 * coef[i] * u.col(i) + Vec2(0.0, 0.3);
      }
      return j;
    };
    ParamGradient g;
    backward(p, w, g);
    const Eigen::VectorXd fd = testing::fd_gradient(p, [&](const MlpParams& q) {
      Eigen::Matrix2Xd bar = Eigen::Matrix2Xd::Zero(2, n);
      BatchWorkspace ws;
      forward_batch(q, w.points, ws);
      return w.objective(ws.out, bar);
    });
    CHECK(testing::max_rel_error(flatten(g), fd) < 1e-5);
  }
}

TEST_CASE("backward is linear in the objective") {
  const MlpParams p = init_params({2, 7, 2}, 9);
  PointWorkload w = squared_norm_at(Vec2(-0.4, 0.6));
  ParamGradient g1;
  backward(p, w, g1);
  PointWorkload w3 = w;
  w3.objective = [](const Eigen::Matrix2Xd& u, Eigen::Matrix2Xd& bar) {
    bar.col(0) += 6.0 * u.col(0);
    return 3.0 * u.col(0).squaredNorm();
  };
  ParamGradient g3;
  backward(p, w3, g3);
  CHECK(flatten(g3).isApprox(3.0 * flatten(g1), 1e-14));
}

TEST_CASE("backward gradient is bitwise independent of the thread count") {
  const MlpParams p = init_params({2, 8, 8, 2}, 21);
  PointWorkload w;
  const Eigen::Index n = 3 * kBatchBlock / 2;  // forces multiple blocks
  w.points.resize(2, n);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) w.points.col(i) = Vec2(dist(rng), dist(rng));
  w.objective = [](const Eigen::Matrix2Xd& u, Eigen::Matrix2Xd& bar) {
    bar = 2.0 * u;
    return u.squaredNorm();
  };
  ParamGradient g1, g2;
  backward(p, w, g1, 1);
  backward(p, w, g2, 2);
  CHECK(flatten(g1) == flatten(g2));
}

TEST_CASE("ND spatial derivatives converge at second order on sigmoid nets") {
  const MlpParams p = init_params({2, 8, 8, 2}, 3);
  const auto field = [&](const Vec2& x) { return forward(p, x); };
  double prev_err = 0.0;
  double order_min = 10.0;
  double dx = 0.2;
  for (int k = 0; k < 4; ++k) {
    double err = 0.0;
    for (const Vec2& x : {Vec2(0.1, 0.2), Vec2(-0.5, 0.4), Vec2(0.7, -0.3)}) {
      Mat2 nd;
      const Vec2 ex(dx, 0.0), ey(0.0, dx);
      nd.col(0) = (field(x + ex) - field(x - ex)) / (2.0 * dx);
      nd.col(1) = (field(x + ey) - field(x - ey)) / (2.0 * dx);
      err = std::max(err, (nd - testing::analytic_jacobian(p, x)).norm());
    }
    if (k > 0) order_min = std::min(order_min, std::log2(prev_err / err));
    prev_err = err;
    dx /= 2.0;
  }
  CHECK(order_min >= 1.9);
}

TEST_CASE("checkpoints round-trip bit for bit") {
  const MlpParams p = init_params({2, 8, 8, 2}, 123);
  std::stringstream ss;
  save_checkpoint(p, ss);
  const MlpParams q = load_checkpoint(ss);
  CHECK(q.sizes == p.sizes);
  CHECK(flatten(q) == flatten(p));

  SECTION("corrupt header is rejected") {
    std::stringstream bad("layer,2,8\n0.5\n");
    CHECK_THROWS_AS(load_checkpoint(bad), std::runtime_error);
  }
  SECTION("truncated parameter list is rejected") {
    std::stringstream t;
    save_checkpoint(p, t);
    std::string text = t.str();
    text.resize(text.size() / 2);
    std::stringstream half(text);
    CHECK_THROWS_AS(load_checkpoint(half), std::runtime_error);
  }
}
