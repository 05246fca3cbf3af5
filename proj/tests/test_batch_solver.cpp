#include <doctest.h>

#include <chrono>
#include <cmath>

#include <Eigen/Cholesky>

#include "nlauc/auc.hpp"
#include "nlauc/batch_solver.hpp"
#include "nlauc/error.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace nlauc;

namespace {

EmbeddedDataset single_pair() {
  Eigen::MatrixXd x(2, 2);
  x << 1, 0, 0, 1;
  return EmbeddedDataset(x, {1, -1});
}

EmbeddedDataset separable_1d() {
  Eigen::MatrixXd x(7, 1);
  x << 1, -1, 1, -1, -1, 1, -1;
  return EmbeddedDataset(x, {1, -1, 1, -1, -1, 1, -1});
}

}  // namespace

TEST_CASE("gradient of a single active pair") {
  const EmbeddedDataset d = single_pair();
  const Eigen::VectorXd g = grad_fast(Eigen::Vector2d::Zero(), d, 1.0);
  CHECK(g[0] == -2.0);
  CHECK(g[1] == 2.0);
}

TEST_CASE("gradient is w when no pair is active") {
  const EmbeddedDataset d = single_pair();
  const Eigen::Vector2d w(1.0, -0.5);  // margin 1.5
  CHECK(grad_fast(w, d, 3.0) == w);
  PairAggregates agg(d, w);
  CHECK(agg.active_pairs() == 0);
  const Eigen::Vector2d v(0.3, 0.9);
  CHECK(hvp_fast(agg, v, d, 3.0) == v);
}

TEST_CASE("Hessian-vector product of a single active pair") {
  const EmbeddedDataset d = single_pair();
  const PairAggregates agg(d, Eigen::Vector2d::Zero());
  const Eigen::Vector2d v(1.0, -1.0);  // x+ - x-, squared norm 2
  const Eigen::VectorXd hv = hvp_fast(agg, v, d, 1.0);
  CHECK(hv[0] == 5.0);
  CHECK(hv[1] == -5.0);
}

TEST_CASE("pair aggregates match enumeration") {
  Rng rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    const EmbeddedDataset d = testing::random_embedded(30, 3, 0.4, rng);
    const Eigen::VectorXd w = testing::random_vector(3, 0.7, rng);
    const PairAggregates agg(d, w);
    const Eigen::VectorXd s = d.features * w;
    std::size_t total = 0;
    for (Eigen::Index i : d.pos_idx) {
      std::size_t c = 0;
      for (Eigen::Index j : d.neg_idx) c += (s[j] > s[i] - 1.0) ? 1 : 0;
      CHECK(agg.active_counts()[static_cast<std::size_t>(i)] == c);
      total += c;
    }
    CHECK(agg.active_pairs() == total);
  }
}

TEST_CASE("fast gradient and HVP agree with pair enumeration and finite differences") {
  Rng rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const auto n = 2 + uniform_index(rng, 59);
    const auto r = 1 + uniform_index(rng, 8);
    const EmbeddedDataset d = testing::random_embedded(n, r, 0.35, rng);
    const Eigen::VectorXd w = testing::random_vector(r, 0.6, rng);
    const double C = std::ldexp(1.0, static_cast<int>(uniform_index(rng, 8)) - 4);

    CHECK(testing::relative_error(grad_fast(w, d, C), testing::brute_gradient(w, d, C)) <= 1e-10);

    const auto f = [&](const Eigen::VectorXd& x) { return objective(x, d, C, 2); };
    CHECK(testing::relative_error(grad_fast(w, d, C), testing::central_difference(f, w, 1e-6)) <= 1e-5);

    const PairAggregates agg(d, w);
    const Eigen::VectorXd v = testing::random_vector(r, 1.0, rng);
    const Eigen::VectorXd hv = hvp_fast(agg, v, d, C);
    CHECK(testing::relative_error(hv, testing::brute_hvp(w, v, d, C)) <= 1e-8);
    CHECK(v.dot(hv) >= v.squaredNorm() * (1.0 - 1e-12));
  }
}

TEST_CASE("objective is convex along random chords") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const EmbeddedDataset d = testing::random_embedded(25, 4, 0.5, rng);
    const Eigen::VectorXd a = testing::random_vector(4, 1.0, rng);
    const Eigen::VectorXd b = testing::random_vector(4, 1.0, rng);
    const double mid = objective(0.5 * (a + b), d, 0.5, 2);
    CHECK(mid <= 0.5 * (objective(a, d, 0.5, 2) + objective(b, d, 0.5, 2)) + 1e-12);
  }
}

TEST_CASE("conjugate gradient on small systems") {
  const Eigen::Vector3d g(1.0, -2.0, 0.5);
  const CgResult id = conjugate_gradient([](const Eigen::VectorXd& v) { return v; }, g, 1e-12, 10);
  CHECK(id.iterations == 1);
  CHECK((id.solution + g).norm() < 1e-15);

  const Eigen::Vector2d diag(2.0, 5.0);
  const CgResult two = conjugate_gradient(
      [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(diag.cwiseProduct(v)); }, Eigen::Vector2d(1.0, 1.0),
      1e-14, 10);
  CHECK(two.iterations <= 2);
  CHECK(two.solution[0] == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(two.solution[1] == doctest::Approx(-0.2).epsilon(1e-14));
  for (const CgResult* r : {&id, &two}) {
    for (std::size_t k = 1; k < r->residual_norms.size(); ++k) {
      CHECK(r->residual_norms[k] <= r->residual_norms[k - 1] + 1e-12);
    }
  }
}

TEST_CASE("conjugate gradient decreases the H-norm error on pairwise Hessians") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const EmbeddedDataset d = testing::random_embedded(40, 6, 0.4, rng);
    const Eigen::VectorXd w = testing::random_vector(6, 0.3, rng);
    const PairAggregates agg(d, w);
    const auto h = [&](const Eigen::VectorXd& v) { return hvp_fast(agg, v, d, 0.2); };
    Eigen::MatrixXd dense(6, 6);
    for (int k = 0; k < 6; ++k) dense.col(k) = h(Eigen::VectorXd::Unit(6, k));
    const Eigen::VectorXd g = testing::random_vector(6, 1.0, rng);
    const Eigen::VectorXd exact = dense.ldlt().solve(-g);
    double previous = INFINITY;
    for (std::size_t iters = 0; iters <= 6; ++iters) {
      const CgResult r = conjugate_gradient(h, g, 1e-14, iters);
      const Eigen::VectorXd e = r.solution - exact;
      const double energy = std::sqrt(std::max(0.0, e.dot(dense * e)));
      CHECK(energy <= previous * (1.0 + 1e-10) + 1e-12);
      previous = energy;
    }
    CHECK(previous <= 1e-8 * exact.norm());
  }
}

TEST_CASE("batch training on separable data ranks perfectly") {
  const EmbeddedDataset d = separable_1d();
  BatchConfig cfg;
  cfg.C = 1.0;
  const BatchResult r = train_batch(d, cfg);
  CHECK(r.diagnostics.converged);
  CHECK(auc(r.model.score(d), d.labels).auc == 1.0);
  const double at_zero = cfg.C * static_cast<double>(d.pos_idx.size() * d.neg_idx.size());
  CHECK(r.diagnostics.objective_trace.front() == at_zero);
  CHECK(r.diagnostics.objective_trace.back() < at_zero);
  for (std::size_t k = 1; k < r.diagnostics.objective_trace.size(); ++k) {
    CHECK(r.diagnostics.objective_trace[k] < r.diagnostics.objective_trace[k - 1]);
  }

  // The default tolerance is absolute for small gradients, so w = 0 would already qualify.
  cfg.C = 1e-8;
  cfg.grad_tol = 1e-14;
  const BatchResult tiny = train_batch(d, cfg);
  CHECK(tiny.model.w.norm() < 1e-6);
  CHECK(tiny.model.w[0] > 0.0);
  CHECK(auc(tiny.model.score(d), d.labels).auc == 1.0);
}

TEST_CASE("batch optimum matches a dense grid search in 2-D") {
  Eigen::MatrixXd x(6, 2);
  x << 0.4, 0.1, -0.2, 0.5, 0.3, -0.4, -0.1, 0.2, 0.5, 0.3, 0.0, -0.3;
  const EmbeddedDataset d(x, {1, -1, 1, -1, 1, -1});
  const double C = 0.05;
  BatchConfig cfg;
  cfg.C = C;
  cfg.grad_tol = 1e-12;
  cfg.cg_tol = 1e-12;
  const BatchResult r = train_batch(d, cfg);

  // Independent oracle: every pair difference enumerated, objective scanned on the grid.
  std::vector<Eigen::Vector2d> diffs;
  for (Eigen::Index i : d.pos_idx)
    for (Eigen::Index j : d.neg_idx) diffs.emplace_back((x.row(i) - x.row(j)).transpose());
  double best = INFINITY;
  const int steps = 6000;
  for (int a = 0; a <= steps; ++a) {
    const double w0 = -3.0 + 6.0 * a / steps;
    for (int b = 0; b <= steps; ++b) {
      const double w1 = -3.0 + 6.0 * b / steps;
      double loss = 0.0;
      for (const auto& dd : diffs) {
        const double m = std::max(0.0, 1.0 - (w0 * dd[0] + w1 * dd[1]));
        loss += m * m;
      }
      best = std::min(best, 0.5 * (w0 * w0 + w1 * w1) + C * loss);
    }
  }
  const double got = r.diagnostics.objective_trace.back();
  CHECK(got <= best + 1e-12);
  CHECK(best - got <= 1e-6);
}

TEST_CASE("batch config validation and degenerate data") {
  BatchConfig cfg;
  cfg.C = 0.0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg.C = 1.0;
  cfg.max_outer = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg.max_outer = 10;
  cfg.grad_tol = -1.0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);

  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 2);
  const EmbeddedDataset one_class(x, {1, 1, 1});
  CHECK_THROWS_AS(train_batch(one_class, BatchConfig{}), DataError);
}

TEST_CASE("batch training is deterministic") {
  Rng rng(5);
  const EmbeddedDataset d = testing::random_embedded(200, 10, 0.2, rng);
  BatchConfig cfg;
  cfg.C = 0.01;
  CHECK(train_batch(d, cfg).model.w == train_batch(d, cfg).model.w);
}

TEST_CASE("gradient cost grows near-linearly in n") {
  Rng rng(9);
  const EmbeddedDataset small = testing::random_embedded(40000, 16, 0.2, rng);
  const EmbeddedDataset large = testing::random_embedded(80000, 16, 0.2, rng);
  const Eigen::VectorXd w = testing::random_vector(16, 0.2, rng);
  auto time_once = [&](const EmbeddedDataset& d) {
    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::VectorXd g = grad_fast(w, d, 1.0);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(g.allFinite());
    return s;
  };
  // Interleaved best-of-7 to damp machine noise.
  double best_small = INFINITY;
  double best_large = INFINITY;
  for (int rep = 0; rep < 7; ++rep) {
    best_small = std::min(best_small, time_once(small));
    best_large = std::min(best_large, time_once(large));
  }
  const double ratio = best_large / best_small;
  MESSAGE("gradient time ratio for 2x n: " << ratio);
  CHECK(ratio < 2.5);
}
