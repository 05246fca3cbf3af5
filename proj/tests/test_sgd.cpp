#include <doctest.h>

#include <cmath>
#include <vector>

#include "nlauc/auc.hpp"
#include "nlauc/error.hpp"
#include "nlauc/sgd.hpp"
#include "synthetic.hpp"

using namespace nlauc;

TEST_CASE("hinge subgradient coefficient") {
  CHECK(hinge_subgradient_coeff(0.5) == 1);
  CHECK(hinge_subgradient_coeff(1.5) == 0);
  CHECK(hinge_subgradient_coeff(1.0) == 0);
  CHECK(hinge_subgradient_coeff(-3.0) == 1);
}

TEST_CASE("sgd step follows the update formula") {
  SgdConfig cfg;
  cfg.lambda = 0.01;
  cfg.t0 = 9.0;
  SgdState s = SgdState::initial(3, cfg);
  const Eigen::Vector3d x(1.0, -2.0, 0.5);
  CHECK(sgd_step(s, x, cfg) == 1);
  // w_1 = x / (lambda (1 + t0))
  CHECK((s.w - x / (0.01 * 10.0)).cwiseAbs().maxCoeff() < 1e-15);

  // margin now 10 * |x|^2 > 1, so nothing moves
  const Eigen::VectorXd before = s.w;
  CHECK(sgd_step(s, x, cfg) == 0);
  CHECK(s.w == before);
}

TEST_CASE("successive active steps shrink") {
  SgdConfig cfg;
  cfg.lambda = 1.0;
  cfg.t0 = 100.0;
  SgdState s = SgdState::initial(2, cfg);
  const Eigen::Vector2d x(0.01, 0.0);
  Eigen::VectorXd prev = s.w;
  double last = INFINITY;
  for (int k = 0; k < 5; ++k) {
    sgd_step(s, x, cfg);
    const double moved = (s.w - prev).norm();
    CHECK(moved > 0.0);
    CHECK(moved < last);
    last = moved;
    prev = s.w;
    ++s.t;
  }
}

TEST_CASE("scheduled regularization") {
  SgdConfig cfg;
  cfg.rskip = 10;
  cfg.t0 = 90.0;
  SgdState s = SgdState::initial(2, cfg);
  s.t = 10;  // t + t0 = 100
  s.w = Eigen::Vector2d(2.0, -4.0);
  s.rcount = 0;
  scheduled_regularize(s, cfg);
  CHECK(s.w[0] == doctest::Approx(1.8).epsilon(1e-15));
  CHECK(s.w[1] == doctest::Approx(-3.6).epsilon(1e-15));
  CHECK(s.rcount == 10);

  SgdState z = SgdState::initial(2, cfg);
  scheduled_regularize(z, cfg);
  CHECK(z.w.isZero(0.0));
}

TEST_CASE("scheduled averaging keeps the exact running mean") {
  SgdConfig cfg;
  SgdState s = SgdState::initial(2, cfg);
  s.w = Eigen::Vector2d(1.0, 3.0);
  scheduled_average(s, cfg);
  CHECK(s.w_avg == s.w);
  CHECK(s.q == 1);
  s.w = Eigen::Vector2d(2.0, -1.0);
  scheduled_average(s, cfg);
  CHECK(s.w_avg == Eigen::Vector2d(1.5, 1.0));

  Rng rng(4);
  SgdState r = SgdState::initial(5, cfg);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(5);
  for (int k = 0; k < 10; ++k) {
    r.w = testing::random_vector(5, 2.0, rng);
    sum += r.w;
    scheduled_average(r, cfg);
  }
  CHECK((r.w_avg - sum / 10.0).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(r.acount == static_cast<std::int64_t>(cfg.askip));
}

TEST_CASE("one epoch of shrinkage equals the replayed product") {
  // Margins stay >= 1 after the first step, so only regularization moves w.
  Eigen::MatrixXd x(2, 1);
  x << 1.0, 0.0;
  const EmbeddedDataset d(x, {1, -1});
  SgdConfig cfg;
  cfg.lambda = 1e-4;
  cfg.t0 = 50.0;
  cfg.rskip = 3;
  cfg.epochs = 20;  // 40 iterations
  cfg.averaging = false;
  const SgdResult r = train_sgd(d, cfg);
  double w = 1.0 / (cfg.lambda * (1.0 + cfg.t0));
  for (std::uint64_t t = 1; t <= 40; ++t) {
    if (t % cfg.rskip == 0) w *= 1.0 - static_cast<double>(cfg.rskip) / (static_cast<double>(t) + cfg.t0);
  }
  CHECK(r.diagnostics.active_steps == 1);
  CHECK(r.model.w[0] == doctest::Approx(w).epsilon(1e-13));
}

TEST_CASE("averaged weights equal the offline mean of captured iterates") {
  Rng rng(8);
  const EmbeddedDataset d = testing::random_embedded(50, 4, 0.3, rng);
  SgdConfig cfg;
  cfg.lambda = 0.05;
  cfg.t0 = 20.0;
  cfg.rskip = 4;
  cfg.askip = 3;
  cfg.epochs = 2;
  cfg.seed = 99;

  // Replay the algorithm through the public step functions, sampling with the same stream.
  SgdState s = SgdState::initial(4, cfg);
  Rng sampler(cfg.seed);
  std::vector<Eigen::VectorXd> captured;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const Eigen::Index i = d.pos_idx[uniform_index(sampler, d.pos_idx.size())];
    const Eigen::Index j = d.neg_idx[uniform_index(sampler, d.neg_idx.size())];
    sgd_step(s, (d.features.row(i) - d.features.row(j)).transpose(), cfg);
    if (--s.rcount <= 0) scheduled_regularize(s, cfg);
    if (--s.acount <= 0) {
      scheduled_average(s, cfg);
      captured.push_back(s.w);
    }
    ++s.t;
  }
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
  for (const auto& c : captured) mean += c;
  mean /= static_cast<double>(captured.size());
  CHECK(captured.size() == 33);
  CHECK((s.w_avg - mean).cwiseAbs().maxCoeff() <= 1e-12);

  const SgdResult r = train_sgd(d, cfg);
  CHECK(r.diagnostics.averages == 33);
  CHECK(r.model.w == s.w_avg);
}

TEST_CASE("large lambda keeps the model near zero") {
  Rng rng(1);
  const EmbeddedDataset d = testing::random_embedded(100, 6, 0.3, rng);
  SgdConfig cfg;
  cfg.lambda = 1e6;
  cfg.epochs = 3;
  CHECK(train_sgd(d, cfg).model.w.norm() <= 1e-3);
}

TEST_CASE("separable 1-D data is ranked perfectly after five epochs") {
  Eigen::MatrixXd x(40, 1);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) {
    y[static_cast<std::size_t>(i)] = i % 4 == 0 ? 1 : -1;
    x(i, 0) = y[static_cast<std::size_t>(i)] > 0 ? 1.0 : -1.0;
  }
  const EmbeddedDataset d(x, y);
  SgdConfig cfg;
  cfg.lambda = 1e-3;
  cfg.t0 = 100.0;
  cfg.epochs = 5;
  const SgdResult r = train_sgd(d, cfg);
  CHECK(auc(r.model.score(d), d.labels).auc == 1.0);
}

TEST_CASE("same seed gives bit-identical weights; different seeds differ") {
  Rng rng(2);
  const EmbeddedDataset d = testing::random_embedded(300, 8, 0.25, rng);
  SgdConfig cfg;
  cfg.lambda = 1e-3;
  cfg.t0 = 100.0;
  cfg.epochs = 2;
  cfg.seed = 5;
  const Eigen::VectorXd a = train_sgd(d, cfg).model.w;
  CHECK(train_sgd(d, cfg).model.w == a);
  cfg.seed = 6;
  CHECK(train_sgd(d, cfg).model.w != a);
}

TEST_CASE("epoch callback sees every epoch; averaging off returns the last iterate") {
  Rng rng(3);
  const EmbeddedDataset d = testing::random_embedded(60, 3, 0.3, rng);
  SgdConfig cfg;
  cfg.lambda = 1e-2;
  cfg.t0 = 50.0;
  cfg.epochs = 4;
  std::vector<std::size_t> seen;
  Eigen::VectorXd last;
  const SgdResult r = train_sgd(d, cfg, [&](std::size_t e, const Eigen::VectorXd& w, double secs) {
    seen.push_back(e);
    last = w;
    CHECK(secs >= 0.0);
  });
  CHECK(seen == std::vector<std::size_t>{1, 2, 3, 4});
  CHECK(last == r.model.w);
  CHECK(r.diagnostics.iterations == 240);

  cfg.averaging = false;
  const SgdResult plain = train_sgd(d, cfg);
  CHECK(plain.diagnostics.averages == 0);
  CHECK(plain.model.record.averaging == false);
}

TEST_CASE("sgd config validation") {
  SgdConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.lambda = 0.0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = SgdConfig{};
  cfg.rskip = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = SgdConfig{};
  cfg.askip = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = SgdConfig{};
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = SgdConfig{};
  cfg.t0 = 5.0;
  cfg.rskip = 6;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg.rskip = 5;
  CHECK_NOTHROW(cfg.validate());
}
