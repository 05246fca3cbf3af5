#include <doctest.h>

#include <cmath>
#include <vector>

#include "nlauc/auc.hpp"
#include "nlauc/error.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace nlauc;

namespace {

struct Instance {
  std::vector<double> scores;
  std::vector<int> labels;
};

// Scores drawn from a small pool so ties are common.
Instance random_instance(Rng& rng) {
  Instance in;
  const auto n = 2 + uniform_index(rng, 199);
  const auto pool = 1 + uniform_index(rng, 30);
  for (std::uint64_t i = 0; i < n; ++i) {
    in.scores.push_back(uniform_unit(rng) < 0.5 ? static_cast<double>(uniform_index(rng, pool)) : standard_normal(rng));
    in.labels.push_back(uniform_unit(rng) < 0.3 ? 1 : -1);
  }
  in.labels.front() = 1;
  in.labels.back() = -1;
  return in;
}

}  // namespace

TEST_CASE("auc examples") {
  CHECK(auc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, -1}).auc == 1.0);
  const std::vector<double> tie{0.5, 0.5};
  const std::vector<int> pm{1, -1};
  CHECK(auc(tie, pm, TiePolicy::half).auc == 0.5);
  CHECK(auc(tie, pm, TiePolicy::strict).auc == 0.0);

  const AucResult r = auc(std::vector<double>{0.8, 0.3, 0.6, 0.1}, std::vector<int>{1, -1, -1, 1});
  CHECK(r.wins == 2);
  CHECK(r.losses == 2);
  CHECK(r.ties == 0);
  CHECK(r.auc == 0.5);
}

TEST_CASE("auc input validation") {
  CHECK_THROWS_AS(auc(std::vector<double>{1.0, 2.0}, std::vector<int>{1, 1}), DataError);
  CHECK_THROWS_AS(auc(std::vector<double>{1.0}, std::vector<int>{1, -1}), DataError);
  CHECK_THROWS_AS(auc(std::vector<double>{1.0, NAN}, std::vector<int>{1, -1}), DataError);
  CHECK_THROWS_AS(auc_bruteforce(std::vector<double>{1.0, 2.0}, std::vector<int>{-1, -1}), DataError);
}

TEST_CASE("sort-based auc equals pair enumeration, and its invariants hold") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const Instance in = random_instance(rng);
    for (const TiePolicy policy : {TiePolicy::half, TiePolicy::strict}) {
      const AucResult fast = auc(in.scores, in.labels, policy);
      const AucResult slow = auc_bruteforce(in.scores, in.labels, policy);
      REQUIRE(fast.wins == slow.wins);
      REQUIRE(fast.ties == slow.ties);
      REQUIRE(fast.losses == slow.losses);
      REQUIRE(fast.auc == slow.auc);
    }
    const AucResult half = auc(in.scores, in.labels);
    std::uint64_t n_pos = 0, n_neg = 0;
    for (int y : in.labels) (y == 1 ? n_pos : n_neg) += 1;
    CHECK(half.pairs() == n_pos * n_neg);

    // strictly increasing transform
    std::vector<double> mapped;
    for (double s : in.scores) mapped.push_back(std::atan(s) * 3.0 + 7.0);
    const AucResult m = auc(mapped, in.labels);
    CHECK(m.wins == half.wins);
    CHECK(m.ties == half.ties);

    // label swap duality
    std::vector<double> neg_scores;
    std::vector<int> neg_labels;
    for (double s : in.scores) neg_scores.push_back(-s);
    for (int y : in.labels) neg_labels.push_back(-y);
    CHECK(auc(neg_scores, neg_labels).auc == half.auc);

    // reversed scores: strict AUCs add to at most one
    const double a = auc(in.scores, in.labels, TiePolicy::strict).auc;
    const double b = auc(neg_scores, in.labels, TiePolicy::strict).auc;
    CHECK(a + b <= 1.0 + 1e-15);
    if (half.ties == 0) CHECK(a + b == doctest::Approx(1.0).epsilon(1e-15));

    // 1 - strict AUC is the pairwise 0/1 loss with ties counted as errors
    const double zero_one = static_cast<double>(half.losses + half.ties) / static_cast<double>(half.pairs());
    CHECK(1.0 - a == doctest::Approx(zero_one).epsilon(1e-15));
  }
}

TEST_CASE("all-equal scores give exactly one half") {
  const std::vector<double> s(9, 3.25);
  const std::vector<int> y{1, -1, 1, -1, -1, -1, 1, -1, -1};
  CHECK(auc(s, y).auc == 0.5);
  CHECK(auc_bruteforce(s, y).auc == 0.5);
  CHECK(auc(s, y, TiePolicy::strict).auc == 0.0);
}

TEST_CASE("pairwise objective") {
  Rng rng(3);
  const EmbeddedDataset data = testing::random_embedded(13, 4, 0.4, rng);
  const double pairs = static_cast<double>(data.pos_idx.size() * data.neg_idx.size());
  CHECK(objective(Eigen::VectorXd::Zero(4), data, 0.7, 2) == doctest::Approx(0.7 * pairs));
  CHECK(objective(Eigen::VectorXd::Zero(4), data, 0.7, 1) == doctest::Approx(0.7 * pairs));

  Eigen::MatrixXd x(2, 2);
  x << 1, 0, 0, 1;
  const EmbeddedDataset pair(x, {1, -1});
  const Eigen::Vector2d w(1.0, -1.0);  // w^T (x+ - x-) = 2
  CHECK(objective(w, pair, 1.0, 2) == 1.0);

  for (int trial = 0; trial < 50; ++trial) {
    const EmbeddedDataset d = testing::random_embedded(40, 5, 0.3, rng);
    const Eigen::VectorXd wr = testing::random_vector(5, 0.5, rng);
    for (int p : {1, 2}) {
      const double want = testing::brute_objective(wr, d, 0.3, p);
      CHECK(objective(wr, d, 0.3, p) == doctest::Approx(want).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(objective(w, pair, 0.0, 2), UsageError);
  CHECK_THROWS_AS(objective(w, pair, 1.0, 3), UsageError);
  CHECK_THROWS_AS(objective(Eigen::VectorXd::Zero(3), pair, 1.0, 2), DataError);
}
