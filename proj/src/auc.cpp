#include "nlauc/auc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "nlauc/batch_solver.hpp"
#include "nlauc/error.hpp"

namespace nlauc {

namespace {

void validate(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw DataError("auc: " + std::to_string(scores.size()) + " scores but " +
                    std::to_string(labels.size()) + " labels");
  }
  std::size_t pos = 0;
  std::size_t neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw DataError("auc: non-finite score at position " + std::to_string(i));
    if (labels[i] == 1) {
      ++pos;
    } else if (labels[i] == -1) {
      ++neg;
    } else {
      throw DataError("auc: labels must be -1 or +1, got " + std::to_string(labels[i]));
    }
  }
  if (pos == 0 || neg == 0) throw DataError("auc: both classes must be present");
}

AucResult finish(std::uint64_t wins, std::uint64_t ties, std::uint64_t pairs, TiePolicy policy) {
  AucResult r;
  r.wins = wins;
  r.ties = ties;
  r.losses = pairs - wins - ties;
  r.tie_policy = policy;
  // Doubled counts keep the half-tie numerator integral.
  const std::uint64_t numer = policy == TiePolicy::half ? 2 * wins + ties : 2 * wins;
  r.auc = static_cast<double>(numer) / (2.0 * static_cast<double>(pairs));
  return r;
}

}  // namespace

AucResult auc(std::span<const double> scores, std::span<const int> labels, TiePolicy tie_policy) {
  validate(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::uint64_t wins = 0;
  std::uint64_t ties = 0;
  std::uint64_t neg_below = 0;
  std::uint64_t n_pos = 0;
  std::uint64_t n_neg = 0;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    std::uint64_t p = 0;
    std::uint64_t q = 0;
    while (end < order.size() && scores[order[end]] == scores[order[start]]) {
      (labels[order[end]] == 1 ? p : q) += 1;
      ++end;
    }
    wins += p * neg_below;
    ties += p * q;
    neg_below += q;
    n_pos += p;
    n_neg += q;
    start = end;
  }
  return finish(wins, ties, n_pos * n_neg, tie_policy);
}

AucResult auc_bruteforce(std::span<const double> scores, std::span<const int> labels, TiePolicy tie_policy) {
  validate(scores, labels);
  std::uint64_t wins = 0;
  std::uint64_t ties = 0;
  std::uint64_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != -1) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        ++wins;
      } else if (scores[i] == scores[j]) {
        ++ties;
      }
    }
  }
  return finish(wins, ties, pairs, tie_policy);
}

double objective(const Eigen::VectorXd& w, const EmbeddedDataset& data, double C, int p) {
  if (!(C > 0.0)) throw UsageError("C must be positive");
  if (p != 1 && p != 2) throw UsageError("loss power p must be 1 or 2");
  if (w.size() != data.dim()) {
    throw DataError("objective: weight length " + std::to_string(w.size()) + " vs embedding dimension " +
                    std::to_string(data.dim()));
  }
  const PairAggregates agg(data, w);
  return 0.5 * w.squaredNorm() + C * agg.loss(p);
}

}  // namespace nlauc
