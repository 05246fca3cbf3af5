#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "nlauc/embedding.hpp"

namespace nlauc {

/// How a positive/negative pair with equal scores is counted.
/// half: Mann-Whitney convention (tie = 1/2). strict: a tie is a loss.
enum class TiePolicy { half, strict };

struct AucResult {
  double auc = 0.0;
  std::uint64_t wins = 0;
  std::uint64_t ties = 0;
  std::uint64_t losses = 0;
  TiePolicy tie_policy = TiePolicy::half;

  std::uint64_t pairs() const { return wins + ties + losses; }
};

/// Sort-based rank statistic, O(n log n). Counts are exact integers.
/// Labels must be -1/+1 with both classes present; scores must be finite.
AucResult auc(std::span<const double> scores, std::span<const int> labels,
              TiePolicy tie_policy = TiePolicy::half);

/// Literal enumeration of every positive/negative pair.
AucResult auc_bruteforce(std::span<const double> scores, std::span<const int> labels,
                         TiePolicy tie_policy = TiePolicy::half);

inline AucResult auc(const Eigen::VectorXd& scores, std::span<const int> labels,
                     TiePolicy tie_policy = TiePolicy::half) {
  return auc(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), labels,
             tie_policy);
}

/// 1/2 ||w||^2 + C * sum over positive/negative pairs of max(0, 1 - w^T(x_i - x_j))^p,
/// with p in {1, 2}. Evaluated through the sorted pair aggregation, never pair by pair.
double objective(const Eigen::VectorXd& w, const EmbeddedDataset& data, double C, int p = 2);

}  // namespace nlauc
