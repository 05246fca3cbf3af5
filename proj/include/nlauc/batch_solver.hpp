#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "nlauc/embedding.hpp"
#include "nlauc/model.hpp"

namespace nlauc {

/// Truncated-Newton settings for the pairwise squared hinge objective.
struct BatchConfig {
  double C = 1.0;
  // Absolute gradient-norm threshold; defaults to 1e-4 * max(1, ||g_0||).
  std::optional<double> grad_tol;
  std::size_t max_outer = 100;
  double cg_tol = 1e-3;
  std::size_t cg_max = 200;

  void validate() const;
};

/// Per-instance summaries of the active pair set at a fixed w.
///
/// A pair (i, j), i positive and j negative, is active when
/// d_ij = 1 - s_i + s_j > 0 with s = Xw. Sorting each class by score turns
/// every instance's active partners into a contiguous run: a suffix of the
/// sorted negatives for a positive, a prefix of the sorted positives for a
/// negative. Counts and partner sums then come from prefix sums in O(n log n)
/// without enumerating pairs.
class PairAggregates {
 public:
  PairAggregates(const EmbeddedDataset& data, const Eigen::VectorXd& w);

  const Eigen::VectorXd& scores() const { return scores_; }
  // Number of active partners of each instance.
  const std::vector<std::size_t>& active_counts() const { return count_; }
  // Sum of partner scores over active partners.
  const Eigen::VectorXd& partner_sums() const { return partner_sum_; }
  std::size_t active_pairs() const { return active_pairs_; }

  /// sum over active pairs of d_ij^p.
  double loss(int p) const;
  /// gamma with X^T gamma = 1/2 d/dw sum d_ij^2.
  Eigen::VectorXd gradient_coefficients() const;
  /// delta with X^T delta = sum over active pairs of (x_i - x_j)(x_i - x_j)^T v,
  /// given q = Xv.
  Eigen::VectorXd hessian_coefficients(const Eigen::VectorXd& q) const;

 private:
  Eigen::VectorXd scores_;
  std::vector<Eigen::Index> pos_sorted_;
  std::vector<Eigen::Index> neg_sorted_;
  // For the k-th sorted positive: index of its first active negative.
  std::vector<std::size_t> pos_boundary_;
  // For the k-th sorted negative: number of active positives (a prefix).
  std::vector<std::size_t> neg_boundary_;
  std::vector<std::size_t> count_;
  Eigen::VectorXd partner_sum_;
  Eigen::VectorXd partner_sq_sum_;
  std::size_t active_pairs_ = 0;
};

/// w + 2C X^T gamma.
Eigen::VectorXd grad_fast(const Eigen::VectorXd& w, const EmbeddedDataset& data, double C);
Eigen::VectorXd grad_fast(const PairAggregates& agg, const Eigen::VectorXd& w,
                          const EmbeddedDataset& data, double C);

/// Generalized Hessian times v: v + 2C sum_active (x_i - x_j)(x_i - x_j)^T v.
/// agg must be built at the w being linearized.
Eigen::VectorXd hvp_fast(const PairAggregates& agg, const Eigen::VectorXd& v,
                         const EmbeddedDataset& data, double C);

struct CgResult {
  Eigen::VectorXd solution;
  std::size_t iterations = 0;
  // ||H s_k + g|| for k = 0..iterations.
  std::vector<double> residual_norms;
};

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Approximately solves H s = -g; stops once ||Hs + g|| <= tol ||g|| or after max_iter steps.
CgResult conjugate_gradient(const LinearOperator& apply_h, const Eigen::VectorXd& g, double tol,
                            std::size_t max_iter);

struct BatchDiagnostics {
  std::size_t outer_iterations = 0;
  std::size_t cg_iterations = 0;
  std::size_t halvings = 0;
  bool converged = false;
  double grad_tol = 0.0;
  std::vector<double> objective_trace;  // objective at each accepted iterate, starting at w = 0
  std::vector<double> grad_norms;
  double seconds = 0.0;
};

struct BatchResult {
  LinearModel model;
  BatchDiagnostics diagnostics;
};

/// Truncated Newton from w = 0 with objective-decrease backtracking.
/// Throws NumericalError if 30 halvings of a direction fail to decrease the objective.
BatchResult train_batch(const EmbeddedDataset& data, const BatchConfig& cfg);

}  // namespace nlauc
