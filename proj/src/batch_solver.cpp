#include "nlauc/batch_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "nlauc/error.hpp"

namespace nlauc {

namespace {

constexpr int kMaxHalvings = 30;

void check_shapes(const Eigen::VectorXd& w, const EmbeddedDataset& data) {
  if (w.size() != data.dim()) {
    throw DataError("weight length " + std::to_string(w.size()) + " does not match embedding dimension " +
                    std::to_string(data.dim()));
  }
}

std::vector<Eigen::Index> sorted_by_score(std::vector<Eigen::Index> idx, const Eigen::VectorXd& s) {
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return s[a] < s[b]; });
  return idx;
}

}  // namespace

void BatchConfig::validate() const {
  if (!(C > 0.0) || !std::isfinite(C)) throw UsageError("C must be finite and positive");
  if (grad_tol && !(*grad_tol > 0.0)) throw UsageError("grad-tol must be positive");
  if (!(cg_tol > 0.0)) throw UsageError("cg-tol must be positive");
  if (max_outer < 1) throw UsageError("max-outer must be at least 1");
  if (cg_max < 1) throw UsageError("cg-max must be at least 1");
}

PairAggregates::PairAggregates(const EmbeddedDataset& data, const Eigen::VectorXd& w) {
  check_shapes(w, data);
  scores_ = data.features * w;
  pos_sorted_ = sorted_by_score(data.pos_idx, scores_);
  neg_sorted_ = sorted_by_score(data.neg_idx, scores_);
  const std::size_t np = pos_sorted_.size();
  const std::size_t nn = neg_sorted_.size();
  const auto n = static_cast<std::size_t>(scores_.size());

  // Suffix sums over sorted negatives, prefix sums over sorted positives.
  std::vector<double> neg_suffix(nn + 1, 0.0);
  std::vector<double> neg_suffix_sq(nn + 1, 0.0);
  for (std::size_t k = nn; k-- > 0;) {
    const double s = scores_[neg_sorted_[k]];
    neg_suffix[k] = neg_suffix[k + 1] + s;
    neg_suffix_sq[k] = neg_suffix_sq[k + 1] + s * s;
  }
  std::vector<double> pos_prefix(np + 1, 0.0);
  std::vector<double> pos_prefix_sq(np + 1, 0.0);
  for (std::size_t k = 0; k < np; ++k) {
    const double s = scores_[pos_sorted_[k]];
    pos_prefix[k + 1] = pos_prefix[k] + s;
    pos_prefix_sq[k + 1] = pos_prefix_sq[k] + s * s;
  }

  count_.assign(n, 0);
  partner_sum_ = Eigen::VectorXd::Zero(scores_.size());
  partner_sq_sum_ = Eigen::VectorXd::Zero(scores_.size());
  pos_boundary_.resize(np);
  neg_boundary_.resize(nn);

  // Pair activity is always tested as (1 - s_i) + s_j > 0, which is monotone
  // in each score under rounding, so the binary searches agree with pair-wise tests.
  for (std::size_t k = 0; k < np; ++k) {
    const Eigen::Index i = pos_sorted_[k];
    const double margin_base = 1.0 - scores_[i];
    const auto first_active = std::partition_point(neg_sorted_.begin(), neg_sorted_.end(), [&](Eigen::Index j) {
      return !(margin_base + scores_[j] > 0.0);
    });
    const auto b = static_cast<std::size_t>(first_active - neg_sorted_.begin());
    pos_boundary_[k] = b;
    count_[static_cast<std::size_t>(i)] = nn - b;
    partner_sum_[i] = neg_suffix[b];
    partner_sq_sum_[i] = neg_suffix_sq[b];
    active_pairs_ += nn - b;
  }
  for (std::size_t k = 0; k < nn; ++k) {
    const Eigen::Index j = neg_sorted_[k];
    const double sj = scores_[j];
    const auto end_active = std::partition_point(pos_sorted_.begin(), pos_sorted_.end(), [&](Eigen::Index i) {
      return (1.0 - scores_[i]) + sj > 0.0;
    });
    const auto b = static_cast<std::size_t>(end_active - pos_sorted_.begin());
    neg_boundary_[k] = b;
    count_[static_cast<std::size_t>(j)] = b;
    partner_sum_[j] = pos_prefix[b];
    partner_sq_sum_[j] = pos_prefix_sq[b];
  }
}

double PairAggregates::loss(int p) const {
  double total = 0.0;
  for (const Eigen::Index i : pos_sorted_) {
    const auto c = static_cast<double>(count_[static_cast<std::size_t>(i)]);
    if (c == 0.0) continue;
    const double t = 1.0 - scores_[i];
    // sum_j (t + s_j)^p over the active negatives of i
    if (p == 1) {
      total += t * c + partner_sum_[i];
    } else {
      total += c * t * t + 2.0 * t * partner_sum_[i] + partner_sq_sum_[i];
    }
  }
  return total;
}

Eigen::VectorXd PairAggregates::gradient_coefficients() const {
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(scores_.size());
  for (const Eigen::Index i : pos_sorted_) {
    const auto c = static_cast<double>(count_[static_cast<std::size_t>(i)]);
    gamma[i] = -((1.0 - scores_[i]) * c + partner_sum_[i]);
  }
  for (const Eigen::Index j : neg_sorted_) {
    const auto c = static_cast<double>(count_[static_cast<std::size_t>(j)]);
    gamma[j] = c * (1.0 + scores_[j]) - partner_sum_[j];
  }
  return gamma;
}

Eigen::VectorXd PairAggregates::hessian_coefficients(const Eigen::VectorXd& q) const {
  const std::size_t np = pos_sorted_.size();
  const std::size_t nn = neg_sorted_.size();
  std::vector<double> neg_suffix(nn + 1, 0.0);
  for (std::size_t k = nn; k-- > 0;) neg_suffix[k] = neg_suffix[k + 1] + q[neg_sorted_[k]];
  std::vector<double> pos_prefix(np + 1, 0.0);
  for (std::size_t k = 0; k < np; ++k) pos_prefix[k + 1] = pos_prefix[k] + q[pos_sorted_[k]];

  Eigen::VectorXd delta = Eigen::VectorXd::Zero(q.size());
  for (std::size_t k = 0; k < np; ++k) {
    const Eigen::Index i = pos_sorted_[k];
    const auto c = static_cast<double>(count_[static_cast<std::size_t>(i)]);
    delta[i] = c * q[i] - neg_suffix[pos_boundary_[k]];
  }
  for (std::size_t k = 0; k < nn; ++k) {
    const Eigen::Index j = neg_sorted_[k];
    const auto c = static_cast<double>(count_[static_cast<std::size_t>(j)]);
    delta[j] = c * q[j] - pos_prefix[neg_boundary_[k]];
  }
  return delta;
}

Eigen::VectorXd grad_fast(const Eigen::VectorXd& w, const EmbeddedDataset& data, double C) {
  return grad_fast(PairAggregates(data, w), w, data, C);
}

Eigen::VectorXd grad_fast(const PairAggregates& agg, const Eigen::VectorXd& w, const EmbeddedDataset& data,
                          double C) {
  check_shapes(w, data);
  return w + 2.0 * C * (data.features.transpose() * agg.gradient_coefficients());
}

Eigen::VectorXd hvp_fast(const PairAggregates& agg, const Eigen::VectorXd& v, const EmbeddedDataset& data,
                         double C) {
  check_shapes(v, data);
  const Eigen::VectorXd q = data.features * v;
  return v + 2.0 * C * (data.features.transpose() * agg.hessian_coefficients(q));
}

CgResult conjugate_gradient(const LinearOperator& apply_h, const Eigen::VectorXd& g, double tol,
                            std::size_t max_iter) {
  CgResult out;
  out.solution = Eigen::VectorXd::Zero(g.size());
  Eigen::VectorXd r = -g;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  const double target = tol * g.norm();
  out.residual_norms.push_back(std::sqrt(rr));
  if (std::sqrt(rr) <= target) return out;

  for (std::size_t k = 0; k < max_iter; ++k) {
    const Eigen::VectorXd hp = apply_h(p);
    const double curvature = p.dot(hp);
    if (!(curvature > 0.0)) break;  // H is positive definite; only round-off lands here
    const double alpha = rr / curvature;
    out.solution += alpha * p;
    r -= alpha * hp;
    const double rr_next = r.squaredNorm();
    ++out.iterations;
    out.residual_norms.push_back(std::sqrt(rr_next));
    if (std::sqrt(rr_next) <= target) break;
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  return out;
}

BatchResult train_batch(const EmbeddedDataset& data, const BatchConfig& cfg) {
  cfg.validate();
  data.require_both_classes("batch training");
  const auto start = std::chrono::steady_clock::now();

  BatchResult result;
  BatchDiagnostics& diag = result.diagnostics;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(data.dim());
  PairAggregates agg(data, w);
  double f = 0.5 * w.squaredNorm() + cfg.C * agg.loss(2);
  diag.objective_trace.push_back(f);

  for (std::size_t outer = 0;; ++outer) {
    const Eigen::VectorXd g = grad_fast(agg, w, data, cfg.C);
    const double gnorm = g.norm();
    diag.grad_norms.push_back(gnorm);
    if (outer == 0) diag.grad_tol = cfg.grad_tol.value_or(1e-4 * std::max(1.0, gnorm));
    if (gnorm <= diag.grad_tol) {
      diag.converged = true;
      break;
    }
    if (outer == cfg.max_outer) break;

    const CgResult cg = conjugate_gradient(
        [&](const Eigen::VectorXd& v) { return hvp_fast(agg, v, data, cfg.C); }, g, cfg.cg_tol, cfg.cg_max);
    diag.cg_iterations += cg.iterations;

    double step = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= kMaxHalvings; ++halving) {
      Eigen::VectorXd trial = w + step * cg.solution;
      PairAggregates trial_agg(data, trial);
      const double f_trial = 0.5 * trial.squaredNorm() + cfg.C * trial_agg.loss(2);
      if (f_trial < f) {
        w = std::move(trial);
        agg = std::move(trial_agg);
        f = f_trial;
        accepted = true;
        break;
      }
      step *= 0.5;
      ++diag.halvings;
    }
    if (!accepted) {
      throw NumericalError("batch solver: objective did not decrease after " + std::to_string(kMaxHalvings) +
                           " step halvings at outer iteration " + std::to_string(outer) + " (objective " +
                           std::to_string(f) + ", gradient norm " + std::to_string(gnorm) + ")");
    }
    diag.objective_trace.push_back(f);
    diag.outer_iterations = outer + 1;
  }

  diag.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.model.w = std::move(w);
  result.model.trained_by = Trainer::batch;
  result.model.record.C = cfg.C;
  return result;
}

}  // namespace nlauc
