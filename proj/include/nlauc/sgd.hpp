#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include <Eigen/Core>

#include "nlauc/embedding.hpp"
#include "nlauc/model.hpp"

namespace nlauc {

/// Stochastic pairwise hinge solver settings. One epoch is n iterations.
struct SgdConfig {
  double lambda = 1e-7;
  double t0 = 1e4;
  std::size_t epochs = 20;
  std::size_t rskip = 16;
  std::size_t askip = 16;
  std::uint64_t seed = 1;
  bool averaging = true;

  /// Requires lambda > 0, skips >= 1, epochs >= 1 and t0 + 1 > rskip
  /// (otherwise the first regularization step would flip the sign of w).
  void validate() const;
};

struct SgdState {
  Eigen::VectorXd w;
  Eigen::VectorXd w_avg;
  std::uint64_t q = 0;  // number of averaged captures
  std::uint64_t t = 1;
  std::int64_t rcount = 0;
  std::int64_t acount = 0;

  static SgdState initial(Eigen::Index dim, const SgdConfig& cfg);
};

/// Hinge subgradient indicator: 1 if margin < 1, else 0 (0 at the kink).
inline int hinge_subgradient_coeff(double margin) { return margin < 1.0 ? 1 : 0; }

/// w += coeff(w^T x_diff) / (lambda (t + t0)) * x_diff, with x_diff = phi(x+) - phi(x-).
/// Returns the coefficient used. Does not advance t.
int sgd_step(SgdState& state, const Eigen::Ref<const Eigen::VectorXd>& x_diff, const SgdConfig& cfg);

/// w *= 1 - rskip / (t + t0); resets the countdown.
void scheduled_regularize(SgdState& state, const SgdConfig& cfg);

/// Folds w into the running mean of captured iterates; resets the countdown.
void scheduled_average(SgdState& state, const SgdConfig& cfg);

/// Called after every epoch with (epoch, current model weights, training
/// seconds so far excluding callbacks).
using EpochCallback = std::function<void(std::size_t, const Eigen::VectorXd&, double)>;

struct SgdDiagnostics {
  std::uint64_t iterations = 0;
  std::uint64_t active_steps = 0;
  std::uint64_t averages = 0;
  double seconds = 0.0;  // excludes time spent in the epoch callback
};

struct SgdResult {
  LinearModel model;
  SgdDiagnostics diagnostics;
};

/// epochs * n iterations of uniform positive/negative pair sampling with
/// scheduled regularization and averaging. Returns the averaged iterate, or
/// the last iterate when averaging is off.
SgdResult train_sgd(const EmbeddedDataset& data, const SgdConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace nlauc
