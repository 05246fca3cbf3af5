#include "nlauc/sgd.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <new>
#include <string>
#include <utility>

#if defined(__linux__)
#include <sys/mman.h>
#endif

#include "nlauc/error.hpp"
#include "nlauc/random.hpp"

namespace nlauc {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FreeDeleter {
  void operator()(double* p) const { std::free(p); }
};

// Row-major copy of the features in 2 MiB-aligned memory. Sampling touches
// random rows, so on large inputs huge pages cut TLB misses noticeably.
class RowBuffer {
 public:
  explicit RowBuffer(const Eigen::MatrixXd& features) {
    constexpr std::size_t kHuge = std::size_t{2} << 20;
    const std::size_t bytes = static_cast<std::size_t>(features.size()) * sizeof(double);
    const std::size_t alloc = std::max<std::size_t>((bytes + kHuge - 1) / kHuge * kHuge, kHuge);
    mem_.reset(static_cast<double*>(std::aligned_alloc(kHuge, alloc)));
    if (!mem_) throw std::bad_alloc();
#if defined(MADV_HUGEPAGE)
    madvise(mem_.get(), alloc, MADV_HUGEPAGE);  // advisory; failure is harmless
#endif
    rows_ = features.rows();
    cols_ = features.cols();
    Eigen::Map<RowMajor>(mem_.get(), rows_, cols_) = features;
  }

  Eigen::Map<const RowMajor> view() const { return {mem_.get(), rows_, cols_}; }

 private:
  std::unique_ptr<double, FreeDeleter> mem_;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
};

}  // namespace

void SgdConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw UsageError("lambda must be finite and positive");
  if (!(t0 >= 0.0) || !std::isfinite(t0)) throw UsageError("t0 must be finite and >= 0");
  if (epochs < 1) throw UsageError("epochs must be at least 1");
  if (rskip < 1) throw UsageError("rskip must be at least 1");
  if (askip < 1) throw UsageError("askip must be at least 1");
  if (!(t0 + 1.0 > static_cast<double>(rskip))) {
    throw UsageError("t0 + 1 must exceed rskip, otherwise regularization flips the sign of w");
  }
}

SgdState SgdState::initial(Eigen::Index dim, const SgdConfig& cfg) {
  SgdState s;
  s.w = Eigen::VectorXd::Zero(dim);
  s.w_avg = Eigen::VectorXd::Zero(dim);
  s.rcount = static_cast<std::int64_t>(cfg.rskip);
  s.acount = static_cast<std::int64_t>(cfg.askip);
  return s;
}

int sgd_step(SgdState& state, const Eigen::Ref<const Eigen::VectorXd>& x_diff, const SgdConfig& cfg) {
  const int coeff = hinge_subgradient_coeff(state.w.dot(x_diff));
  if (coeff == 0) return 0;
  const double eta = 1.0 / (cfg.lambda * (static_cast<double>(state.t) + cfg.t0));
  state.w.noalias() += eta * x_diff;
  return coeff;
}

void scheduled_regularize(SgdState& state, const SgdConfig& cfg) {
  state.w *= 1.0 - static_cast<double>(cfg.rskip) / (static_cast<double>(state.t) + cfg.t0);
  state.rcount = static_cast<std::int64_t>(cfg.rskip);
}

void scheduled_average(SgdState& state, const SgdConfig& cfg) {
  const auto q = static_cast<double>(state.q);
  state.w_avg = (q * state.w_avg + state.w) / (q + 1.0);
  ++state.q;
  state.acount = static_cast<std::int64_t>(cfg.askip);
}

SgdResult train_sgd(const EmbeddedDataset& data, const SgdConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  data.require_both_classes("stochastic training");

  using Clock = std::chrono::steady_clock;
  Clock::duration elapsed{};
  auto lap = Clock::now();

  // Row-major so that each sampled instance is contiguous.
  const RowBuffer rows(data.features);
  const auto x = rows.view();
  const auto n_pos = static_cast<std::uint64_t>(data.pos_idx.size());
  const auto n_neg = static_cast<std::uint64_t>(data.neg_idx.size());
  const auto n = static_cast<std::uint64_t>(data.size());

  SgdResult result;
  SgdDiagnostics& diag = result.diagnostics;
  SgdState state = SgdState::initial(data.dim(), cfg);
  Eigen::VectorXd x_diff(data.dim());
  Rng rng(cfg.seed);

  auto current = [&]() -> const Eigen::VectorXd& {
    return cfg.averaging && state.q > 0 ? state.w_avg : state.w;
  };

  // Pairs are drawn kLookahead iterations early so their rows can be
  // prefetched; the draw order, and hence the result, is unchanged.
  constexpr std::size_t kLookahead = 16;
  const std::uint64_t total = n * static_cast<std::uint64_t>(cfg.epochs);
  std::array<std::pair<Eigen::Index, Eigen::Index>, kLookahead> ahead{};
  std::uint64_t drawn = 0;
  auto prefetch = [&](Eigen::Index row) {
    const char* p = reinterpret_cast<const char*>(x.row(row).data());
    const char* end = p + x.cols() * static_cast<Eigen::Index>(sizeof(double));
    for (; p < end; p += 64) __builtin_prefetch(p);
  };
  auto draw = [&] {
    auto& slot = ahead[drawn % kLookahead];
    slot.first = data.pos_idx[uniform_index(rng, n_pos)];
    slot.second = data.neg_idx[uniform_index(rng, n_neg)];
    prefetch(slot.first);
    prefetch(slot.second);
    ++drawn;
  };
  while (drawn < std::min<std::uint64_t>(kLookahead, total)) draw();
  std::uint64_t done = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::uint64_t it = 0; it < n; ++it) {
      const auto [i, j] = ahead[done % kLookahead];
      if (drawn < total) draw();
      ++done;
      x_diff.noalias() = (x.row(i) - x.row(j)).transpose();
      diag.active_steps += static_cast<std::uint64_t>(sgd_step(state, x_diff, cfg));

      if (--state.rcount <= 0) scheduled_regularize(state, cfg);
      if (cfg.averaging && --state.acount <= 0) scheduled_average(state, cfg);
      ++state.t;
    }
    if (on_epoch) {
      elapsed += Clock::now() - lap;
      on_epoch(epoch, current(), std::chrono::duration<double>(elapsed).count());
      lap = Clock::now();
    }
  }
  elapsed += Clock::now() - lap;

  diag.iterations = state.t - 1;
  diag.averages = state.q;
  diag.seconds = std::chrono::duration<double>(elapsed).count();
  if (!state.w.allFinite()) throw NumericalError("stochastic solver diverged to non-finite weights");

  LinearModel& model = result.model;
  model.w = current();
  model.trained_by = Trainer::sgd;
  model.record.lambda = cfg.lambda;
  model.record.t0 = cfg.t0;
  model.record.epochs = cfg.epochs;
  model.record.rskip = cfg.rskip;
  model.record.askip = cfg.askip;
  model.record.averaging = cfg.averaging;
  model.record.seed = cfg.seed;
  return result;
}

}  // namespace nlauc
