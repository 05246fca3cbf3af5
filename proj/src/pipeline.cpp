#include "nlauc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <string>

#include "nlauc/auc.hpp"
#include "nlauc/error.hpp"

namespace nlauc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

bool is_batch(const SolverConfig& s) { return std::holds_alternative<BatchConfig>(s); }

SolverConfig with_value(const SolverConfig& base, double value) {
  SolverConfig out = base;
  if (auto* b = std::get_if<BatchConfig>(&out)) {
    b->C = value;
  } else {
    std::get<SgdConfig>(out).lambda = value;
  }
  return out;
}

}  // namespace

void EmbeddingConfig::validate() const {
  if (sigma2 && gamma) throw UsageError("--sigma2 and --gamma are mutually exclusive");
  if (landmarks == 0) throw UsageError("need at least one landmark / feature");
  if (rank && *rank == 0) throw UsageError("rank must be at least 1");
  if (kmeans_iters == 0) throw UsageError("k-means needs at least one iteration");
  if (bandwidth_cap < 2) throw UsageError("bandwidth cap must be at least 2");
  if (!(eig_drop >= 0.0)) throw UsageError("eigenvalue drop threshold must be >= 0");
}

EmbeddedDataset FittedEmbedding::apply(const Dataset& raw) const {
  return embed(map, standardize_apply(standardizer, raw));
}

FittedEmbedding fit_embedding(const Dataset& train, const EmbeddingConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  FittedEmbedding out;
  out.standardizer = standardize_fit(train);
  const Dataset scaled = standardize_apply(out.standardizer, train);

  GaussianKernelParams kernel;
  if (cfg.sigma2) {
    kernel = GaussianKernelParams::from_sigma2(*cfg.sigma2);
  } else if (cfg.gamma) {
    kernel = GaussianKernelParams::from_gamma(*cfg.gamma);
  } else {
    kernel = bandwidth_heuristic(scaled, cfg.bandwidth_cap);
  }

  if (cfg.kind == EmbeddingKind::nystroem) {
    const LandmarkSet landmarks = kmeans(scaled, cfg.landmarks, cfg.kmeans_iters, cfg.seed);
    out.map = fit_nystroem(landmarks, kernel, cfg.rank, cfg.eig_drop, cfg.seed);
  } else {
    out.map = fit_rff(scaled.dim, cfg.landmarks, kernel, cfg.seed);
  }
  out.seconds = seconds_since(start);
  return out;
}

void validate(const SolverConfig& solver) {
  std::visit([](const auto& cfg) { cfg.validate(); }, solver);
}

LinearModel train_linear(const EmbeddedDataset& data, const SolverConfig& solver, double* seconds,
                         const EpochCallback& on_epoch) {
  if (const auto* b = std::get_if<BatchConfig>(&solver)) {
    BatchResult r = train_batch(data, *b);
    if (seconds) *seconds = r.diagnostics.seconds;
    return std::move(r.model);
  }
  SgdResult r = train_sgd(data, std::get<SgdConfig>(solver), on_epoch);
  if (seconds) *seconds = r.diagnostics.seconds;
  return std::move(r.model);
}

TrainOutcome train_pipeline(const Dataset& train, const EmbeddingConfig& emb, const SolverConfig& solver,
                            const EpochCallback& on_epoch) {
  emb.validate();
  validate(solver);
  require_both_classes(train, "training data");
  TrainOutcome out;
  FittedEmbedding fitted = fit_embedding(train, emb);
  out.embed_seconds = fitted.seconds;
  const auto embed_start = Clock::now();
  out.embedded_train = fitted.apply(train);
  out.embed_seconds += seconds_since(embed_start);

  LinearModel linear = train_linear(out.embedded_train, solver, &out.train_seconds, on_epoch);
  linear.embedding_id = embedding_digest(fitted.map);
  if (is_batch(solver)) linear.record.seed = emb.seed;
  out.train_auc = auc(linear.score(out.embedded_train), out.embedded_train.labels).auc;

  out.model.standardizer = std::move(fitted.standardizer);
  out.model.embedding = std::move(fitted.map);
  out.model.linear = std::move(linear);
  return out;
}

std::vector<double> default_c_grid() {
  std::vector<double> grid;
  for (int e = -15; e <= 10; ++e) grid.push_back(std::ldexp(1.0, e));
  return grid;
}

std::vector<double> default_lambda_grid() { return {1e-10, 1e-9, 1e-8, 1e-7}; }

std::vector<std::size_t> default_epoch_grid() { return {1, 2, 3, 4, 5, 10, 20, 50, 100, 200, 300, 400}; }

CvReport cross_validate(const Dataset& train, const EmbeddingConfig& emb, const SolverConfig& base,
                        const std::vector<double>& grid, std::size_t folds, std::uint64_t seed) {
  if (grid.empty()) throw UsageError("hyperparameter grid is empty");
  emb.validate();
  validate(base);
  require_both_classes(train, "cross validation");
  const std::vector<std::size_t> fold_of = stratified_folds(train, folds, seed);

  CvReport report;
  report.grid = grid;
  std::sort(report.grid.begin(), report.grid.end());
  report.grid.erase(std::unique(report.grid.begin(), report.grid.end()), report.grid.end());

  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> tr;
    std::vector<std::size_t> va;
    for (std::size_t i = 0; i < train.size(); ++i) (fold_of[i] == f ? va : tr).push_back(i);
    const Dataset fold_train = train.subset(tr);
    const Dataset fold_valid = train.subset(va);
    for (const Dataset* part : {&fold_train, &fold_valid}) {
      if (part->n_pos() == 0 || part->n_neg() == 0) {
        throw DataError("fold " + std::to_string(f) +
                        " has a single class; use fewer folds or change --seed (classes need at least " +
                        std::to_string(folds) + " members each)");
      }
    }
    const FittedEmbedding fitted = fit_embedding(fold_train, emb);
    const EmbeddedDataset etr = fitted.apply(fold_train);
    const EmbeddedDataset eva = fitted.apply(fold_valid);
    for (double value : report.grid) {
      CvCell cell;
      cell.value = value;
      cell.fold = f;
      const LinearModel m = train_linear(etr, with_value(base, value), &cell.seconds);
      cell.auc = auc(m.score(eva), eva.labels).auc;
      report.cells.push_back(cell);
    }
  }
  std::sort(report.cells.begin(), report.cells.end(), [](const CvCell& a, const CvCell& b) {
    return a.value != b.value ? a.value < b.value : a.fold < b.fold;
  });

  // Stronger regularization first: ascending C, descending lambda; strict '>' keeps the first maximum.
  const bool batch = is_batch(base);
  std::vector<std::size_t> order(report.grid.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = batch ? k : order.size() - 1 - k;
  report.mean_auc.assign(report.grid.size(), 0.0);
  for (const CvCell& c : report.cells) {
    const auto k = static_cast<std::size_t>(
        std::lower_bound(report.grid.begin(), report.grid.end(), c.value) - report.grid.begin());
    report.mean_auc[k] += c.auc / static_cast<double>(folds);
  }
  bool first = true;
  for (std::size_t k : order) {
    if (first || report.mean_auc[k] > report.selected_mean_auc) {
      report.selected = report.grid[k];
      report.selected_mean_auc = report.mean_auc[k];
      first = false;
    }
  }
  return report;
}

void write_cv_csv(std::ostream& out, const CvReport& report) {
  out << "value,fold,val_auc,seconds,selected\n";
  for (const CvCell& c : report.cells) {
    out << fmt(c.value) << ',' << c.fold << ',' << fmt(c.auc) << ',' << c.seconds << ','
        << (c.value == report.selected ? 1 : 0) << '\n';
  }
}

std::vector<ConvergenceRow> convergence_study(const EmbeddedDataset& train, const EmbeddedDataset& test,
                                              const SgdConfig& base, const std::vector<std::size_t>& epochs,
                                              const std::vector<std::uint64_t>& seeds) {
  if (epochs.empty()) throw UsageError("epoch grid is empty");
  if (seeds.empty()) throw UsageError("need at least one seed");
  const std::set<std::size_t> wanted(epochs.begin(), epochs.end());
  if (*wanted.begin() == 0) throw UsageError("epoch counts must be positive");

  std::vector<ConvergenceRow> rows;
  for (const std::uint64_t seed : seeds) {
    for (const bool averaging : {true, false}) {
      SgdConfig cfg = base;
      cfg.seed = seed;
      cfg.averaging = averaging;
      cfg.epochs = *wanted.rbegin();
      train_sgd(train, cfg, [&](std::size_t epoch, const Eigen::VectorXd& w, double elapsed) {
        if (!wanted.contains(epoch)) return;
        const Eigen::VectorXd scores = test.features * w;
        rows.push_back({averaging ? "averaged" : "non-averaged", epoch, seed, auc(scores, test.labels).auc,
                        elapsed});
      });
    }
  }
  std::sort(rows.begin(), rows.end(), [](const ConvergenceRow& a, const ConvergenceRow& b) {
    if (a.variant != b.variant) return a.variant < b.variant;
    if (a.epochs != b.epochs) return a.epochs < b.epochs;
    return a.seed < b.seed;
  });
  return rows;
}

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows) {
  out << "variant,epochs,seed,test_auc,train_seconds\n";
  for (const auto& r : rows) {
    out << r.variant << ',' << r.epochs << ',' << r.seed << ',' << fmt(r.test_auc) << ',' << r.train_seconds << '\n';
  }
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "epoch,train_auc,test_auc,elapsed_seconds\n";
  for (const auto& p : curve) {
    out << p.epoch << ',' << fmt(p.train_auc) << ',' << (p.test_auc ? fmt(*p.test_auc) : std::string()) << ','
        << p.elapsed_seconds << '\n';
  }
}

}  // namespace nlauc
