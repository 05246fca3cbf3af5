#pragma once

// End-to-end driver: standardize -> landmarks -> feature map -> solver -> model file.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nlauc/batch_solver.hpp"
#include "nlauc/dataio.hpp"
#include "nlauc/embedding.hpp"
#include "nlauc/model.hpp"
#include "nlauc/sgd.hpp"

namespace nlauc {

enum class EmbeddingKind { nystroem, rff };

struct EmbeddingConfig {
  EmbeddingKind kind = EmbeddingKind::nystroem;
  std::size_t landmarks = kDefaultLandmarks;  // also the RFF feature count
  std::optional<std::size_t> rank;
  std::size_t kmeans_iters = kDefaultKMeansIters;
  // At most one of these; otherwise the bandwidth heuristic is used.
  std::optional<double> sigma2;
  std::optional<double> gamma;
  std::size_t bandwidth_cap = kDefaultBandwidthCap;
  double eig_drop = kDefaultEigDrop;
  std::uint64_t seed = 1;

  void validate() const;
};

struct FittedEmbedding {
  Standardizer standardizer;
  FeatureMap map;
  double seconds = 0.0;

  EmbeddedDataset apply(const Dataset& raw) const;
};

/// Fits scaling on `train`, then landmarks and the Nystroem map (or RFF) in the
/// standardized space.
FittedEmbedding fit_embedding(const Dataset& train, const EmbeddingConfig& cfg);

using SolverConfig = std::variant<BatchConfig, SgdConfig>;

void validate(const SolverConfig& solver);

struct TrainOutcome {
  ModelFile model;
  EmbeddedDataset embedded_train;
  double embed_seconds = 0.0;
  double train_seconds = 0.0;
  double train_auc = 0.0;
};

LinearModel train_linear(const EmbeddedDataset& data, const SolverConfig& solver,
                         double* seconds = nullptr, const EpochCallback& on_epoch = {});

TrainOutcome train_pipeline(const Dataset& train, const EmbeddingConfig& emb, const SolverConfig& solver,
                            const EpochCallback& on_epoch = {});

/// Grid for C: 2^-15 ... 2^10.
std::vector<double> default_c_grid();
/// Grid for lambda: 1e-10 ... 1e-7.
std::vector<double> default_lambda_grid();
/// Epoch counts used for convergence studies.
std::vector<std::size_t> default_epoch_grid();

struct CvCell {
  double value = 0.0;
  std::size_t fold = 0;
  double auc = 0.0;
  double seconds = 0.0;
};

struct CvReport {
  std::vector<double> grid;
  std::vector<CvCell> cells;  // sorted by (value, fold)
  std::vector<double> mean_auc;  // per grid value
  double selected = 0.0;
  double selected_mean_auc = 0.0;
};

/// Stratified k-fold search over C (batch) or lambda (sgd). The embedding is
/// refit on each fold's training part. Ties prefer stronger regularization.
CvReport cross_validate(const Dataset& train, const EmbeddingConfig& emb, const SolverConfig& base,
                        const std::vector<double>& grid, std::size_t folds, std::uint64_t seed);

void write_cv_csv(std::ostream& out, const CvReport& report);

struct ConvergenceRow {
  std::string variant;  // "averaged" or "non-averaged"
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  double test_auc = 0.0;
  double train_seconds = 0.0;
};

/// Test AUC of the averaged and non-averaged stochastic solvers at each epoch
/// count, for each seed, on one shared embedding. A run to the largest count
/// is sampled at the smaller ones; every iterate prefix is identical to a
/// shorter run with the same seed.
std::vector<ConvergenceRow> convergence_study(const EmbeddedDataset& train, const EmbeddedDataset& test,
                                              const SgdConfig& base, const std::vector<std::size_t>& epochs,
                                              const std::vector<std::uint64_t>& seeds);

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows);

struct CurvePoint {
  std::size_t epoch = 0;
  double train_auc = 0.0;
  std::optional<double> test_auc;
  double elapsed_seconds = 0.0;
};

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

}  // namespace nlauc
