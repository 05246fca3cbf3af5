#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "nlauc/dataio.hpp"
#include "nlauc/kernels.hpp"

namespace nlauc {

inline constexpr std::size_t kDefaultLandmarks = 1600;
inline constexpr std::size_t kDefaultKMeansIters = 100;
inline constexpr double kDefaultEigDrop = 1e-12;

/// k-means centroids used as Nystroem landmarks (one per row).
struct LandmarkSet {
  Eigen::MatrixXd centroids;
  // Sum of squared distances after each assignment step.
  std::vector<double> objective_trace;
  std::size_t iterations = 0;

  std::size_t size() const { return static_cast<std::size_t>(centroids.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(centroids.cols()); }
};

/// Lloyd's algorithm from a k-means++ start. Stops at an assignment fixpoint
/// or after max_iter rounds; an emptied cluster is moved onto the point that
/// is farthest from its current centroid.
LandmarkSet kmeans(const Dataset& data, std::size_t v, std::size_t max_iter, std::uint64_t seed);

/// Dense embedded instances with their class index sets.
struct EmbeddedDataset {
  Eigen::MatrixXd features;  // n x r
  std::vector<int> labels;
  std::vector<Eigen::Index> pos_idx;
  std::vector<Eigen::Index> neg_idx;

  EmbeddedDataset() = default;
  EmbeddedDataset(Eigen::MatrixXd features, std::vector<int> labels);

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  void require_both_classes(const char* context) const;
};

/// The map x -> Sigma_r^{-1/2} U_r^T [k(x, u_1), ..., k(x, u_v)]^T.
class NystroemMap {
 public:
  NystroemMap() = default;
  NystroemMap(Eigen::MatrixXd landmarks, GaussianKernelParams kernel, Eigen::MatrixXd projection,
              Eigen::VectorXd eigenvalues, std::uint64_t seed);

  const Eigen::MatrixXd& landmarks() const { return landmarks_; }
  const GaussianKernelParams& kernel() const { return kernel_; }
  const Eigen::MatrixXd& projection() const { return projection_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  std::uint64_t seed() const { return seed_; }

  std::size_t input_dim() const { return static_cast<std::size_t>(landmarks_.cols()); }
  std::size_t landmark_count() const { return static_cast<std::size_t>(landmarks_.rows()); }
  std::size_t rank() const { return static_cast<std::size_t>(projection_.rows()); }
  std::size_t output_dim() const { return rank(); }

  /// Kernel values against every landmark.
  Eigen::VectorXd kernel_row(const SparseVector& x) const;
  Eigen::VectorXd embed_point(const SparseVector& x) const;

 private:
  Eigen::MatrixXd landmarks_;
  Eigen::MatrixXd columns_;  // landmarks as columns, d x v
  Eigen::VectorXd landmark_norms_;
  GaussianKernelParams kernel_;
  Eigen::MatrixXd projection_;  // r x v
  Eigen::VectorXd eigenvalues_;
  std::uint64_t seed_ = 0;
};

/// Eigendecomposes W = K(landmarks, landmarks), drops eigenvalues at or below
/// eig_drop * lambda_max and keeps the top min(rank_cap, retained) pairs.
NystroemMap fit_nystroem(const LandmarkSet& landmarks, const GaussianKernelParams& kernel,
                         std::optional<std::size_t> rank_cap = std::nullopt,
                         double eig_drop = kDefaultEigDrop, std::uint64_t seed = 0);

/// Random Fourier features z_j(x) = sqrt(2/D) cos(<omega_j, x> + b_j).
class RffMap {
 public:
  RffMap() = default;
  RffMap(Eigen::MatrixXd frequencies, Eigen::VectorXd phases, GaussianKernelParams kernel,
         std::uint64_t seed);

  const Eigen::MatrixXd& frequencies() const { return frequencies_; }  // D x d
  const Eigen::VectorXd& phases() const { return phases_; }
  const GaussianKernelParams& kernel() const { return kernel_; }
  double scale() const { return scale_; }
  std::uint64_t seed() const { return seed_; }

  std::size_t input_dim() const { return static_cast<std::size_t>(frequencies_.cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(frequencies_.rows()); }

  Eigen::VectorXd embed_point(const SparseVector& x) const;

 private:
  Eigen::MatrixXd frequencies_;
  Eigen::VectorXd phases_;
  GaussianKernelParams kernel_;
  double scale_ = 0.0;
  std::uint64_t seed_ = 0;
};

RffMap fit_rff(std::size_t d, std::size_t features, const GaussianKernelParams& kernel,
               std::uint64_t seed);

using FeatureMap = std::variant<NystroemMap, RffMap>;

Eigen::VectorXd embed_point(const FeatureMap& map, const SparseVector& x);
std::size_t input_dim(const FeatureMap& map);
std::size_t output_dim(const FeatureMap& map);

/// Embedded rows only (labels untouched), n x output_dim.
Eigen::MatrixXd embed_features(const NystroemMap& map, const Dataset& data);
Eigen::MatrixXd embed_features(const RffMap& map, const Dataset& data);
Eigen::MatrixXd embed_features(const FeatureMap& map, const Dataset& data);

EmbeddedDataset embed(const NystroemMap& map, const Dataset& data);
EmbeddedDataset embed(const RffMap& map, const Dataset& data);
EmbeddedDataset embed(const FeatureMap& map, const Dataset& data);

}  // namespace nlauc
