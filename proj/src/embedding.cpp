#include "nlauc/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "nlauc/error.hpp"
#include "nlauc/random.hpp"

namespace nlauc {

namespace {

// Accumulates in index order, matching SparseVector's cached norm.
double sequential_squared_norm(const Eigen::Ref<const Eigen::VectorXd>& v) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += v[i] * v[i];
  return s;
}

void check_input_dim(std::size_t expected, const Dataset& data, const char* what) {
  if (data.dim != expected) {
    throw DataError(std::string(what) + ": expected " + std::to_string(expected) +
                    " input features, data has " + std::to_string(data.dim));
  }
}

void check_point(std::size_t expected, const SparseVector& x) {
  if (x.extent() > expected) {
    throw DataError("point has feature " + std::to_string(x.extent()) +
                    " beyond the embedding's input dimension " + std::to_string(expected));
  }
}

constexpr Eigen::Index kEmbedBlock = 512;

}  // namespace

LandmarkSet kmeans(const Dataset& data, std::size_t v, std::size_t max_iter, std::uint64_t seed) {
  const std::size_t n = data.size();
  if (v == 0) throw UsageError("k-means needs at least one landmark");
  if (v > n) {
    throw DataError("k-means: " + std::to_string(v) + " landmarks requested but only " +
                    std::to_string(n) + " instances available");
  }
  if (max_iter == 0) throw UsageError("k-means needs at least one iteration");

  const auto d = static_cast<Eigen::Index>(data.dim);
  const auto k = static_cast<Eigen::Index>(v);
  Eigen::MatrixXd centers(d, k);  // one centroid per column
  Eigen::VectorXd center_norms(k);
  auto set_center = [&](Eigen::Index c, const SparseVector& x) {
    centers.col(c) = x.to_dense(data.dim);
    center_norms[c] = sequential_squared_norm(centers.col(c));
  };

  // k-means++ seeding.
  Rng rng(seed);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t pick = static_cast<std::size_t>(uniform_index(rng, n));
  for (Eigen::Index c = 0; c < k; ++c) {
    set_center(c, data.rows[pick]);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(data.rows[i], centers.col(c), center_norms[c]));
      total += nearest[i];
    }
    if (c + 1 == k) break;
    if (total > 0.0) {
      const double target = uniform_unit(rng) * total;
      double acc = 0.0;
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (nearest[i] <= 0.0) continue;
        acc += nearest[i];
        pick = i;
        if (acc > target) break;
      }
    } else {
      pick = static_cast<std::size_t>(uniform_index(rng, n));
    }
  }

  LandmarkSet out;
  std::vector<Eigen::Index> assign(n, -1);
  std::vector<double> dist(n, 0.0);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < k; ++c) {
        const double dc = squared_distance(data.rows[i], centers.col(c), center_norms[c]);
        if (dc < best_d) {
          best_d = dc;
          best = c;
        }
      }
      changed = changed || assign[i] != best;
      assign[i] = best;
      dist[i] = best_d;
      cost += best_d;
    }
    out.objective_trace.push_back(cost);
    out.iterations = iter + 1;
    if (!changed) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(d, k);
    std::vector<std::size_t> counts(v, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& e : data.rows[i].entries()) sums(static_cast<Eigen::Index>(e.index), assign[i]) += e.value;
      ++counts[static_cast<std::size_t>(assign[i])];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.col(c) = sums.col(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        center_norms[c] = sequential_squared_norm(centers.col(c));
        continue;
      }
      auto far = std::max_element(dist.begin(), dist.end());
      const auto i = static_cast<std::size_t>(far - dist.begin());
      set_center(c, data.rows[i]);
      *far = -1.0;  // not reused by another empty cluster this round
    }
  }
  out.centroids = centers.transpose();
  return out;
}

EmbeddedDataset::EmbeddedDataset(Eigen::MatrixXd feats, std::vector<int> labs)
    : features(std::move(feats)), labels(std::move(labs)) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw DataError("embedded dataset: " + std::to_string(features.rows()) + " rows but " +
                    std::to_string(labels.size()) + " labels");
  }
  if (!features.allFinite()) throw NumericalError("embedded features contain non-finite values");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      pos_idx.push_back(static_cast<Eigen::Index>(i));
    } else if (labels[i] == -1) {
      neg_idx.push_back(static_cast<Eigen::Index>(i));
    } else {
      throw DataError("embedded dataset labels must be -1 or +1, got " + std::to_string(labels[i]));
    }
  }
}

void EmbeddedDataset::require_both_classes(const char* context) const {
  if (pos_idx.empty() || neg_idx.empty()) {
    throw DataError(std::string(context) + ": need at least one positive and one negative instance (have " +
                    std::to_string(pos_idx.size()) + " positive, " + std::to_string(neg_idx.size()) +
                    " negative)");
  }
}

NystroemMap::NystroemMap(Eigen::MatrixXd landmarks, GaussianKernelParams kernel,
                         Eigen::MatrixXd projection, Eigen::VectorXd eigenvalues, std::uint64_t seed)
    : landmarks_(std::move(landmarks)),
      kernel_(kernel),
      projection_(std::move(projection)),
      eigenvalues_(std::move(eigenvalues)),
      seed_(seed) {
  if (projection_.cols() != landmarks_.rows()) {
    throw DataError("nystroem projection has " + std::to_string(projection_.cols()) +
                    " columns for " + std::to_string(landmarks_.rows()) + " landmarks");
  }
  columns_ = landmarks_.transpose();
  landmark_norms_.resize(landmarks_.rows());
  for (Eigen::Index j = 0; j < landmarks_.rows(); ++j) {
    landmark_norms_[j] = sequential_squared_norm(columns_.col(j));
  }
}

Eigen::VectorXd NystroemMap::kernel_row(const SparseVector& x) const {
  check_point(input_dim(), x);
  const Eigen::Index v = landmarks_.rows();
  Eigen::VectorXd k(v);
  for (Eigen::Index j = 0; j < v; ++j) {
    k[j] = kernel_(squared_distance(x, columns_.col(j), landmark_norms_[j]));
  }
  return k;
}

Eigen::VectorXd NystroemMap::embed_point(const SparseVector& x) const {
  return projection_ * kernel_row(x);
}

NystroemMap fit_nystroem(const LandmarkSet& landmarks, const GaussianKernelParams& kernel,
                         std::optional<std::size_t> rank_cap, double eig_drop, std::uint64_t seed) {
  if (landmarks.size() == 0) throw DataError("nystroem: empty landmark set");
  if (!landmarks.centroids.allFinite()) throw NumericalError("nystroem: non-finite landmark");
  if (!(eig_drop >= 0.0)) throw UsageError("eigenvalue drop threshold must be >= 0");
  if (rank_cap && *rank_cap == 0) throw UsageError("rank must be at least 1");

  Eigen::MatrixXd w = kernel_matrix(landmarks.centroids, landmarks.centroids, kernel);
  w = 0.5 * (w + w.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(w);
  if (solver.info() != Eigen::Success) throw NumericalError("nystroem: eigendecomposition failed");

  // Eigen returns ascending order.
  const Eigen::VectorXd ascending = solver.eigenvalues();
  const Eigen::Index v = ascending.size();
  const double lambda_max = ascending[v - 1];
  Eigen::Index kept = 0;
  while (kept < v && ascending[v - 1 - kept] > eig_drop * lambda_max && ascending[v - 1 - kept] > 0.0) ++kept;
  if (kept == 0) throw NumericalError("nystroem: no eigenvalue of W above the drop threshold");
  const Eigen::Index r = rank_cap ? std::min<Eigen::Index>(kept, static_cast<Eigen::Index>(*rank_cap)) : kept;

  Eigen::MatrixXd projection(r, v);
  Eigen::VectorXd eigenvalues(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    const Eigen::Index src = v - 1 - k;
    eigenvalues[k] = ascending[src];
    projection.row(k) = solver.eigenvectors().col(src).transpose() / std::sqrt(ascending[src]);
  }
  return NystroemMap(landmarks.centroids, kernel, std::move(projection), std::move(eigenvalues), seed);
}

RffMap::RffMap(Eigen::MatrixXd frequencies, Eigen::VectorXd phases, GaussianKernelParams kernel,
               std::uint64_t seed)
    : frequencies_(std::move(frequencies)), phases_(std::move(phases)), kernel_(kernel), seed_(seed) {
  if (frequencies_.rows() == 0) throw UsageError("random Fourier features need D >= 1");
  if (phases_.size() != frequencies_.rows()) throw DataError("rff: phases and frequencies disagree in D");
  scale_ = std::sqrt(2.0 / static_cast<double>(frequencies_.rows()));
}

Eigen::VectorXd RffMap::embed_point(const SparseVector& x) const {
  check_point(input_dim(), x);
  Eigen::VectorXd z = phases_;
  for (const auto& e : x.entries()) z += e.value * frequencies_.col(static_cast<Eigen::Index>(e.index));
  return scale_ * z.array().cos().matrix();
}

RffMap fit_rff(std::size_t d, std::size_t features, const GaussianKernelParams& kernel,
               std::uint64_t seed) {
  if (features == 0) throw UsageError("random Fourier features need D >= 1");
  const auto rows = static_cast<Eigen::Index>(features);
  const auto cols = static_cast<Eigen::Index>(d);
  Rng rng(seed);
  // Spectral density of the Gaussian kernel: N(0, I / sigma2).
  const double sd = 1.0 / std::sqrt(kernel.sigma2);
  Eigen::MatrixXd freq(rows, cols);
  for (Eigen::Index j = 0; j < rows; ++j) {
    for (Eigen::Index f = 0; f < cols; ++f) freq(j, f) = sd * standard_normal(rng);
  }
  Eigen::VectorXd phases(rows);
  for (Eigen::Index j = 0; j < rows; ++j) phases[j] = 2.0 * std::numbers::pi * uniform_unit(rng);
  return RffMap(std::move(freq), std::move(phases), kernel, seed);
}

Eigen::VectorXd embed_point(const FeatureMap& map, const SparseVector& x) {
  return std::visit([&](const auto& m) { return m.embed_point(x); }, map);
}

std::size_t input_dim(const FeatureMap& map) {
  return std::visit([](const auto& m) { return m.input_dim(); }, map);
}

std::size_t output_dim(const FeatureMap& map) {
  return std::visit([](const auto& m) { return m.output_dim(); }, map);
}

Eigen::MatrixXd embed_features(const NystroemMap& map, const Dataset& data) {
  check_input_dim(map.input_dim(), data, "nystroem embedding");
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto v = static_cast<Eigen::Index>(map.landmark_count());
  Eigen::MatrixXd features(n, static_cast<Eigen::Index>(map.rank()));
  // Blocks of kernel rows go through one matrix product each.
  Eigen::MatrixXd block;
  for (Eigen::Index start = 0; start < n; start += kEmbedBlock) {
    const Eigen::Index len = std::min(kEmbedBlock, n - start);
    block.resize(len, v);
    for (Eigen::Index i = 0; i < len; ++i) {
      block.row(i) = map.kernel_row(data.rows[static_cast<std::size_t>(start + i)]).transpose();
    }
    features.middleRows(start, len).noalias() = block * map.projection().transpose();
  }
  return features;
}

Eigen::MatrixXd embed_features(const RffMap& map, const Dataset& data) {
  check_input_dim(map.input_dim(), data, "random Fourier embedding");
  Eigen::MatrixXd features(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(map.output_dim()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    features.row(static_cast<Eigen::Index>(i)) = map.embed_point(data.rows[i]).transpose();
  }
  return features;
}

Eigen::MatrixXd embed_features(const FeatureMap& map, const Dataset& data) {
  return std::visit([&](const auto& m) { return embed_features(m, data); }, map);
}

EmbeddedDataset embed(const NystroemMap& map, const Dataset& data) {
  return EmbeddedDataset(embed_features(map, data), data.labels);
}

EmbeddedDataset embed(const RffMap& map, const Dataset& data) {
  return EmbeddedDataset(embed_features(map, data), data.labels);
}

EmbeddedDataset embed(const FeatureMap& map, const Dataset& data) {
  return EmbeddedDataset(embed_features(map, data), data.labels);
}

}  // namespace nlauc
