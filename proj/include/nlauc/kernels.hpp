#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Core>

#include "nlauc/dataio.hpp"

namespace nlauc {

/// Gaussian kernel k(x, y) = exp(-||x - y||^2 / (2 sigma2)).
struct GaussianKernelParams {
  double sigma2 = 1.0;

  /// Throws UsageError unless sigma2 is finite and positive.
  static GaussianKernelParams from_sigma2(double sigma2);
  /// Direct exp(-gamma ||x - y||^2) parameterization, i.e. sigma2 = 1 / (2 gamma).
  static GaussianKernelParams from_gamma(double gamma);

  double gamma() const { return 0.5 / sigma2; }
  double operator()(double squared_distance) const;
};

inline constexpr std::size_t kDefaultBandwidthCap = 80000;

// Squared distances clamp the cancellation error of ||x||^2 + ||y||^2 - 2<x,y> at zero.
double squared_distance(const SparseVector& x, const SparseVector& y);
double squared_distance(const SparseVector& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                        double y_squared_norm);

double gaussian_kernel(const SparseVector& x, const SparseVector& y,
                       const GaussianKernelParams& params);

/// sigma2 = mean squared distance of the first min(n, cap) rows to their mean.
/// Throws DataError when fewer than two rows are available or all of them coincide.
GaussianKernelParams bandwidth_heuristic(const Dataset& data,
                                         std::size_t cap = kDefaultBandwidthCap);

Eigen::MatrixXd kernel_matrix(std::span<const SparseVector> rows_a,
                              std::span<const SparseVector> rows_b,
                              const GaussianKernelParams& params);

/// Kernel matrix between the rows of two dense matrices.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& rows_a, const Eigen::MatrixXd& rows_b,
                              const GaussianKernelParams& params);

}  // namespace nlauc
