#include "nlauc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nlauc/error.hpp"

namespace nlauc {

GaussianKernelParams GaussianKernelParams::from_sigma2(double sigma2) {
  if (!(std::isfinite(sigma2) && sigma2 > 0.0)) {
    throw UsageError("sigma2 must be finite and positive, got " + std::to_string(sigma2));
  }
  return GaussianKernelParams{sigma2};
}

GaussianKernelParams GaussianKernelParams::from_gamma(double gamma) {
  if (!(std::isfinite(gamma) && gamma > 0.0)) {
    throw UsageError("gamma must be finite and positive, got " + std::to_string(gamma));
  }
  return from_sigma2(0.5 / gamma);
}

double GaussianKernelParams::operator()(double squared_distance) const {
  return std::exp(-squared_distance / (2.0 * sigma2));
}

double squared_distance(const SparseVector& x, const SparseVector& y) {
  return std::max(0.0, x.squared_norm() + y.squared_norm() - 2.0 * dot(x, y));
}

double squared_distance(const SparseVector& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                        double y_squared_norm) {
  return std::max(0.0, x.squared_norm() + y_squared_norm - 2.0 * dot(x, y));
}

double gaussian_kernel(const SparseVector& x, const SparseVector& y,
                       const GaussianKernelParams& params) {
  return params(squared_distance(x, y));
}

GaussianKernelParams bandwidth_heuristic(const Dataset& data, std::size_t cap) {
  const std::size_t m = std::min(data.size(), cap);
  if (m < 2) throw DataError("bandwidth heuristic needs at least 2 instances");

  // Per-feature sum of squared deviations; implicit zeros contribute mean^2.
  std::vector<double> mean(data.dim, 0.0);
  std::vector<std::size_t> nnz(data.dim, 0);
  double norms = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& e : data.rows[i].entries()) {
      mean[e.index] += e.value;
      ++nnz[e.index];
    }
    norms += data.rows[i].squared_norm();
  }
  for (auto& v : mean) v /= static_cast<double>(m);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& e : data.rows[i].entries()) {
      const double c = e.value - mean[e.index];
      total += c * c;
    }
  }
  for (std::size_t f = 0; f < data.dim; ++f) {
    total += static_cast<double>(m - nnz[f]) * mean[f] * mean[f];
  }
  const double sigma2 = total / static_cast<double>(m);
  if (!(sigma2 > 1e-12 * (norms / static_cast<double>(m)))) {
    throw DataError("bandwidth heuristic: the first " + std::to_string(m) +
                    " instances are identical; pass --sigma2 or --gamma explicitly");
  }
  return GaussianKernelParams{sigma2};
}

Eigen::MatrixXd kernel_matrix(std::span<const SparseVector> rows_a,
                              std::span<const SparseVector> rows_b,
                              const GaussianKernelParams& params) {
  const auto na = static_cast<Eigen::Index>(rows_a.size());
  const auto nb = static_cast<Eigen::Index>(rows_b.size());
  Eigen::MatrixXd k(na, nb);
  for (Eigen::Index i = 0; i < na; ++i) {
    for (Eigen::Index j = 0; j < nb; ++j) {
      k(i, j) = gaussian_kernel(rows_a[static_cast<std::size_t>(i)],
                                rows_b[static_cast<std::size_t>(j)], params);
    }
  }
  return k;
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& rows_a, const Eigen::MatrixXd& rows_b,
                              const GaussianKernelParams& params) {
  if (rows_a.cols() != rows_b.cols()) {
    throw DataError("kernel_matrix: dimension mismatch (" + std::to_string(rows_a.cols()) +
                    " vs " + std::to_string(rows_b.cols()) + ")");
  }
  // Direct differences: exact zeros on coincident rows and no cancellation.
  Eigen::MatrixXd k(rows_a.rows(), rows_b.rows());
  for (Eigen::Index i = 0; i < rows_a.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows_b.rows(); ++j) {
      double d2 = 0.0;
      for (Eigen::Index f = 0; f < rows_a.cols(); ++f) {
        const double diff = rows_a(i, f) - rows_b(j, f);
        d2 += diff * diff;
      }
      k(i, j) = params(d2);
    }
  }
  return k;
}

}  // namespace nlauc
