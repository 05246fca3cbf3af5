#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace nlauc {

struct SparseEntry {
  std::size_t index;  // 0-based feature id
  double value;
};

/// A sparse feature vector with strictly increasing indices and finite values.
class SparseVector {
 public:
  SparseVector() = default;
  /// Throws DataError if indices are not strictly increasing or a value is
  /// not finite.
  explicit SparseVector(std::vector<SparseEntry> entries);

  static SparseVector from_dense(std::span<const double> values);

  std::span<const SparseEntry> entries() const { return entries_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  // One past the largest stored index, 0 when empty.
  std::size_t extent() const { return entries_.empty() ? 0 : entries_.back().index + 1; }
  double squared_norm() const { return squared_norm_; }

  Eigen::VectorXd to_dense(std::size_t dim) const;

  friend bool operator==(const SparseVector& a, const SparseVector& b);

 private:
  std::vector<SparseEntry> entries_;
  double squared_norm_ = 0.0;
};

double dot(const SparseVector& a, const SparseVector& b);
double dot(const SparseVector& a, const Eigen::Ref<const Eigen::VectorXd>& b);

/// Labeled sparse rows. Binary datasets carry labels in {-1, +1}; multiclass
/// datasets keep the integer class ids from the file until group_binary.
struct Dataset {
  std::vector<SparseVector> rows;
  std::vector<int> labels;
  std::size_t dim = 0;

  std::size_t size() const { return rows.size(); }
  std::size_t n_pos() const;
  std::size_t n_neg() const;
  bool is_binary() const;

  Dataset subset(std::span<const std::size_t> indices) const;
};

// Throws DataError unless the dataset is binary with both classes present.
void require_both_classes(const Dataset& data, const std::string& context);

enum class LabelMode { binary, multiclass };

struct ParseOptions {
  LabelMode labels = LabelMode::binary;
  // Force the feature count so train and test files share a space.
  std::optional<std::size_t> dim;
};

/// Reads LibSVM text: "<label> <idx>:<val> ..." with 1-based indices.
/// In binary mode {-1,+1} labels pass through, {0,1} map 0 -> -1, and any
/// other pair of distinct labels maps the smaller one to -1.
Dataset parse_libsvm(std::istream& in, const ParseOptions& options = {});
Dataset parse_libsvm(const std::string& text, const ParseOptions& options = {});
Dataset load_libsvm(const std::string& path, const ParseOptions& options = {});

/// Writes 1-based LibSVM text with 17 significant digits per value.
void write_libsvm(std::ostream& out, const Dataset& data);

Dataset group_binary(const Dataset& data, const std::set<int>& positive_labels);

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stdev;

  std::size_t dim() const { return mean.size(); }
  SparseVector apply(const SparseVector& row) const;
};

/// Per-feature mean and population standard deviation; constant features get
/// stdev 1 so they are only centered.
Standardizer standardize_fit(const Dataset& data);
Dataset standardize_apply(const Standardizer& s, const Dataset& data);

/// Uniform random partition into (train, test). The training part has
/// round(n * (1 - test_fraction)) rows, clamped so neither side is empty.
std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction,
                                  std::uint64_t seed);

/// Class-stratified assignment of rows to k folds; returns the fold id of
/// each row.
std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t k,
                                          std::uint64_t seed);

}  // namespace nlauc
