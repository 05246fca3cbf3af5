#include "nlauc/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "nlauc/error.hpp"
#include "nlauc/random.hpp"

namespace nlauc {

SparseVector::SparseVector(std::vector<SparseEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    if (!std::isfinite(entries_[k].value)) {
      throw DataError("sparse vector has a non-finite value at feature " +
                      std::to_string(entries_[k].index));
    }
    if (k > 0 && entries_[k].index <= entries_[k - 1].index) {
      throw DataError("sparse vector indices must be strictly increasing");
    }
  }
  // Same accumulation order as dot(a, a) so that ||x||^2 - 2<x,x> + ||x||^2 == 0.
  double s = 0.0;
  for (const auto& e : entries_) s += e.value * e.value;
  squared_norm_ = s;
}

SparseVector SparseVector::from_dense(std::span<const double> values) {
  std::vector<SparseEntry> entries;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] != 0.0) entries.push_back({i, values[i]});
  }
  return SparseVector(std::move(entries));
}

Eigen::VectorXd SparseVector::to_dense(std::size_t dim) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  for (const auto& e : entries_) {
    if (e.index >= dim) throw DataError("feature index out of range in to_dense");
    out[static_cast<Eigen::Index>(e.index)] = e.value;
  }
  return out;
}

bool operator==(const SparseVector& a, const SparseVector& b) {
  return std::equal(a.entries_.begin(), a.entries_.end(), b.entries_.begin(), b.entries_.end(),
                    [](const SparseEntry& x, const SparseEntry& y) {
                      return x.index == y.index && x.value == y.value;
                    });
}

double dot(const SparseVector& a, const SparseVector& b) {
  auto ia = a.entries().begin();
  auto ib = b.entries().begin();
  const auto ea = a.entries().end();
  const auto eb = b.entries().end();
  double s = 0.0;
  while (ia != ea && ib != eb) {
    if (ia->index < ib->index) {
      ++ia;
    } else if (ib->index < ia->index) {
      ++ib;
    } else {
      s += ia->value * ib->value;
      ++ia;
      ++ib;
    }
  }
  return s;
}

double dot(const SparseVector& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  double s = 0.0;
  for (const auto& e : a.entries()) {
    if (e.index >= static_cast<std::size_t>(b.size())) {
      throw DataError("feature index " + std::to_string(e.index) + " outside dimension " +
                      std::to_string(b.size()));
    }
    s += e.value * b[static_cast<Eigen::Index>(e.index)];
  }
  return s;
}

std::size_t Dataset::n_pos() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

std::size_t Dataset::n_neg() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), -1));
}

bool Dataset::is_binary() const {
  return std::all_of(labels.begin(), labels.end(), [](int y) { return y == 1 || y == -1; });
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.dim = dim;
  out.rows.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (auto i : indices) {
    out.rows.push_back(rows.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

void require_both_classes(const Dataset& data, const std::string& context) {
  if (!data.is_binary()) {
    throw DataError(context + ": labels must be binary (-1/+1); use --positive-labels to group classes");
  }
  if (data.n_pos() == 0 || data.n_neg() == 0) {
    throw DataError(context + ": need at least one positive and one negative instance (have " +
                    std::to_string(data.n_pos()) + " positive, " + std::to_string(data.n_neg()) +
                    " negative)");
  }
}

namespace {

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw DataError("libsvm parse error at line " + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view token, std::size_t line) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) {
    parse_error(line, "non-numeric value '" + std::string(token) + "'");
  }
  if (!std::isfinite(value)) parse_error(line, "non-finite value '" + std::string(token) + "'");
  return value;
}

std::size_t parse_index(std::string_view token, std::size_t line) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
    parse_error(line, "malformed feature index '" + std::string(token) + "'");
  }
  if (value == 0) parse_error(line, "feature indices are 1-based, got 0");
  return value;
}

int parse_label(std::string_view token, std::size_t line) {
  const double v = parse_double(token, line);
  if (v != std::floor(v) || std::fabs(v) > 1e9) {
    parse_error(line, "label '" + std::string(token) + "' is not an integer class id");
  }
  return static_cast<int>(v);
}

}  // namespace

Dataset parse_libsvm(std::istream& in, const ParseOptions& options) {
  Dataset data;
  std::vector<std::size_t> label_lines;
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_extent = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream tokens(line);
    std::string token;
    if (!(tokens >> token)) continue;
    const int label = parse_label(token, line_no);

    std::vector<SparseEntry> entries;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) parse_error(line_no, "expected <index>:<value>, got '" + token + "'");
      const std::string_view view(token);
      const std::size_t index = parse_index(view.substr(0, colon), line_no);
      const double value = parse_double(view.substr(colon + 1), line_no);
      if (!entries.empty() && index - 1 <= entries.back().index) {
        parse_error(line_no, "feature indices must be strictly increasing");
      }
      entries.push_back({index - 1, value});
    }
    // Explicit zeros are dropped so equality is structural.
    std::erase_if(entries, [](const SparseEntry& e) { return e.value == 0.0; });
    SparseVector row(std::move(entries));
    max_extent = std::max(max_extent, row.extent());
    data.rows.push_back(std::move(row));
    data.labels.push_back(label);
    label_lines.push_back(line_no);
  }

  if (options.dim) {
    if (max_extent > *options.dim) {
      throw DataError("feature index " + std::to_string(max_extent) + " exceeds declared dimension " +
                      std::to_string(*options.dim));
    }
    data.dim = *options.dim;
  } else {
    data.dim = max_extent;
  }

  if (options.labels == LabelMode::binary) {
    std::set<int> seen;
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
      seen.insert(data.labels[i]);
      if (seen.size() > 2) {
        parse_error(label_lines[i], "label " + std::to_string(data.labels[i]) +
                                        " makes a third class in a binary file");
      }
    }
    std::map<int, int> remap;
    const bool signed_pm = std::all_of(seen.begin(), seen.end(), [](int y) { return y == 1 || y == -1; });
    const bool zero_one = std::all_of(seen.begin(), seen.end(), [](int y) { return y == 0 || y == 1; });
    if (signed_pm) {
      for (int y : seen) remap[y] = y;
    } else if (zero_one) {
      remap[0] = -1;
      remap[1] = 1;
    } else if (seen.size() == 2) {
      remap[*seen.begin()] = -1;
      remap[*seen.rbegin()] = 1;
    } else {
      parse_error(label_lines.front(), "cannot map single label " + std::to_string(*seen.begin()) +
                                           " to a binary class");
    }
    for (auto& y : data.labels) y = remap.at(y);
  }
  return data;
}

Dataset parse_libsvm(const std::string& text, const ParseOptions& options) {
  std::istringstream in(text);
  return parse_libsvm(in, options);
}

Dataset load_libsvm(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  try {
    return parse_libsvm(in, options);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << (data.labels[i] > 0 ? "+" : "") << data.labels[i];
    for (const auto& e : data.rows[i].entries()) out << ' ' << (e.index + 1) << ':' << e.value;
    out << '\n';
  }
  out.precision(old_precision);
}

Dataset group_binary(const Dataset& data, const std::set<int>& positive_labels) {
  Dataset out = data;
  for (auto& y : out.labels) y = positive_labels.contains(y) ? 1 : -1;
  if (out.n_pos() == 0) throw DataError("grouping produced no positive instances");
  if (out.n_neg() == 0) throw DataError("grouping produced no negative instances");
  return out;
}

SparseVector Standardizer::apply(const SparseVector& row) const {
  // Zeros shift to -mean/stdev, so the result is dense in general.
  std::vector<SparseEntry> out;
  out.reserve(mean.size());
  auto it = row.entries().begin();
  const auto end = row.entries().end();
  for (std::size_t f = 0; f < mean.size(); ++f) {
    double x = 0.0;
    if (it != end && it->index == f) {
      x = it->value;
      ++it;
    }
    const double z = (x - mean[f]) / stdev[f];
    if (z != 0.0) out.push_back({f, z});
  }
  if (it != end) {
    throw DataError("row has feature " + std::to_string(it->index + 1) +
                    " beyond the standardizer dimension " + std::to_string(mean.size()));
  }
  return SparseVector(std::move(out));
}

Standardizer standardize_fit(const Dataset& data) {
  if (data.size() == 0) throw DataError("standardize: dataset is empty");
  const std::size_t d = data.dim;
  const double n = static_cast<double>(data.size());
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.stdev.assign(d, 0.0);
  std::vector<std::size_t> nnz(d, 0);
  for (const auto& row : data.rows) {
    for (const auto& e : row.entries()) {
      s.mean[e.index] += e.value;
      ++nnz[e.index];
    }
  }
  for (auto& m : s.mean) m /= n;
  // Two-pass variance; implicit zeros contribute (0 - mean)^2 each.
  std::vector<double> ss(d, 0.0);
  for (const auto& row : data.rows) {
    for (const auto& e : row.entries()) {
      const double c = e.value - s.mean[e.index];
      ss[e.index] += c * c;
    }
  }
  for (std::size_t f = 0; f < d; ++f) {
    ss[f] += static_cast<double>(data.size() - nnz[f]) * s.mean[f] * s.mean[f];
    const double sd = std::sqrt(ss[f] / n);
    s.stdev[f] = (sd > 0.0 && std::isfinite(sd)) ? sd : 1.0;
  }
  return s;
}

Dataset standardize_apply(const Standardizer& s, const Dataset& data) {
  if (data.dim != s.dim()) {
    throw DataError("standardizer expects dimension " + std::to_string(s.dim()) + ", data has " +
                    std::to_string(data.dim));
  }
  Dataset out;
  out.dim = data.dim;
  out.labels = data.labels;
  out.rows.reserve(data.size());
  for (const auto& row : data.rows) out.rows.push_back(s.apply(row));
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw UsageError("test fraction must lie in (0, 1)");
  }
  const std::size_t n = data.size();
  if (n < 2) throw DataError("split needs at least 2 instances");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  shuffle(std::span(order), rng);
  auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * (1.0 - test_fraction)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {data.subset(train), data.subset(test)};
}

std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw UsageError("cross validation needs at least 2 folds");
  std::vector<std::size_t> fold(data.size(), 0);
  Rng rng(seed);
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);
  // Deal each shuffled class round-robin, continuing the rotation across classes.
  std::size_t next = 0;
  for (auto& [label, members] : by_class) {
    shuffle(std::span(members), rng);
    for (auto i : members) {
      fold[i] = next;
      next = (next + 1) % k;
    }
  }
  return fold;
}

}  // namespace nlauc
