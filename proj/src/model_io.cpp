#include "nlauc/model.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "nlauc/error.hpp"

namespace nlauc {

namespace {

constexpr const char* kMagic = "nlauc-model";
constexpr int kVersion = 1;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class Vec>
void write_row(std::ostream& out, const Vec& v) {
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(v.size()); ++i) {
    if (i > 0) out << ' ';
    out << fmt(v[i]);
  }
  out << '\n';
}

void write_matrix(std::ostream& out, const char* name, const Eigen::MatrixXd& m) {
  out << name << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) write_row(out, m.row(i));
}

void write_embedding(std::ostream& out, const NystroemMap& map) {
  out << "[nystroem]\n";
  out << "v " << map.landmark_count() << '\n';
  out << "r " << map.rank() << '\n';
  out << "d " << map.input_dim() << '\n';
  out << "sigma2 " << fmt(map.kernel().sigma2) << '\n';
  out << "seed " << map.seed() << '\n';
  write_matrix(out, "centroids", map.landmarks());
  write_matrix(out, "projection", map.projection());
  out << "eigenvalues\n";
  write_row(out, map.eigenvalues());
}

void write_embedding(std::ostream& out, const RffMap& map) {
  out << "[rff]\n";
  out << "D " << map.output_dim() << '\n';
  out << "d " << map.input_dim() << '\n';
  out << "sigma2 " << fmt(map.kernel().sigma2) << '\n';
  out << "seed " << map.seed() << '\n';
  write_matrix(out, "frequencies", map.frequencies());
  out << "phases\n";
  write_row(out, map.phases());
}

// Whitespace tokenizer with line-independent reads.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string t;
    if (!(in_ >> t)) fail("unexpected end of file");
    return t;
  }
  void expect(const std::string& want) {
    const std::string got = word();
    if (got != want) fail("expected '" + want + "', found '" + got + "'");
  }
  double real() {
    const std::string t = word();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) fail("bad number '" + t + "'");
    return v;
  }
  std::uint64_t count() {
    const std::string t = word();
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) fail("bad count '" + t + "'");
    return v;
  }
  std::uint64_t keyed_count(const std::string& key) {
    expect(key);
    return count();
  }
  double keyed_real(const std::string& key) {
    expect(key);
    return real();
  }
  Eigen::MatrixXd matrix(const std::string& name, std::uint64_t rows, std::uint64_t cols) {
    expect(name);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = real();
    return m;
  }
  Eigen::VectorXd vector(const std::string& name, std::uint64_t len) {
    expect(name);
    Eigen::VectorXd v(static_cast<Eigen::Index>(len));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = real();
    return v;
  }
  [[noreturn]] void fail(const std::string& what) { throw DataError("model file: " + what); }

 private:
  std::istream& in_;
};

NystroemMap read_nystroem(Reader& r) {
  const auto v = r.keyed_count("v");
  const auto rank = r.keyed_count("r");
  const auto d = r.keyed_count("d");
  const double sigma2 = r.keyed_real("sigma2");
  const auto seed = r.keyed_count("seed");
  Eigen::MatrixXd centroids = r.matrix("centroids", v, d);
  Eigen::MatrixXd projection = r.matrix("projection", rank, v);
  Eigen::VectorXd eig = r.vector("eigenvalues", rank);
  return NystroemMap(std::move(centroids), GaussianKernelParams::from_sigma2(sigma2), std::move(projection),
                     std::move(eig), seed);
}

RffMap read_rff(Reader& r) {
  const auto features = r.keyed_count("D");
  const auto d = r.keyed_count("d");
  const double sigma2 = r.keyed_real("sigma2");
  const auto seed = r.keyed_count("seed");
  Eigen::MatrixXd freq = r.matrix("frequencies", features, d);
  Eigen::VectorXd phases = r.vector("phases", features);
  return RffMap(std::move(freq), std::move(phases), GaussianKernelParams::from_sigma2(sigma2), seed);
}

}  // namespace

const char* to_string(Trainer t) { return t == Trainer::batch ? "batch" : "sgd"; }

Eigen::VectorXd LinearModel::score(const EmbeddedDataset& data) const {
  if (w.size() != data.dim()) {
    throw DataError("model has " + std::to_string(w.size()) + " weights, embedding has dimension " +
                    std::to_string(data.dim()));
  }
  return data.features * w;
}

Eigen::VectorXd ModelFile::predict(const Dataset& data) const {
  if (!linear) throw DataError("model file has no trained weights");
  if (data.dim != standardizer.dim()) {
    throw DataError("model expects " + std::to_string(standardizer.dim()) + " input features, data has " +
                    std::to_string(data.dim));
  }
  const Eigen::MatrixXd features = embed_features(embedding, standardize_apply(standardizer, data));
  if (features.cols() != linear->w.size()) throw DataError("model weights do not match its embedding");
  return features * linear->w;
}

std::string embedding_digest(const FeatureMap& map) {
  std::ostringstream text;
  std::visit([&](const auto& m) { write_embedding(text, m); }, map);
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text.str()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_model(std::ostream& out, const ModelFile& model) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "positive_labels " << (model.positive_labels.empty() ? "-" : model.positive_labels) << '\n';
  out << "[standardizer]\n";
  out << "dim " << model.standardizer.dim() << '\n';
  out << "mean\n";
  write_row(out, model.standardizer.mean);
  out << "stdev\n";
  write_row(out, model.standardizer.stdev);
  std::visit([&](const auto& m) { write_embedding(out, m); }, model.embedding);
  if (model.linear) {
    const LinearModel& lin = *model.linear;
    const TrainingRecord& rec = lin.record;
    out << "[linear]\n";
    out << "r " << lin.w.size() << '\n';
    out << "trained_by " << to_string(lin.trained_by) << '\n';
    out << "embedding_id " << lin.embedding_id << '\n';
    out << "seed " << rec.seed << '\n';
    out << "C " << (rec.C ? fmt(*rec.C) : "-") << '\n';
    out << "lambda " << (rec.lambda ? fmt(*rec.lambda) : "-") << '\n';
    out << "t0 " << (rec.t0 ? fmt(*rec.t0) : "-") << '\n';
    out << "epochs " << (rec.epochs ? std::to_string(*rec.epochs) : "-") << '\n';
    out << "rskip " << (rec.rskip ? std::to_string(*rec.rskip) : "-") << '\n';
    out << "askip " << (rec.askip ? std::to_string(*rec.askip) : "-") << '\n';
    out << "averaging " << (rec.averaging ? (*rec.averaging ? "1" : "0") : "-") << '\n';
    out << "w\n";
    write_row(out, lin.w);
  }
  out << "end\n";
}

ModelFile read_model(std::istream& in) {
  Reader r(in);
  r.expect(kMagic);
  if (r.count() != kVersion) r.fail("unsupported version");
  ModelFile model;
  r.expect("positive_labels");
  model.positive_labels = r.word();
  if (model.positive_labels == "-") model.positive_labels.clear();

  r.expect("[standardizer]");
  const auto dim = r.keyed_count("dim");
  const Eigen::VectorXd mean = r.vector("mean", dim);
  const Eigen::VectorXd stdev = r.vector("stdev", dim);
  model.standardizer.mean.assign(mean.data(), mean.data() + mean.size());
  model.standardizer.stdev.assign(stdev.data(), stdev.data() + stdev.size());

  const std::string section = r.word();
  if (section == "[nystroem]") {
    model.embedding = read_nystroem(r);
  } else if (section == "[rff]") {
    model.embedding = read_rff(r);
  } else {
    r.fail("unknown embedding section '" + section + "'");
  }
  if (input_dim(model.embedding) != dim) r.fail("embedding input dimension disagrees with standardizer");

  const std::string next = r.word();
  if (next == "[linear]") {
    LinearModel lin;
    const auto rank = r.keyed_count("r");
    r.expect("trained_by");
    const std::string by = r.word();
    if (by == "batch") {
      lin.trained_by = Trainer::batch;
    } else if (by == "sgd") {
      lin.trained_by = Trainer::sgd;
    } else {
      r.fail("unknown trainer '" + by + "'");
    }
    r.expect("embedding_id");
    lin.embedding_id = r.word();
    lin.record.seed = r.keyed_count("seed");
    auto opt_real = [&](const char* key) -> std::optional<double> {
      r.expect(key);
      const std::string t = r.word();
      if (t == "-") return std::nullopt;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || ptr != t.data() + t.size()) r.fail("bad number '" + t + "'");
      return v;
    };
    auto opt_count = [&](const char* key) -> std::optional<std::uint64_t> {
      r.expect(key);
      const std::string t = r.word();
      if (t == "-") return std::nullopt;
      std::uint64_t v = 0;
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || ptr != t.data() + t.size()) r.fail("bad count '" + t + "'");
      return v;
    };
    lin.record.C = opt_real("C");
    lin.record.lambda = opt_real("lambda");
    lin.record.t0 = opt_real("t0");
    lin.record.epochs = opt_count("epochs");
    lin.record.rskip = opt_count("rskip");
    lin.record.askip = opt_count("askip");
    if (auto avg = opt_count("averaging")) lin.record.averaging = *avg != 0;
    lin.w = r.vector("w", rank);
    if (static_cast<std::size_t>(lin.w.size()) != output_dim(model.embedding)) {
      r.fail("weight length does not match the embedding dimension");
    }
    if (lin.embedding_id != embedding_digest(model.embedding)) {
      r.fail("embedding_id does not match the stored embedding");
    }
    model.linear = std::move(lin);
    r.expect("end");
  } else if (next != "end") {
    r.fail("unexpected section '" + next + "'");
  }
  return model;
}

void save_model(const std::string& path, const ModelFile& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file '" + path + "'");
  write_model(out, model);
  if (!out) throw DataError("error while writing model file '" + path + "'");
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  try {
    return read_model(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace nlauc
