// Command-line driver for nonlinear AUC maximization.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlauc/auc.hpp"
#include "nlauc/dataio.hpp"
#include "nlauc/embedding.hpp"
#include "nlauc/error.hpp"
#include "nlauc/model.hpp"
#include "nlauc/pipeline.hpp"

namespace {

using namespace nlauc;

struct DataOptions {
  std::string data;
  std::string test_data;
  std::optional<double> test_fraction;
  std::uint64_t seed = 1;
  std::string positive_labels;
  std::optional<std::size_t> dim;
};

void add_data_options(CLI::App* cmd, DataOptions& o, bool with_test) {
  cmd->add_option("--data", o.data, "Training data in LibSVM format")->required()->check(CLI::ExistingFile);
  if (with_test) {
    auto* td = cmd->add_option("--test-data", o.test_data, "Held-out data in LibSVM format")
                   ->check(CLI::ExistingFile);
    cmd->add_option("--test-fraction", o.test_fraction, "Hold out this fraction of --data instead")
        ->excludes(td);
  }
  cmd->add_option("--seed", o.seed, "Seed for splitting, k-means and sampling")->capture_default_str();
  cmd->add_option("--positive-labels", o.positive_labels,
                  "Comma-separated class ids grouped as positive (multiclass data)");
  cmd->add_option("--dim", o.dim, "Force the input feature count");
}

void add_embedding_options(CLI::App* cmd, EmbeddingConfig& e) {
  cmd->add_option("--embedding", e.kind, "Feature map")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, EmbeddingKind>{{"nystroem", EmbeddingKind::nystroem}, {"rff", EmbeddingKind::rff}}))
      ->default_str("nystroem");
  cmd->add_option("--landmarks", e.landmarks, "Landmark count (or random features for rff)")->capture_default_str();
  cmd->add_option("--rank", e.rank, "Cap on the Nystroem rank (default: all retained eigenpairs)");
  cmd->add_option("--kmeans-iters", e.kmeans_iters, "Maximum Lloyd iterations")->capture_default_str();
  auto* s2 = cmd->add_option("--sigma2", e.sigma2, "Gaussian bandwidth: k = exp(-|x-y|^2 / (2 sigma2))");
  auto* g = cmd->add_option("--gamma", e.gamma, "Gaussian width: k = exp(-gamma |x-y|^2)");
  s2->excludes(g);
  g->excludes(s2);
  cmd->add_option("--bandwidth-cap", e.bandwidth_cap, "Rows used by the bandwidth heuristic")->capture_default_str();
  cmd->add_option("--eig-drop", e.eig_drop, "Relative eigenvalue cutoff for W")->capture_default_str();
}

std::set<int> parse_label_set(const std::string& text) {
  std::set<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      out.insert(std::stoi(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--positive-labels: '" + item + "' is not an integer");
    }
  }
  if (out.empty()) throw UsageError("--positive-labels is empty");
  return out;
}

Dataset read_data(const std::string& path, const DataOptions& o, std::optional<std::size_t> dim) {
  ParseOptions p;
  p.dim = dim ? dim : o.dim;
  if (o.positive_labels.empty()) return load_libsvm(path, p);
  p.labels = LabelMode::multiclass;
  return group_binary(load_libsvm(path, p), parse_label_set(o.positive_labels));
}

struct Splits {
  Dataset train;
  std::optional<Dataset> test;
};

Splits load_splits(const DataOptions& o) {
  Splits s;
  s.train = read_data(o.data, o, std::nullopt);
  if (!o.test_data.empty()) {
    Dataset test = read_data(o.test_data, o, std::nullopt);
    const std::size_t dim = std::max(s.train.dim, test.dim);
    s.train.dim = dim;
    test.dim = dim;
    s.test = std::move(test);
  } else if (o.test_fraction) {
    auto [tr, te] = split(s.train, *o.test_fraction, o.seed);
    s.train = std::move(tr);
    s.test = std::move(te);
  }
  return s;
}

std::string canonical_labels(const std::string& text) {
  if (text.empty()) return {};
  std::string out;
  for (int y : parse_label_set(text)) out += (out.empty() ? "" : ",") + std::to_string(y);
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

int run_train(const DataOptions& d, EmbeddingConfig e, const SolverConfig& solver, const std::string& model_path,
              const std::string& curve_path) {
  e.seed = d.seed;
  e.validate();
  validate(solver);
  Splits s = load_splits(d);

  std::vector<CurvePoint> curve;
  std::optional<FittedEmbedding> for_curve;
  std::optional<EmbeddedDataset> test_embedded;
  EpochCallback on_epoch;
  if (!curve_path.empty()) {
    // The curve needs the embedded test set while training runs, so the
    // embedding is fitted up front; fit_embedding is deterministic and the
    // pipeline refits the identical map.
    for_curve = fit_embedding(s.train, e);
    if (s.test) test_embedded = for_curve->apply(*s.test);
    auto train_embedded = std::make_shared<EmbeddedDataset>(for_curve->apply(s.train));
    on_epoch = [&, train_embedded](std::size_t epoch, const Eigen::VectorXd& w, double elapsed) {
      CurvePoint p;
      p.epoch = epoch;
      p.train_auc = auc(train_embedded->features * w, train_embedded->labels).auc;
      if (test_embedded) p.test_auc = auc(test_embedded->features * w, test_embedded->labels).auc;
      p.elapsed_seconds = elapsed;
      curve.push_back(p);
    };
  }

  TrainOutcome out = train_pipeline(s.train, e, solver, on_epoch);
  out.model.positive_labels = canonical_labels(d.positive_labels);
  save_model(model_path, out.model);

  std::cout << std::fixed << std::setprecision(6);
  std::cout << "train_auc " << out.train_auc << '\n';
  if (s.test) {
    const Eigen::VectorXd scores = out.model.predict(*s.test);
    require_both_classes(*s.test, "test data");
    std::cout << "test_auc " << auc(scores, s.test->labels).auc << '\n';
  }
  std::cout << "embedding_seconds " << out.embed_seconds << '\n';
  std::cout << "training_seconds " << out.train_seconds << '\n';
  std::cout << "embedding_dim " << output_dim(out.model.embedding) << '\n';

  if (!curve_path.empty()) {
    auto f = open_out(curve_path);
    write_curve_csv(f, curve);
  }
  return 0;
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("not a number: '" + item + "'");
    }
  }
  return out;
}

std::vector<double> read_numbers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw DataError(path + ": not a number: '" + tok + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear AUC maximization with k-means Nystroem embeddings"};
  app.require_subcommand(1);

  DataOptions data;
  EmbeddingConfig emb;
  BatchConfig batch;
  SgdConfig sgd;
  std::string model_path;
  std::string output_path;
  std::string curve_path;

  auto add_batch_options = [&](CLI::App* cmd) {
    cmd->add_option("--c", batch.C, "Regularization trade-off C")->capture_default_str();
    cmd->add_option("--grad-tol", batch.grad_tol, "Gradient-norm stopping threshold");
    cmd->add_option("--max-outer", batch.max_outer, "Maximum Newton iterations")->capture_default_str();
    cmd->add_option("--cg-tol", batch.cg_tol, "Relative CG residual tolerance")->capture_default_str();
    cmd->add_option("--cg-max", batch.cg_max, "Maximum CG iterations per Newton step")->capture_default_str();
  };
  bool no_averaging = false;
  auto add_sgd_options = [&](CLI::App* cmd) {
    cmd->add_option("--lambda", sgd.lambda, "Regularization / step-size scale")->capture_default_str();
    cmd->add_option("--t0", sgd.t0, "Step-size offset")->capture_default_str();
    cmd->add_option("--epochs", sgd.epochs, "Passes; one epoch is n iterations")->capture_default_str();
    cmd->add_option("--rskip", sgd.rskip, "Iterations between regularization updates")->capture_default_str();
    cmd->add_option("--askip", sgd.askip, "Iterations between averaging captures")->capture_default_str();
    cmd->add_flag("--no-averaging", no_averaging, "Return the last iterate instead of the average");
  };

  auto* train_batch_cmd = app.add_subcommand("train-batch", "Embed and train with the truncated-Newton solver");
  add_data_options(train_batch_cmd, data, true);
  add_embedding_options(train_batch_cmd, emb);
  add_batch_options(train_batch_cmd);
  train_batch_cmd->add_option("--model", model_path, "Output model file")->required();

  auto* train_sgd_cmd = app.add_subcommand("train-sgd", "Embed and train with the averaged stochastic solver");
  add_data_options(train_sgd_cmd, data, true);
  add_embedding_options(train_sgd_cmd, emb);
  add_sgd_options(train_sgd_cmd);
  train_sgd_cmd->add_option("--model", model_path, "Output model file")->required();
  train_sgd_cmd->add_option("--curve", curve_path, "Per-epoch CSV: epoch,train_auc,test_auc,elapsed_seconds");

  auto* predict_cmd = app.add_subcommand("predict", "Score data with a saved model");
  predict_cmd->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--data", data.data, "LibSVM data to score")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--output", output_path, "Scores file (default: stdout)");

  std::string scores_path;
  std::string labels_path;
  bool strict = false;
  auto* eval_cmd = app.add_subcommand("eval-auc", "AUC of a score file against a label file");
  eval_cmd->add_option("--scores", scores_path, "One score per line")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--labels", labels_path, "One label per line")->required()->check(CLI::ExistingFile);
  eval_cmd->add_flag("--strict", strict, "Count tied pairs as losses");

  std::string solver_name = "batch";
  std::string grid_text;
  std::size_t folds = 3;
  auto* grid_cmd = app.add_subcommand("gridsearch", "Stratified k-fold search over C or lambda");
  add_data_options(grid_cmd, data, false);
  add_embedding_options(grid_cmd, emb);
  add_batch_options(grid_cmd);
  add_sgd_options(grid_cmd);
  grid_cmd->add_option("--solver", solver_name, "batch (searches C) or sgd (searches lambda)")
      ->check(CLI::IsMember({"batch", "sgd"}))
      ->capture_default_str();
  grid_cmd->add_option("--grid", grid_text, "Comma-separated values (default: 2^-15..2^10 or 1e-10..1e-7)");
  grid_cmd->add_option("--folds", folds, "Number of folds")->capture_default_str();
  grid_cmd->add_option("--report", output_path, "CSV report path")->required();

  std::string epochs_text;
  std::size_t seed_count = 10;
  auto* conv_cmd = app.add_subcommand("convergence", "Test AUC versus epochs, averaged and non-averaged");
  add_data_options(conv_cmd, data, true);
  add_embedding_options(conv_cmd, emb);
  add_sgd_options(conv_cmd);
  conv_cmd->add_option("--epochs-grid", epochs_text, "Comma-separated epoch counts (default 1..400 grid)");
  conv_cmd->add_option("--seeds", seed_count, "Number of sampling seeds, starting at --seed")->capture_default_str();
  conv_cmd->add_option("--output", output_path, "CSV output path")->required();

  auto* kmeans_cmd = app.add_subcommand("kmeans", "Write k-means landmarks of the standardized data as CSV");
  add_data_options(kmeans_cmd, data, false);
  kmeans_cmd->add_option("--landmarks", emb.landmarks, "Number of centroids")->capture_default_str();
  kmeans_cmd->add_option("--kmeans-iters", emb.kmeans_iters, "Maximum Lloyd iterations")->capture_default_str();
  kmeans_cmd->add_option("--output", output_path, "CSV output path")->required();

  std::string map_path;
  auto* embed_cmd = app.add_subcommand("embed", "Fit an embedding and write the embedded data as LibSVM");
  add_data_options(embed_cmd, data, false);
  add_embedding_options(embed_cmd, emb);
  embed_cmd->add_option("--output", output_path, "Embedded LibSVM output path")->required();
  embed_cmd->add_option("--save-map", map_path, "Also write the standardizer and feature map as a model file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    sgd.averaging = !no_averaging;
    sgd.seed = data.seed;

    if (*train_batch_cmd) return run_train(data, emb, batch, model_path, "");
    if (*train_sgd_cmd) return run_train(data, emb, sgd, model_path, curve_path);

    if (*predict_cmd) {
      const ModelFile model = load_model(model_path);
      ParseOptions p;
      p.labels = LabelMode::multiclass;
      p.dim = model.standardizer.dim();
      const Eigen::VectorXd scores = model.predict(load_libsvm(data.data, p));
      std::ofstream file;
      if (!output_path.empty()) file = open_out(output_path);
      std::ostream& out = output_path.empty() ? std::cout : file;
      for (Eigen::Index i = 0; i < scores.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", scores[i]);
        out << buf << '\n';
      }
      return 0;
    }

    if (*eval_cmd) {
      const std::vector<double> scores = read_numbers(scores_path);
      const std::vector<double> raw = read_numbers(labels_path);
      // Same label convention as binary LibSVM files.
      std::ostringstream as_libsvm;
      for (double y : raw) as_libsvm << y << '\n';
      const Dataset labels = parse_libsvm(as_libsvm.str());
      const AucResult r = auc(scores, labels.labels, strict ? TiePolicy::strict : TiePolicy::half);
      std::cout << std::fixed << std::setprecision(6) << r.auc << '\n';
      return 0;
    }

    if (*grid_cmd) {
      emb.seed = data.seed;
      const Dataset train = read_data(data.data, data, std::nullopt);
      const bool use_batch = solver_name == "batch";
      std::vector<double> grid = grid_text.empty() ? (use_batch ? default_c_grid() : default_lambda_grid())
                                                   : parse_real_list(grid_text);
      const SolverConfig base = use_batch ? SolverConfig(batch) : SolverConfig(sgd);
      const CvReport report = cross_validate(train, emb, base, grid, folds, data.seed);
      auto f = open_out(output_path);
      write_cv_csv(f, report);
      std::cout << "selected " << report.selected << " mean_auc " << std::fixed << std::setprecision(6)
                << report.selected_mean_auc << '\n';
      return 0;
    }

    if (*conv_cmd) {
      emb.seed = data.seed;
      if (data.test_data.empty() && !data.test_fraction) data.test_fraction = 0.2;
      const Splits s = load_splits(data);
      require_both_classes(s.train, "training data");
      require_both_classes(*s.test, "test data");
      const FittedEmbedding fitted = fit_embedding(s.train, emb);
      std::vector<std::size_t> epochs;
      if (epochs_text.empty()) {
        epochs = default_epoch_grid();
      } else {
        for (double e : parse_real_list(epochs_text)) {
          if (!(e >= 1) || e != static_cast<double>(static_cast<std::size_t>(e))) {
            throw UsageError("epoch counts must be positive integers");
          }
          epochs.push_back(static_cast<std::size_t>(e));
        }
      }
      std::vector<std::uint64_t> seeds;
      for (std::size_t k = 0; k < seed_count; ++k) seeds.push_back(data.seed + k);
      const auto rows = convergence_study(fitted.apply(s.train), fitted.apply(*s.test), sgd, epochs, seeds);
      auto f = open_out(output_path);
      write_convergence_csv(f, rows);
      return 0;
    }

    if (*kmeans_cmd) {
      const Dataset train = read_data(data.data, data, std::nullopt);
      const Dataset scaled = standardize_apply(standardize_fit(train), train);
      const LandmarkSet lm = kmeans(scaled, emb.landmarks, emb.kmeans_iters, data.seed);
      auto f = open_out(output_path);
      for (std::size_t j = 0; j < lm.dim(); ++j) f << (j ? "," : "") << 'f' << (j + 1);
      f << '\n';
      for (Eigen::Index i = 0; i < lm.centroids.rows(); ++i) {
        for (Eigen::Index j = 0; j < lm.centroids.cols(); ++j) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.17g", lm.centroids(i, j));
          f << (j ? "," : "") << buf;
        }
        f << '\n';
      }
      std::cout << "iterations " << lm.iterations << " objective " << lm.objective_trace.back() << '\n';
      return 0;
    }

    if (*embed_cmd) {
      emb.seed = data.seed;
      const Dataset train = read_data(data.data, data, std::nullopt);
      const FittedEmbedding fitted = fit_embedding(train, emb);
      const Eigen::MatrixXd features = embed_features(fitted.map, standardize_apply(fitted.standardizer, train));
      Dataset out;
      out.dim = static_cast<std::size_t>(features.cols());
      out.labels = train.labels;
      for (Eigen::Index i = 0; i < features.rows(); ++i) {
        const Eigen::VectorXd row = features.row(i).transpose();
        out.rows.push_back(SparseVector::from_dense(std::span<const double>(row.data(), row.size())));
      }
      auto f = open_out(output_path);
      write_libsvm(f, out);
      if (!map_path.empty()) {
        ModelFile m;
        m.positive_labels = canonical_labels(data.positive_labels);
        m.standardizer = fitted.standardizer;
        m.embedding = fitted.map;
        save_model(map_path, m);
      }
      return 0;
    }
  } catch (const nlauc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
