#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "nlauc/dataio.hpp"
#include "nlauc/embedding.hpp"

namespace nlauc {

enum class Trainer { batch, sgd };

const char* to_string(Trainer t);

/// Hyperparameters a model was trained with. Fields not used by the
/// trainer stay empty.
struct TrainingRecord {
  std::optional<double> C;
  std::optional<double> lambda;
  std::optional<double> t0;
  std::optional<std::uint64_t> epochs;
  std::optional<std::uint64_t> rskip;
  std::optional<std::uint64_t> askip;
  std::optional<bool> averaging;
  std::uint64_t seed = 0;
};

/// Weight vector over an embedded space.
struct LinearModel {
  Eigen::VectorXd w;
  std::string embedding_id;  // digest of the feature map the weights belong to
  Trainer trained_by = Trainer::batch;
  TrainingRecord record;

  Eigen::VectorXd score(const EmbeddedDataset& data) const;
};

/// Everything needed to score raw inputs: scaling, embedding, weights.
struct ModelFile {
  std::string positive_labels;  // grouping used for multiclass data, empty if none
  Standardizer standardizer;
  FeatureMap embedding;
  std::optional<LinearModel> linear;

  Eigen::VectorXd predict(const Dataset& data) const;
};

/// 64-bit FNV-1a digest of the serialized feature map, as hex.
std::string embedding_digest(const FeatureMap& map);

void write_model(std::ostream& out, const ModelFile& model);
ModelFile read_model(std::istream& in);
void save_model(const std::string& path, const ModelFile& model);
ModelFile load_model(const std::string& path);

}  // namespace nlauc
