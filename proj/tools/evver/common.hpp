#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "evver/dcs.hpp"
#include "evver/embeddings.hpp"
#include "evver/text_features.hpp"
#include "evver/training.hpp"
#include "evver/types.hpp"

namespace evver::cli {

struct GlobalOptions {
  std::size_t workers = 0;  // 0 = number of processors
  std::uint64_t seed = 42;
  bool seed_given = false;
  std::string log_level = "info";

  std::size_t worker_count() const;
};

/// Adds one subcommand per pipeline stage.
void register_corpus_commands(CLI::App& app, GlobalOptions& g);
void register_feature_commands(CLI::App& app, GlobalOptions& g);
void register_model_commands(CLI::App& app, GlobalOptions& g);
void register_evidence_commands(CLI::App& app, GlobalOptions& g);

/// Metadata recorded next to (or inside) every output artifact.
nlohmann::json artifact_meta(const GlobalOptions& g, const std::string& command);

/// `<path>.meta.json` sidecar for outputs whose format has no metadata slot.
void write_meta_sidecar(const std::string& path, const nlohmann::json& meta);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

/// Dense embeddings or sparse features, keyed by article id.
struct FeatureInput {
  std::shared_ptr<EmbeddingSet> dense;
  std::shared_ptr<SparseFeatureFile> sparse;
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> row_of;

  std::size_t dim() const;
};

/// Exactly one of the two paths must be non-empty.
FeatureInput load_feature_input(const std::string& embeddings_path, const std::string& features_path);

/// Samples for `ids` (or every feature row when `ids` is null) with labels
/// from `corpus` and, when `dcs` is given, the DCS score of each article's
/// domain. Throws DataError for ids missing from either side.
TrainingSet assemble_training_set(const FeatureInput& features, const std::vector<Article>& corpus,
                                  const DcsTable* dcs, const std::vector<std::string>* ids);

/// DCS score of an article: its domain, else the domain of its URL.
double article_dcs(const Article& a, const DcsTable& dcs);

}  // namespace evver::cli
