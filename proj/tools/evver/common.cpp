#include "common.hpp"

#include <fstream>

#include "evver/error.hpp"
#include "evver/parallel.hpp"

namespace evver::cli {

std::size_t GlobalOptions::worker_count() const { return workers ? workers : default_workers(); }

nlohmann::json artifact_meta(const GlobalOptions& g, const std::string& command) {
  return {{"tool", "evver"}, {"version", "0.1.0"}, {"command", command}, {"seed", g.seed}};
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path);
}

void write_meta_sidecar(const std::string& path, const nlohmann::json& meta) {
  write_json_file(path + ".meta.json", meta);
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::size_t FeatureInput::dim() const {
  return dense ? dense->dim() : static_cast<std::size_t>(sparse->matrix.cols());
}

FeatureInput load_feature_input(const std::string& embeddings_path, const std::string& features_path) {
  if (embeddings_path.empty() == features_path.empty()) {
    throw DataError("give exactly one of --embeddings or --features");
  }
  FeatureInput f;
  if (!embeddings_path.empty()) {
    f.dense = std::make_shared<EmbeddingSet>(load_embeddings(embeddings_path));
    f.ids = f.dense->ids;
  } else {
    f.sparse = std::make_shared<SparseFeatureFile>(read_sparse_features(features_path));
    f.ids = f.sparse->ids;
  }
  for (std::size_t i = 0; i < f.ids.size(); ++i) f.row_of.emplace(f.ids[i], i);
  return f;
}

double article_dcs(const Article& a, const DcsTable& dcs) {
  const std::string& source = a.domain.empty() ? a.url : a.domain;
  return source.empty() ? normalize_dcs(kDcsAbsent) : dcs.score(registrable_domain(source));
}

TrainingSet assemble_training_set(const FeatureInput& features, const std::vector<Article>& corpus,
                                  const DcsTable* dcs, const std::vector<std::string>* ids) {
  std::unordered_map<std::string, const Article*> by_id;
  for (const auto& a : corpus) by_id.emplace(a.id, &a);

  const std::vector<std::string>& wanted = ids ? *ids : features.ids;
  std::vector<std::size_t> rows;
  std::vector<int> labels;
  std::vector<float> scores;
  rows.reserve(wanted.size());
  for (const auto& id : wanted) {
    auto row = features.row_of.find(id);
    if (row == features.row_of.end()) throw DataError("no features for article id " + id);
    auto art = by_id.find(id);
    if (art == by_id.end()) throw DataError("feature id " + id + " is not in the corpus");
    rows.push_back(row->second);
    labels.push_back(label_code(art->second->label));
    if (dcs) scores.push_back(static_cast<float>(article_dcs(*art->second, *dcs)));
  }

  TrainingSet t;
  if (features.dense) {
    t.dense = std::shared_ptr<const RowMatrixF>(features.dense, &features.dense->vectors);
  } else {
    t.sparse = std::shared_ptr<const SparseRowMatrix>(features.sparse, &features.sparse->matrix);
  }
  t.rows = std::move(rows);
  t.labels = std::move(labels);
  t.dcs = std::move(scores);
  t.validate();
  return t;
}

}  // namespace evver::cli
