#include "common.hpp"
#include "evver/error.hpp"
#include "evver/log.hpp"

namespace evver::cli {
namespace {

struct FeaturizeOptions {
  std::string corpus;
  std::string field = "title";
  std::string mode = "tfidf";
  std::size_t max_features = kDefaultMaxFeatures;
  std::string splits;
  std::string out;
};

void run_featurize(const FeaturizeOptions& o, const GlobalOptions& g) {
  auto corpus = read_corpus(o.corpus);
  std::vector<std::string> docs, ids;
  std::size_t body_fallbacks = 0;
  for (const auto& a : corpus) {
    ids.push_back(a.id);
    if (o.field == "body") {
      if (a.body) {
        docs.push_back(*a.body);
      } else {
        docs.push_back(a.title);
        ++body_fallbacks;
      }
    } else {
      docs.push_back(a.title);
    }
  }

  // The vocabulary and idf come from the training split only when one is given.
  std::vector<std::string> fit_docs;
  if (!o.splits.empty()) {
    SplitSet splits = read_json_file(o.splits).get<SplitSet>();
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < ids.size(); ++i) pos.emplace(ids[i], i);
    for (const auto& id : splits.train.article_ids) {
      auto it = pos.find(id);
      if (it == pos.end()) throw DataError("split id " + id + " is not in the corpus");
      fit_docs.push_back(docs[it->second]);
    }
  } else {
    fit_docs = docs;
  }
  auto vocab = Vocabulary::fit(fit_docs, o.max_features, g.worker_count());
  auto mode = feature_mode_from_name(o.mode);
  auto matrix = featurize(docs, vocab, mode, g.worker_count());
  write_sparse_features(o.out, matrix, ids, mode, vocab);

  nlohmann::json meta = artifact_meta(g, "featurize");
  meta["field"] = o.field;
  meta["mode"] = o.mode;
  meta["vocabulary_size"] = vocab.size();
  meta["fit_documents"] = fit_docs.size();
  meta["body_fallbacks"] = body_fallbacks;
  write_meta_sidecar(o.out, meta);
  log::info("features written", meta);
}

}  // namespace

void register_feature_commands(CLI::App& app, GlobalOptions& g) {
  auto o = std::make_shared<FeaturizeOptions>();
  auto* sub = app.add_subcommand("featurize", "Count or TF-IDF features for every article");
  sub->add_option("--corpus", o->corpus, "Article JSON-Lines")->required()->check(CLI::ExistingFile);
  sub->add_option("--field", o->field, "title or body (body falls back to the title)")
      ->check(CLI::IsMember({"title", "body"}));
  sub->add_option("--mode", o->mode, "count or tfidf")->check(CLI::IsMember({"count", "tfidf"}));
  sub->add_option("--max-features", o->max_features, "Vocabulary size cap")->check(CLI::PositiveNumber);
  sub->add_option("--splits", o->splits, "Fit the vocabulary on the training split only")->check(CLI::ExistingFile);
  sub->add_option("--out", o->out, "Sparse feature file")->required();
  sub->callback([o, &g] { run_featurize(*o, g); });
}

}  // namespace evver::cli
