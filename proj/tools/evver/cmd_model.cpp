#include <iostream>

#include "common.hpp"
#include "evver/baselines.hpp"
#include "evver/error.hpp"
#include "evver/log.hpp"

namespace evver::cli {
namespace {

struct DataOptions {
  std::string embeddings;
  std::string features;
  std::string labels;
  std::string dcs;
  std::string splits;
};

void add_data_options(CLI::App* sub, DataOptions& d) {
  sub->add_option("--embeddings", d.embeddings, "Dense embedding file")->check(CLI::ExistingFile);
  sub->add_option("--features", d.features, "Sparse feature file (alternative to --embeddings)")
      ->check(CLI::ExistingFile);
  sub->add_option("--labels", d.labels, "Corpus JSON-Lines providing labels and domains")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--dcs", d.dcs, "Domain ratings (SQLite cache or JSON-Lines snapshot)")->check(CLI::ExistingFile);
  sub->add_option("--splits", d.splits, "Train/validation/test id lists")->check(CLI::ExistingFile);
}

EvverConfig load_config(const std::string& path, const GlobalOptions& g, std::size_t feature_dim) {
  nlohmann::json j = path.empty() ? nlohmann::json::object() : read_json_file(path);
  EvverConfig c = j.get<EvverConfig>();
  if (g.seed_given || !j.contains("seed")) c.seed = g.seed;
  if (!j.contains("input_dim")) {
    c.input_dim = feature_dim;
  } else if (c.input_dim != feature_dim) {
    throw DataError("config input_dim " + std::to_string(c.input_dim) + " does not match feature dimension " +
                    std::to_string(feature_dim));
  }
  return c;
}

struct LoadedData {
  FeatureInput features;
  std::vector<Article> corpus;
  std::optional<DcsTable> dcs;
  std::optional<SplitSet> splits;

  const DcsTable* dcs_for(const EvverConfig& c) const {
    if (!c.use_dcs) return nullptr;
    if (!dcs) throw DataError("config.use_dcs is set but no --dcs ratings were given");
    return &*dcs;
  }
};

LoadedData load_data(const DataOptions& d) {
  LoadedData out;
  out.features = load_feature_input(d.embeddings, d.features);
  out.corpus = read_corpus(d.labels);
  if (!d.dcs.empty()) out.dcs = DcsTable::load(d.dcs);
  if (!d.splits.empty()) out.splits = read_json_file(d.splits).get<SplitSet>();
  return out;
}

struct TrainOptions {
  DataOptions data;
  std::string config;
  std::string out;
  std::string metrics;
};

void run_train(const TrainOptions& o, const GlobalOptions& g) {
  auto data = load_data(o.data);
  EvverConfig config = load_config(o.config, g, data.features.dim());
  config.validate();
  const DcsTable* dcs = data.dcs_for(config);

  nlohmann::json metrics;
  metrics["meta"] = artifact_meta(g, "train");
  EvverModel model;
  if (data.splits) {
    auto train_set = assemble_training_set(data.features, data.corpus, dcs, &data.splits->train.article_ids);
    auto val_set = assemble_training_set(data.features, data.corpus, dcs, &data.splits->validation.article_ids);
    model = train(train_set, config, val_set.size() ? &val_set : nullptr);
    if (val_set.size()) metrics["validation"] = evaluate(model, val_set);
    auto test_set = assemble_training_set(data.features, data.corpus, dcs, &data.splits->test.article_ids);
    if (test_set.size()) metrics["test"] = evaluate(model, test_set);
  } else {
    auto all = assemble_training_set(data.features, data.corpus, dcs, nullptr);
    model = train(all, config);
    metrics["train"] = evaluate(model, all);
  }
  save_model(model, o.out);
  metrics["config"] = model.config;
  metrics["training_metrics"] = model.training_metrics;
  if (model.best_epoch) metrics["best_epoch"] = *model.best_epoch;
  if (!o.metrics.empty()) write_json_file(o.metrics, metrics);
  std::cout << metrics.dump(2) << '\n';
}

struct GridOptions {
  DataOptions data;
  std::string grid;
  bool reference_grid = false;
  std::string config;
  std::size_t folds = 3;
  std::string out;
};

void run_gridsearch(const GridOptions& o, const GlobalOptions& g) {
  if (o.grid.empty() == !o.reference_grid) throw DataError("give exactly one of --grid or --reference-grid");
  GridSpec grid = o.reference_grid ? GridSpec::reference_grid() : read_json_file(o.grid).get<GridSpec>();
  auto data = load_data(o.data);
  EvverConfig base = load_config(o.config, g, data.features.dim());
  const DcsTable* dcs = data.dcs_for(base);
  // cross-validation runs on the training split when splits are supplied
  auto set = assemble_training_set(data.features, data.corpus, dcs,
                                   data.splits ? &data.splits->train.article_ids : nullptr);
  log::info("grid search", {{"combinations", grid.cardinality()}, {"samples", set.size()}, {"folds", o.folds}});
  auto ranked = grid_search(set, grid, base, o.folds, g.worker_count());
  nlohmann::json out{{"meta", artifact_meta(g, "gridsearch")}, {"grid", grid}, {"ranking", ranked}};
  write_json_file(o.out, out);
  if (!ranked.empty()) std::cout << nlohmann::json(ranked.front()).dump(2) << '\n';
}

struct BaselineOptions {
  std::string kind;
  std::string features;
  std::string corpus;
  std::string splits;
  std::string dcs;
  std::string field = "title";
  std::size_t max_features = kDefaultMaxFeatures;
  double alpha = 1.0;
  std::size_t max_depth = 5;
  std::size_t min_leaf = 1;
  double l2 = 1e-4;
  double lr = 0.5;
  std::size_t epochs = 200;
  std::string config;
  std::string out;
};

SparseRowMatrix baseline_matrix(const BaselineOptions& o, const std::vector<const Article*>& rows,
                                const Vocabulary* vocab, const DcsTable* dcs, std::size_t workers) {
  if (o.features == "dcs") {
    std::vector<DcsRecord> records;
    for (const auto* a : rows) {
      const std::string& src = a->domain.empty() ? a->url : a->domain;
      records.push_back(src.empty() ? DcsRecord::absent("") : dcs->lookup(registrable_domain(src)));
    }
    return dcs_feature_matrix(records);
  }
  std::vector<std::string> docs;
  for (const auto* a : rows) docs.push_back(o.field == "body" && a->body ? *a->body : a->title);
  return featurize(docs, *vocab, feature_mode_from_name(o.features), workers);
}

void run_baseline(const BaselineOptions& o, const GlobalOptions& g) {
  auto kind = baseline_kind_from_name(o.kind);
  auto mode = baseline_features_from_name(o.features);
  auto corpus = read_corpus(o.corpus);
  SplitSet splits = read_json_file(o.splits).get<SplitSet>();
  std::unordered_map<std::string, const Article*> by_id;
  for (const auto& a : corpus) by_id.emplace(a.id, &a);
  auto pick = [&](const DatasetSplit& s) {
    std::vector<const Article*> out;
    for (const auto& id : s.article_ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw DataError("split id " + id + " is not in the corpus");
      out.push_back(it->second);
    }
    return out;
  };
  auto train_rows = pick(splits.train);
  auto test_rows = pick(splits.test);
  auto labels_of = [](const std::vector<const Article*>& rows) {
    std::vector<int> l;
    for (const auto* a : rows) l.push_back(label_code(a->label));
    return l;
  };

  std::optional<DcsTable> dcs;
  std::optional<Vocabulary> vocab;
  if (mode == BaselineFeatures::dcs_only) {
    if (o.dcs.empty()) throw DataError("--features dcs needs --dcs ratings");
    dcs = DcsTable::load(o.dcs);
  } else {
    std::vector<std::string> docs;
    for (const auto* a : train_rows) docs.push_back(o.field == "body" && a->body ? *a->body : a->title);
    vocab = Vocabulary::fit(docs, o.max_features, g.worker_count());
  }
  const Vocabulary* vp = vocab ? &*vocab : nullptr;
  const DcsTable* dp = dcs ? &*dcs : nullptr;
  auto x_train = baseline_matrix(o, train_rows, vp, dp, g.worker_count());
  auto x_test = baseline_matrix(o, test_rows, vp, dp, g.worker_count());
  auto y_train = labels_of(train_rows);
  auto y_test = labels_of(test_rows);

  BaselineModel model;
  switch (kind) {
    case BaselineKind::logreg: model = fit_logreg(x_train, y_train, o.l2, o.lr, o.epochs, g.seed, mode); break;
    case BaselineKind::naive_bayes: model = fit_naive_bayes(x_train, y_train, o.alpha, mode); break;
    case BaselineKind::decision_tree: model = fit_decision_tree(x_train, y_train, o.max_depth, o.min_leaf, mode); break;
    case BaselineKind::mlp: {
      EvverConfig c = load_config(o.config, g, static_cast<std::size_t>(x_train.cols()));
      model = fit_mlp(x_train, y_train, c, mode);
      break;
    }
  }
  nlohmann::json out{{"meta", artifact_meta(g, "baseline")},
                     {"kind", baseline_kind_name(kind)},
                     {"features", baseline_features_name(mode)},
                     {"train", evaluate_baseline(model, x_train, y_train)},
                     {"test", evaluate_baseline(model, x_test, y_test)}};
  if (!o.out.empty()) write_json_file(o.out, out);
  std::cout << out.dump(2) << '\n';
}

}  // namespace

void register_model_commands(CLI::App& app, GlobalOptions& g) {
  {
    auto o = std::make_shared<TrainOptions>();
    auto* sub = app.add_subcommand("train", "Train EVVER-Net and write a model file");
    add_data_options(sub, o->data);
    sub->add_option("--config", o->config, "EvverConfig JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o->out, "Model file")->required();
    sub->add_option("--metrics", o->metrics, "Metrics JSON");
    sub->callback([o, &g] { run_train(*o, g); });
  }
  {
    auto o = std::make_shared<GridOptions>();
    auto* sub = app.add_subcommand("gridsearch", "Cross-validated hyperparameter search");
    add_data_options(sub, o->data);
    sub->add_option("--grid", o->grid, "GridSpec JSON")->check(CLI::ExistingFile);
    sub->add_flag("--reference-grid", o->reference_grid, "Use the built-in 648-combination grid");
    sub->add_option("--config", o->config, "Base EvverConfig JSON for fields the grid does not set")
        ->check(CLI::ExistingFile);
    sub->add_option("--folds", o->folds, "Cross-validation folds")->check(CLI::Range(2, 100));
    sub->add_option("--out", o->out, "Ranking JSON")->required();
    sub->callback([o, &g] { run_gridsearch(*o, g); });
  }
  {
    auto o = std::make_shared<BaselineOptions>();
    auto* sub = app.add_subcommand("baseline", "Fit and score a reference classifier on the train/test split");
    sub->add_option("--kind", o->kind, "logreg, nb, tree or mlp")
        ->required()
        ->check(CLI::IsMember({"logreg", "nb", "tree", "mlp"}));
    sub->add_option("--features", o->features, "count, tfidf or dcs")
        ->required()
        ->check(CLI::IsMember({"count", "tfidf", "dcs"}));
    sub->add_option("--corpus", o->corpus, "Corpus JSON-Lines")->required()->check(CLI::ExistingFile);
    sub->add_option("--splits", o->splits, "Train/validation/test id lists")->required()->check(CLI::ExistingFile);
    sub->add_option("--dcs", o->dcs, "Domain ratings, for --features dcs")->check(CLI::ExistingFile);
    sub->add_option("--field", o->field, "title or body")->check(CLI::IsMember({"title", "body"}));
    sub->add_option("--max-features", o->max_features, "Vocabulary size cap")->check(CLI::PositiveNumber);
    sub->add_option("--alpha", o->alpha, "Naive Bayes smoothing");
    sub->add_option("--max-depth", o->max_depth, "Decision tree depth limit");
    sub->add_option("--min-leaf", o->min_leaf, "Decision tree minimum leaf size");
    sub->add_option("--l2", o->l2, "Logistic regression L2 strength");
    sub->add_option("--lr", o->lr, "Logistic regression step size");
    sub->add_option("--epochs", o->epochs, "Logistic regression iterations");
    sub->add_option("--config", o->config, "EvverConfig JSON for the MLP baseline")->check(CLI::ExistingFile);
    sub->add_option("--out", o->out, "Metrics JSON");
    sub->callback([o, &g] { run_baseline(*o, g); });
  }
}

}  // namespace evver::cli
