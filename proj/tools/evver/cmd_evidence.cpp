#include <filesystem>
#include <fstream>
#include <iostream>

#include "common.hpp"
#include "evver/error.hpp"
#include "evver/evidence_filter.hpp"
#include "evver/log.hpp"

namespace evver::cli {
namespace {

struct FilterOptions {
  std::string model;
  std::string evidence;
  std::string embeddings;
  std::string dcs;
  std::string out;
  std::string audit;
  std::string predictions;
  std::string errors;
  std::string name;
  bool clean = false;
};

void run_filter(const FilterOptions& o, const GlobalOptions& g) {
  EvverModel model = load_model(o.model);
  auto items = read_evidence(o.evidence);
  CleanReport cleaning;
  if (o.clean) {
    items = clean_evidence(items, &cleaning);
    log::info("evidence cleaned", cleaning);
  }
  EmbeddingSet embeddings = load_embeddings(o.embeddings);
  std::optional<DcsTable> dcs;
  if (!o.dcs.empty()) dcs = DcsTable::load(o.dcs);
  if (dcs && !model.config.use_dcs) log::warn("model was trained without DCS; --dcs is ignored");

  auto results = classify_evidence(items, model, embeddings, dcs ? &*dcs : nullptr, g.worker_count());
  std::vector<EvidenceItem> scored;
  std::vector<Prediction> predictions;
  std::size_t failures = 0;
  std::ofstream errors;
  if (!o.errors.empty()) {
    errors.open(o.errors);
    if (!errors) throw DataError("cannot write " + o.errors);
  }
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].prediction) {
      scored.push_back(items[i]);
      predictions.push_back(*results[i].prediction);
    } else {
      ++failures;
      if (errors) errors << nlohmann::json{{"id", results[i].item_id}, {"error", results[i].error}}.dump() << '\n';
    }
  }
  if (failures) log::warn("items without a prediction", {{"count", failures}});

  auto kept = filter_credible(scored, predictions);
  write_evidence(o.out, kept);
  nlohmann::json meta = artifact_meta(g, "filter");
  meta["model"] = o.model;
  meta["input_items"] = items.size();
  meta["scored"] = predictions.size();
  meta["kept"] = kept.size();
  meta["failed"] = failures;
  if (o.clean) meta["cleaning"] = cleaning;
  write_meta_sidecar(o.out, meta);

  if (!o.predictions.empty()) {
    std::ofstream out(o.predictions);
    if (!out) throw DataError("cannot write " + o.predictions);
    for (const auto& p : predictions) out << nlohmann::json(p).dump() << '\n';
  }

  std::string name = o.name.empty() ? std::filesystem::path(o.evidence).stem().string() : o.name;
  if (predictions.empty()) throw DataError("no evidence item could be scored; nothing to audit");
  AuditReport report = audit(name, predictions);
  if (!o.audit.empty()) {
    nlohmann::json j = report;
    j["meta"] = meta;
    write_json_file(o.audit, j);
  }
  std::cout << format_audit_table(std::span<const AuditReport>(&report, 1));
}

struct ReportOptions {
  std::vector<std::string> audits;
  std::string out;
};

void run_report(const ReportOptions& o, const GlobalOptions&) {
  std::vector<AuditReport> reports;
  for (const auto& path : o.audits) {
    auto j = read_json_file(path);
    AuditReport r;
    r.corpus_name = j.at("corpus_name").get<std::string>();
    r.sample_count = j.at("sample_count").get<std::size_t>();
    const auto& c = j.at("counts");
    r.counts = {c.at("fact_checked").get<std::size_t>(), c.at("credible").get<std::size_t>(),
                c.at("unreliable").get<std::size_t>()};
    std::size_t total = r.counts[0] + r.counts[1] + r.counts[2];
    if (total != r.sample_count) {
      throw DataError(path + ": class counts sum to " + std::to_string(total) + " but sample_count is " +
                      std::to_string(r.sample_count));
    }
    auto tenths = audit_tenths(r.counts);
    for (std::size_t k = 0; k < r.percent.size(); ++k) r.percent[k] = static_cast<double>(tenths[k]) / 10.0;
    reports.push_back(std::move(r));
  }
  std::string table = format_audit_table(reports);
  std::cout << table;
  if (!o.out.empty()) {
    std::ofstream out(o.out);
    if (!out) throw DataError("cannot write " + o.out);
    out << table;
  }
}

}  // namespace

void register_evidence_commands(CLI::App& app, GlobalOptions& g) {
  {
    auto o = std::make_shared<FilterOptions>();
    auto* sub = app.add_subcommand("filter", "Classify evidence, keep the credible items and audit the class mix");
    sub->add_option("--model", o->model, "Model file")->required()->check(CLI::ExistingFile);
    sub->add_option("--evidence", o->evidence, "EvidenceItem JSON-Lines")->required()->check(CLI::ExistingFile);
    sub->add_option("--embeddings", o->embeddings, "Embeddings of the evidence items")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--dcs", o->dcs, "Domain ratings (SQLite cache or JSON-Lines snapshot)")->check(CLI::ExistingFile);
    sub->add_option("--out", o->out, "Kept evidence JSON-Lines")->required();
    sub->add_option("--audit", o->audit, "Audit report JSON");
    sub->add_option("--predictions", o->predictions, "Per-item predictions JSON-Lines");
    sub->add_option("--errors", o->errors, "Items that could not be scored, JSON-Lines");
    sub->add_option("--name", o->name, "Corpus name in the audit (default: evidence file stem)");
    sub->add_flag("--clean", o->clean, "Drop scraping junk before classification");
    sub->callback([o, &g] { run_filter(*o, g); });
  }
  {
    auto o = std::make_shared<ReportOptions>();
    auto* sub = app.add_subcommand("report", "Render audit reports as one aligned table");
    sub->add_option("--audit", o->audits, "Audit report JSON (repeatable)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o->out, "Also write the table to this file");
    sub->callback([o, &g] { run_report(*o, g); });
  }
}

}  // namespace evver::cli
