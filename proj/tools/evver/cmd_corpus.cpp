#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "common.hpp"
#include "evver/dataset.hpp"
#include "evver/error.hpp"
#include "evver/fetch.hpp"
#include "evver/html.hpp"
#include "evver/ingest.hpp"
#include "evver/log.hpp"

namespace evver::cli {
namespace {

struct IngestOptions {
  std::string source;
  std::string input;
  std::string adapter;
  std::string out;
  std::string skips;
  bool fetch_bodies = false;
  std::string cache_dir;
  std::string rules;
  bool offline = false;
};

void run_ingest(const IngestOptions& o, const GlobalOptions& g) {
  SourceAdapterConfig config = default_adapter(source_from_name(o.source), o.input);
  if (!o.adapter.empty()) config = adapter_from_json(read_json_file(o.adapter), config);
  config.validate();

  IngestResult result = ingest_source(config);
  log::info("ingested", {{"source", o.source},
                         {"rows", result.stats.rows},
                         {"emitted", result.stats.emitted},
                         {"skipped", result.stats.skipped_by_reason}});

  nlohmann::json meta = artifact_meta(g, "ingest");
  meta["source"] = o.source;
  meta["input"] = o.input;
  meta["rows"] = result.stats.rows;
  meta["emitted"] = result.stats.emitted;
  meta["skipped_by_reason"] = result.stats.skipped_by_reason;

  if (o.fetch_bodies) {
    CurlHttpClient client;
    HostRateLimiter limiter;
    std::optional<HtmlCache> cache;
    if (!o.cache_dir.empty()) cache.emplace(o.cache_dir);
    FetchPolicy policy;
    policy.offline = o.offline;
    Fetcher fetcher(client, limiter, cache, policy);
    auto rules = o.rules.empty() ? std::vector<ExtractionRule>{} : load_extraction_rules(o.rules);
    auto stats = fill_missing_bodies(result.articles, fetcher, rules, g.worker_count());
    meta["enrich"] = {{"attempted", stats.attempted},
                      {"filled", stats.filled},
                      {"thin", stats.thin},
                      {"failed", stats.failed}};
    log::info("bodies fetched", meta["enrich"]);
  }

  write_corpus(o.out, result.articles);
  write_meta_sidecar(o.out, meta);
  if (!o.skips.empty()) {
    std::ofstream out(o.skips);
    if (!out) throw DataError("cannot write " + o.skips);
    for (const auto& s : result.skipped) out << nlohmann::json(s).dump() << '\n';
  }
}

struct BuildOptions {
  std::vector<std::string> inputs;
  std::string topics;
  std::string out;
  std::string splits;
  std::string shortfalls;
  std::string report;
};

void run_build_dataset(const BuildOptions& o, const GlobalOptions& g) {
  TopicMap map = TopicMap::load(o.topics);
  std::vector<Article> all;
  std::vector<std::string> files;
  for (const auto& path : o.inputs) {
    if (std::filesystem::is_directory(path)) {
      std::vector<std::string> found;
      for (const auto& e : std::filesystem::directory_iterator(path)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") found.push_back(e.path().string());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(path);
    }
  }
  if (files.empty()) throw DataError("no .jsonl inputs found");
  for (const auto& path : files) {
    auto part = read_corpus(path);
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  std::size_t raw = all.size();
  all = filter_years(std::move(all));
  std::size_t in_range = all.size();
  all = dedup(std::move(all));
  std::size_t unknown_topics = 0;
  for (auto& a : all) a.topic = consolidate_topic(a.topic, map, &unknown_topics);

  auto plan = BalancePlan::derive(all);
  auto balanced = balance(all, plan, g.seed, g.worker_count());
  auto splits = split(balanced.corpus, g.seed);

  nlohmann::json meta = artifact_meta(g, "build-dataset");
  meta["inputs"] = files;
  meta["counts"] = {{"raw", raw},
                    {"in_year_range", in_range},
                    {"after_dedup", all.size()},
                    {"balanced", balanced.corpus.size()},
                    {"unknown_topics", unknown_topics},
                    {"shortfall_cells", balanced.shortfalls.size()}};
  log::info("dataset built", meta["counts"]);

  write_corpus(o.out, balanced.corpus);
  write_meta_sidecar(o.out, meta);
  nlohmann::json sj = splits;
  sj["meta"] = artifact_meta(g, "build-dataset");
  write_json_file(o.splits, sj);
  if (!o.shortfalls.empty()) {
    write_json_file(o.shortfalls, {{"meta", artifact_meta(g, "build-dataset")}, {"shortfalls", balanced.shortfalls}});
  }
  if (!o.report.empty()) {
    nlohmann::json rj = corpus_stats(balanced.corpus);
    rj["meta"] = artifact_meta(g, "build-dataset");
    write_json_file(o.report, rj);
  }
}

struct FetchDcsOptions {
  std::string corpus;
  std::string domains;
  std::string cache;
  std::string snapshot;
  bool offline = false;
  std::string url_template;
  int ttl_days = 90;
  long interval_ms = 1000;
};

void run_fetch_dcs(const FetchDcsOptions& o, const GlobalOptions& g) {
  if (o.corpus.empty() == o.domains.empty()) throw DataError("give exactly one of --corpus or --domains");
  std::set<std::string> domains;
  if (!o.corpus.empty()) {
    for (const auto& a : read_corpus(o.corpus)) {
      const std::string& src = a.domain.empty() ? a.url : a.domain;
      if (!src.empty()) domains.insert(registrable_domain(src));
    }
  } else {
    std::ifstream in(o.domains);
    if (!in) throw DataError("cannot open " + o.domains);
    for (std::string line; std::getline(in, line);) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) domains.insert(registrable_domain(line));
    }
  }

  DcsCache cache(o.cache);
  CurlHttpClient client;
  HostRateLimiter limiter{std::chrono::milliseconds(o.interval_ms)};
  Fetcher fetcher(client, limiter, std::nullopt);
  DcsLookupOptions options;
  if (!o.url_template.empty()) options.url_template = o.url_template;
  options.ttl = std::chrono::hours(24 * o.ttl_days);
  DcsLookup lookup(cache, o.offline ? nullptr : &fetcher, options);

  std::size_t rated = 0, absent = 0, failed = 0, parse_failures = 0;
  for (const auto& d : domains) {
    try {
      auto r = lookup.lookup(d);
      if (r.parse_failure) ++parse_failures;
      (r.factual_reporting || r.credibility_rating ? rated : absent) += 1;
    } catch (const RetryableError& e) {
      ++failed;
      log::warn("dcs lookup failed", {{"domain", d}, {"status", e.status()}, {"error", e.what()}});
    }
  }
  log::info("dcs lookups done", {{"domains", domains.size()},
                                  {"rated", rated},
                                  {"absent", absent},
                                  {"parse_failures", parse_failures},
                                  {"failed", failed},
                                  {"network_requests", fetcher.network_requests()}});
  if (!o.snapshot.empty()) {
    cache.export_snapshot(o.snapshot);
    write_meta_sidecar(o.snapshot, artifact_meta(g, "fetch-dcs"));
  }
}

struct StatsOptions {
  std::string corpus;
  std::string json;
};

void run_stats(const StatsOptions& o, const GlobalOptions& g) {
  auto report = corpus_stats(read_corpus(o.corpus));
  std::cout << format_report(report);
  if (!o.json.empty()) {
    nlohmann::json j = report;
    j["meta"] = artifact_meta(g, "stats");
    write_json_file(o.json, j);
  }
}

}  // namespace

void register_corpus_commands(CLI::App& app, GlobalOptions& g) {
  {
    auto o = std::make_shared<IngestOptions>();
    auto* sub = app.add_subcommand("ingest", "Normalize one upstream dataset export into Article JSON-Lines");
    sub->add_option("--source", o->source, "multifc, pubhealth, politifact, fnc, nelagt or grafn")
        ->required()
        ->check(CLI::IsMember({"multifc", "pubhealth", "politifact", "fnc", "nelagt", "grafn"}));
    sub->add_option("--input", o->input, "Source export (CSV/TSV or JSON-Lines)")->required()->check(CLI::ExistingFile);
    sub->add_option("--adapter", o->adapter, "JSON overrides for the built-in column mapping")->check(CLI::ExistingFile);
    sub->add_option("--out", o->out, "Output Article JSON-Lines")->required();
    sub->add_option("--skips", o->skips, "Write skipped rows with reasons as JSON-Lines");
    sub->add_flag("--fetch-bodies", o->fetch_bodies, "Fetch article bodies missing from the export");
    sub->add_option("--cache-dir", o->cache_dir, "Raw HTML cache directory");
    sub->add_option("--rules", o->rules, "Per-domain extraction rules (JSON)")->check(CLI::ExistingFile);
    sub->add_flag("--offline", o->offline, "Serve pages from the HTML cache only");
    sub->callback([o, &g] { run_ingest(*o, g); });
  }
  {
    auto o = std::make_shared<BuildOptions>();
    auto* sub = app.add_subcommand("build-dataset", "Filter, deduplicate, balance and split the three-class corpus");
    sub->add_option("--in", o->inputs, "Directory of per-source Article JSON-Lines, or files (repeatable)")
        ->required()
        ->check(CLI::ExistingPath);
    sub->add_option("--topic-map", o->topics, "Raw topic to topic group map (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o->out, "Balanced corpus JSON-Lines")->required();
    sub->add_option("--splits", o->splits, "Train/validation/test id lists (JSON)")->required();
    sub->add_option("--shortfalls", o->shortfalls, "Cells that could not be filled (JSON)");
    sub->add_option("--report", o->report, "Corpus statistics (JSON)");
    sub->callback([o, &g] { run_build_dataset(*o, g); });
  }
  {
    auto o = std::make_shared<FetchDcsOptions>();
    auto* sub = app.add_subcommand("fetch-dcs", "Look up and cache domain credibility ratings");
    sub->add_option("--corpus", o->corpus, "Collect domains from this corpus")->check(CLI::ExistingFile);
    sub->add_option("--domains", o->domains, "Newline-separated domain list")->check(CLI::ExistingFile);
    sub->add_option("--cache", o->cache, "SQLite rating cache")->required();
    sub->add_option("--out", o->snapshot, "Export the cache as sorted JSON-Lines");
    sub->add_flag("--offline", o->offline, "Use cached ratings only");
    sub->add_option("--url-template", o->url_template, "Rating page URL with {slug} or {domain}");
    sub->add_option("--ttl-days", o->ttl_days, "Refresh cached ratings older than this")->check(CLI::PositiveNumber);
    sub->add_option("--interval-ms", o->interval_ms, "Minimum delay between requests to one host");
    sub->callback([o, &g] { run_fetch_dcs(*o, g); });
  }
  {
    auto o = std::make_shared<StatsOptions>();
    auto* sub = app.add_subcommand("stats", "Print per-class, per-year, per-topic and per-source corpus statistics");
    sub->add_option("--corpus", o->corpus, "Article JSON-Lines")->required()->check(CLI::ExistingFile);
    sub->add_option("--json", o->json, "Also write the statistics as JSON");
    sub->callback([o, &g] { run_stats(*o, g); });
  }
}

}  // namespace evver::cli
