#include "evver/dcs.hpp"

#include <algorithm>
#include <span>
#include <array>
#include <cctype>
#include <fstream>
#include <mutex>

#include <nlohmann/json.hpp>
#include <sqlite3.h>

#include "evver/error.hpp"
#include "evver/html.hpp"
#include "evver/log.hpp"
#include "evver/types.hpp"

namespace evver {
namespace {

std::string normalize_category(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '-' || c == '_') {
      space = !out.empty();
    } else {
      if (space) out += ' ';
      space = false;
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

bool absent(const std::optional<std::string_view>& v) {
  return !v || normalize_category(*v).empty();
}

constexpr std::array<std::pair<std::string_view, int>, 6> kFactualScores = {{
    {"satire", -3},
    {"very low", -2},
    {"low", -1},
    {"mostly factual", 2},
    {"high", 3},
    {"very high", 4},
}};

// Longest known phrase at the start of `text` (already lowercased).
std::optional<std::string> match_prefix(std::string_view text,
                                        std::span<const std::string_view> phrases) {
  std::optional<std::string> best;
  for (auto p : phrases) {
    if (text.starts_with(p) && (text.size() == p.size() || !std::isalpha(static_cast<unsigned char>(text[p.size()])))) {
      if (!best || p.size() > best->size()) best = std::string(p);
    }
  }
  return best;
}

std::string lower_text(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void check_sqlite(int rc, sqlite3* db, std::string_view what) {
  if (rc != SQLITE_OK && rc != SQLITE_DONE && rc != SQLITE_ROW) {
    throw DataError(std::string(what) + ": " + (db ? sqlite3_errmsg(db) : sqlite3_errstr(rc)));
  }
}

struct Statement {
  sqlite3_stmt* stmt = nullptr;
  Statement(sqlite3* db, const char* sql) {
    check_sqlite(sqlite3_prepare_v2(db, sql, -1, &stmt, nullptr), db, "prepare");
  }
  ~Statement() { sqlite3_finalize(stmt); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;
};

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

}  // namespace

int encode_dcs(std::optional<std::string_view> factual_reporting,
               std::optional<std::string_view> credibility_rating) {
  std::optional<std::string> cred;
  if (!absent(credibility_rating)) {
    cred = normalize_category(*credibility_rating);
    if (*cred == "high" || *cred == "medium" || *cred == "low") *cred += " credibility";
    if (*cred != "high credibility" && *cred != "medium credibility" && *cred != "low credibility") {
      throw DomainError("unrecognized MBFC credibility rating: '" + std::string(*credibility_rating) + "'");
    }
  }
  if (absent(factual_reporting)) return kDcsAbsent;
  std::string factual = normalize_category(*factual_reporting);
  if (factual == "mixed") {
    if (!cred) return kDcsAbsent;
    if (*cred == "medium credibility") return 1;
    if (*cred == "high credibility") return 2;
    return -1;
  }
  for (const auto& [name, score] : kFactualScores) {
    if (factual == name) return score;
  }
  throw DomainError("unrecognized MBFC factual reporting category: '" + std::string(*factual_reporting) + "'");
}

double normalize_dcs(int encoded) {
  if (encoded < kDcsMin || encoded > kDcsMax) {
    throw DomainError("encoded DCS out of range [-3, 4]: " + std::to_string(encoded));
  }
  return static_cast<double>(encoded - kDcsMin) / static_cast<double>(kDcsMax - kDcsMin);
}

DcsRecord DcsRecord::from_ratings(std::string domain, std::optional<std::string> bias,
                                  std::optional<std::string> factual,
                                  std::optional<std::string> credibility) {
  DcsRecord r;
  r.domain = std::move(domain);
  r.bias_rating = std::move(bias);
  r.factual_reporting = std::move(factual);
  r.credibility_rating = std::move(credibility);
  r.encoded = encode_dcs(r.factual_reporting, r.credibility_rating);
  r.normalized = normalize_dcs(r.encoded);
  return r;
}

DcsRecord DcsRecord::absent(std::string domain) {
  return from_ratings(std::move(domain), std::nullopt, std::nullopt, std::nullopt);
}

void to_json(nlohmann::json& j, const DcsRecord& r) {
  j = nlohmann::json{{"domain", r.domain},
                     {"encoded", r.encoded},
                     {"normalized", r.normalized},
                     {"fetched_at", r.fetched_at}};
  if (r.bias_rating) j["bias_rating"] = *r.bias_rating;
  if (r.factual_reporting) j["factual_reporting"] = *r.factual_reporting;
  if (r.credibility_rating) j["credibility_rating"] = *r.credibility_rating;
  if (r.parse_failure) j["parse_failure"] = true;
}

void from_json(const nlohmann::json& j, DcsRecord& r) {
  auto opt = [&](const char* key) -> std::optional<std::string> {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
  };
  r = DcsRecord::from_ratings(j.at("domain").get<std::string>(), opt("bias_rating"),
                              opt("factual_reporting"), opt("credibility_rating"));
  if (j.contains("encoded") && j["encoded"].get<int>() != r.encoded) {
    throw DataError("DCS record for " + r.domain + " has encoded=" +
                    std::to_string(j["encoded"].get<int>()) + " but its ratings encode to " +
                    std::to_string(r.encoded));
  }
  r.parse_failure = j.value("parse_failure", false);
  r.fetched_at = j.value("fetched_at", std::int64_t{0});
}

MbfcPage parse_mbfc_page(std::string_view markup) {
  static constexpr std::array<std::string_view, 7> kFactual = {
      "satire", "very low", "low", "mixed", "mostly factual", "high", "very high"};
  static constexpr std::array<std::string_view, 6> kCredibility = {
      "high credibility", "medium credibility", "low credibility", "high", "medium", "low"};
  static constexpr std::array<std::string_view, 14> kBias = {
      "extreme left", "extreme right", "far left", "far right", "left center", "right center",
      "least biased", "left", "right", "pro science", "conspiracy pseudoscience",
      "questionable", "satire", "center"};

  auto doc = html::Document::parse(markup);
  std::string text = lower_text(html::text_content(doc.root()));
  // normalize hyphens so "left-center" and "mostly-factual" match table entries
  std::replace(text.begin(), text.end(), '-', ' ');

  MbfcPage page;
  auto value_after = [&](std::string_view label) -> std::optional<std::string> {
    auto pos = text.find(label);
    if (pos == std::string::npos) return std::nullopt;
    std::size_t v = pos + label.size();
    while (v < text.size() && (text[v] == ' ' || text[v] == ':')) ++v;
    return text.substr(v, 64);
  };

  if (auto v = value_after("factual reporting")) {
    page.found = true;
    page.factual_reporting = match_prefix(*v, kFactual);
    if (!page.factual_reporting) page.parse_failure = true;
  }
  if (auto v = value_after("credibility rating")) {
    page.found = true;
    page.credibility_rating = match_prefix(*v, kCredibility);
    if (!page.credibility_rating) {
      page.parse_failure = true;
    } else if (page.credibility_rating->find("credibility") == std::string::npos) {
      *page.credibility_rating += " credibility";
    }
  }
  if (auto v = value_after("bias rating")) {
    page.found = true;
    page.bias_rating = match_prefix(*v, kBias);
    if (!page.bias_rating) page.parse_failure = true;
  }
  if (page.parse_failure) {
    page.bias_rating.reset();
    page.factual_reporting.reset();
    page.credibility_rating.reset();
  }
  return page;
}

// ---------------------------------------------------------------------------

DcsCache::DcsCache(const std::string& path) {
  int rc = sqlite3_open_v2(path.c_str(), &db_,
                           SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX, nullptr);
  if (rc != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : sqlite3_errstr(rc);
    sqlite3_close(db_);
    db_ = nullptr;
    throw DataError("cannot open DCS cache " + path + ": " + msg);
  }
  check_sqlite(sqlite3_exec(db_,
                            "CREATE TABLE IF NOT EXISTS dcs ("
                            " domain TEXT PRIMARY KEY,"
                            " record TEXT NOT NULL,"
                            " fetched_at INTEGER NOT NULL)",
                            nullptr, nullptr, nullptr),
               db_, "create table");
}

DcsCache::~DcsCache() { sqlite3_close(db_); }

std::optional<DcsRecord> DcsCache::get(const std::string& domain) const {
  std::shared_lock lock(mutex_);
  Statement st(db_, "SELECT record FROM dcs WHERE domain = ?1");
  sqlite3_bind_text(st.stmt, 1, domain.c_str(), -1, SQLITE_TRANSIENT);
  int rc = sqlite3_step(st.stmt);
  if (rc == SQLITE_DONE) return std::nullopt;
  check_sqlite(rc, db_, "select");
  auto text = reinterpret_cast<const char*>(sqlite3_column_text(st.stmt, 0));
  return nlohmann::json::parse(text).get<DcsRecord>();
}

void DcsCache::put(const DcsRecord& record) {
  std::unique_lock lock(mutex_);
  Statement st(db_, "INSERT OR REPLACE INTO dcs (domain, record, fetched_at) VALUES (?1, ?2, ?3)");
  std::string json = nlohmann::json(record).dump();
  sqlite3_bind_text(st.stmt, 1, record.domain.c_str(), -1, SQLITE_TRANSIENT);
  sqlite3_bind_text(st.stmt, 2, json.c_str(), -1, SQLITE_TRANSIENT);
  sqlite3_bind_int64(st.stmt, 3, record.fetched_at);
  check_sqlite(sqlite3_step(st.stmt), db_, "insert");
}

std::vector<DcsRecord> DcsCache::all() const {
  std::shared_lock lock(mutex_);
  Statement st(db_, "SELECT record FROM dcs ORDER BY domain");
  std::vector<DcsRecord> out;
  int rc;
  while ((rc = sqlite3_step(st.stmt)) == SQLITE_ROW) {
    auto text = reinterpret_cast<const char*>(sqlite3_column_text(st.stmt, 0));
    out.push_back(nlohmann::json::parse(text).get<DcsRecord>());
  }
  check_sqlite(rc, db_, "scan");
  return out;
}

void DcsCache::export_snapshot(const std::string& path) const { write_dcs_snapshot(path, all()); }

std::size_t DcsCache::import_snapshot(const std::string& path) {
  auto records = read_dcs_snapshot(path);
  for (const auto& r : records) put(r);
  return records.size();
}

std::vector<DcsRecord> read_dcs_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open DCS snapshot " + path);
  std::vector<DcsRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<DcsRecord>());
    } catch (const std::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_dcs_snapshot(const std::string& path, std::vector<DcsRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const DcsRecord& a, const DcsRecord& b) { return a.domain < b.domain; });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& r : records) out << nlohmann::json(r).dump() << '\n';
}

DcsTable::DcsTable(std::vector<DcsRecord> records) {
  for (auto& r : records) {
    std::string key = r.domain;
    records_[std::move(key)] = std::move(r);
  }
}

DcsTable DcsTable::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open DCS source " + path);
  char magic[16] = {};
  in.read(magic, sizeof magic);
  if (in.gcount() == 16 && std::string_view(magic, 15) == "SQLite format 3") {
    in.close();
    DcsCache cache(path);
    return DcsTable(cache.all());
  }
  return DcsTable(read_dcs_snapshot(path));
}

DcsRecord DcsTable::lookup(std::string_view domain) const {
  std::string key = registrable_domain(domain);
  auto it = records_.find(key);
  if (it == records_.end()) it = records_.find(domain);
  if (it == records_.end()) return DcsRecord::absent(key);
  return it->second;
}

DcsLookup::DcsLookup(DcsCache& cache, Fetcher* fetcher, DcsLookupOptions options)
    : cache_(cache), fetcher_(fetcher), options_(std::move(options)) {}

DcsRecord DcsLookup::lookup(const std::string& raw_domain) {
  std::string domain = registrable_domain(raw_domain);
  auto cached = cache_.get(domain);
  std::int64_t now = options_.now();
  if (cached && now - cached->fetched_at < options_.ttl.count()) return *cached;
  if (!fetcher_) {
    if (cached) return *cached;
    throw RetryableError("DCS for " + domain + " not cached and no network access");
  }

  std::string url = replace_all(options_.url_template, "{slug}", domain_brand(domain));
  url = replace_all(url, "{domain}", domain);
  DcsRecord record;
  try {
    MbfcPage page = parse_mbfc_page(fetcher_->get(url));
    if (page.found && !page.parse_failure) {
      record = DcsRecord::from_ratings(domain, page.bias_rating, page.factual_reporting,
                                       page.credibility_rating);
    } else {
      record = DcsRecord::absent(domain);
      record.parse_failure = page.parse_failure;
      if (page.parse_failure) log::warn("MBFC parse failure", {{"domain", domain}, {"url", url}});
    }
  } catch (const RetryableError& e) {
    if (e.status() != 404 && e.status() != 410) throw;
    record = DcsRecord::absent(domain);
  }
  record.fetched_at = now;
  cache_.put(record);
  return record;
}

}  // namespace evver
