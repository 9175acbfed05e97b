#include "evver/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "evver/csv.hpp"
#include "evver/error.hpp"
#include "evver/log.hpp"

namespace evver {
namespace {

const std::set<std::string, std::less<>> kArticleFields = {"title", "body", "date",
                                                           "url",   "domain", "topic"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string collapse(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
    } else {
      if (space) out += ' ';
      space = false;
      out += c;
    }
  }
  return out;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
        std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else if (s[i] == '+') {
      out += ' ';
    } else {
      out += s[i];
    }
  }
  return out;
}

std::vector<std::string_view> path_segments(std::string_view url) {
  std::string_view s = url;
  if (auto p = s.find("://"); p != std::string_view::npos) {
    s.remove_prefix(p + 3);
    auto slash = s.find('/');
    s = slash == std::string_view::npos ? std::string_view{} : s.substr(slash);
  }
  s = s.substr(0, s.find_first_of("?#"));
  std::vector<std::string_view> segs;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t end = s.find('/', pos);
    if (end == std::string_view::npos) end = s.size();
    if (end > pos) segs.push_back(s.substr(pos, end - pos));
    pos = end + 1;
  }
  return segs;
}

// Removes every case-insensitive occurrence of `needle` from `text`.
std::string erase_ci(std::string text, std::string_view needle) {
  if (needle.empty()) return text;
  std::string low = lower(text);
  std::string n = lower(needle);
  std::string out;
  std::size_t pos = 0;
  while (true) {
    std::size_t hit = low.find(n, pos);
    if (hit == std::string::npos) break;
    out.append(text, pos, hit - pos);
    out += ' ';
    pos = hit + n.size();
  }
  out.append(text, pos);
  return out;
}

std::string erase_word_ci(std::string_view text, std::string_view word) {
  std::string out;
  std::string w = lower(word);
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::isalnum(static_cast<unsigned char>(text[i]))) {
      std::size_t j = i;
      while (j < text.size() && std::isalnum(static_cast<unsigned char>(text[j]))) ++j;
      if (lower(text.substr(i, j - i)) != w) out.append(text.substr(i, j - i));
      i = j;
    } else {
      out += text[i++];
    }
  }
  return out;
}

std::optional<ClassLabel> parse_label(const nlohmann::json& j) {
  if (j.is_number_integer()) return label_from_code(j.get<int>());
  return label_from_name(j.get<std::string>());
}

// One upstream row, keyed by column name.
using Row = std::map<std::string, std::string, std::less<>>;

std::string json_scalar(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return {};
  if (v.is_array()) return v.empty() ? std::string{} : json_scalar(v.front());
  return v.dump();
}

InputFormat resolve_format(const SourceAdapterConfig& c) {
  if (c.format != InputFormat::automatic) return c.format;
  const auto& p = c.input_path;
  auto ends = [&](std::string_view ext) { return p.size() >= ext.size() && lower(p.substr(p.size() - ext.size())) == ext; };
  if (ends(".jsonl") || ends(".json") || ends(".ndjson")) return InputFormat::jsonl;
  return InputFormat::csv;
}

}  // namespace

void to_json(nlohmann::json& j, const SkipRecord& r) {
  j = nlohmann::json{{"row", r.row}, {"reason", r.reason}};
}

void SourceAdapterConfig::validate() const {
  std::set<std::string> covered;
  for (const auto& [column, field] : field_mapping) {
    if (!kArticleFields.contains(field)) {
      throw DomainError("field_mapping: unknown article field '" + field + "' for column '" +
                        column + "'");
    }
    covered.insert(field);
  }
  if (!covered.contains("url")) throw DomainError("field_mapping must cover 'url'");
  if (!covered.contains("date") && !date_from_url) {
    throw DomainError("field_mapping must cover 'date'");
  }
  if (!covered.contains("title") && !covered.contains("url")) {
    throw DomainError("field_mapping must cover 'title' or 'url'");
  }
  if (!label_assignment.fixed && label_assignment.column.empty()) {
    throw DomainError("label_assignment needs a fixed label or a column rule");
  }
}

SourceAdapterConfig default_adapter(SourceDataset source, std::string input_path) {
  SourceAdapterConfig c;
  c.source_dataset = source;
  c.input_path = std::move(input_path);
  switch (source) {
    case SourceDataset::multifc:
      c.format = InputFormat::csv;
      c.delimiter = '\t';
      c.field_mapping = {{"articleTitle", "title"},
                         {"claimURL", "url"},
                         {"publishDate", "date"},
                         {"categories", "topic"}};
      c.label_assignment.fixed = ClassLabel::fact_checked;
      break;
    case SourceDataset::pubhealth:
      c.field_mapping = {{"claim", "title"},
                         {"main_text", "body"},
                         {"date_published", "date"},
                         {"sources", "url"},
                         {"subjects", "topic"}};
      c.label_assignment.fixed = ClassLabel::fact_checked;
      break;
    case SourceDataset::politifact:
      c.field_mapping = {{"factcheck_analysis_link", "url"}, {"factcheck_date", "date"}};
      c.title_from_url = true;
      c.label_assignment.fixed = ClassLabel::fact_checked;
      break;
    case SourceDataset::fnc:
      c.field_mapping = {{"url", "url"},
                         {"content", "body"},
                         {"domain", "domain"},
                         {"scraped_at", "date"},
                         {"topic", "topic"}};
      c.title_from_url = true;
      c.date_from_url = true;
      c.label_assignment.column = "type";
      c.label_assignment.values = {{"reliable", ClassLabel::credible}};
      break;
    case SourceDataset::nelagt:
      c.field_mapping = {{"title", "title"},   {"content", "body"}, {"date", "date"},
                         {"url", "url"},       {"source", "domain"}, {"topic", "topic"}};
      c.label_assignment.column = "label";
      c.label_assignment.values = {{"0", ClassLabel::credible},
                                   {"reliable", ClassLabel::credible},
                                   {"2", ClassLabel::unreliable},
                                   {"unreliable", ClassLabel::unreliable}};
      break;
    case SourceDataset::grafn:
      c.field_mapping = {{"title", "title"},
                         {"text", "body"},
                         {"published", "date"},
                         {"site_url", "url"},
                         {"topic", "topic"}};
      c.label_assignment.fixed = ClassLabel::unreliable;
      c.filters = {{"type", {"bs", "conspiracy", "satire", "junksci", "fake"}},
                   {"language", {"english"}}};
      break;
  }
  return c;
}

SourceAdapterConfig adapter_from_json(const nlohmann::json& j, SourceAdapterConfig c) {
  if (j.contains("source_dataset")) {
    c.source_dataset = source_from_name(j["source_dataset"].get<std::string>());
  }
  if (j.contains("input_path")) c.input_path = j["input_path"].get<std::string>();
  if (j.contains("field_mapping")) {
    c.field_mapping = j["field_mapping"].get<std::map<std::string, std::string>>();
  }
  if (j.contains("label_assignment")) {
    const auto& la = j["label_assignment"];
    c.label_assignment = {};
    if (la.contains("fixed")) c.label_assignment.fixed = parse_label(la["fixed"]);
    if (la.contains("column")) c.label_assignment.column = la["column"].get<std::string>();
    if (la.contains("values")) {
      for (const auto& [k, v] : la["values"].items()) {
        c.label_assignment.values[lower(k)] = *parse_label(v);
      }
    }
  }
  if (j.contains("filters")) {
    c.filters.clear();
    for (const auto& f : j["filters"]) {
      RowFilter rf{f.at("column").get<std::string>(), {}};
      for (const auto& v : f.at("values")) rf.allowed.push_back(lower(v.get<std::string>()));
      c.filters.push_back(std::move(rf));
    }
  }
  if (j.contains("format")) {
    auto f = j["format"].get<std::string>();
    c.format = f == "csv" ? InputFormat::csv : f == "jsonl" ? InputFormat::jsonl : InputFormat::automatic;
  }
  if (j.contains("delimiter")) {
    auto d = j["delimiter"].get<std::string>();
    c.delimiter = d == "\\t" ? '\t' : d.empty() ? ',' : d[0];
  }
  if (j.contains("title_from_url")) c.title_from_url = j["title_from_url"].get<bool>();
  if (j.contains("date_from_url")) c.date_from_url = j["date_from_url"].get<bool>();
  return c;
}

std::string title_from_url(std::string_view url) {
  static const std::set<std::string, std::less<>> kJunk = {"index", "amp", "print", "default"};
  static constexpr std::array<std::string_view, 7> kExtensions = {".html", ".htm", ".shtml", ".php",
                                                                  ".aspx", ".asp", ".jsp"};
  auto segs = path_segments(url);
  std::string domain = registrable_domain(url);
  for (auto it = segs.rbegin(); it != segs.rend(); ++it) {
    std::string seg = lower(percent_decode(*it));
    for (auto ext : kExtensions) {
      if (seg.size() > ext.size() && seg.ends_with(ext)) {
        seg.resize(seg.size() - ext.size());
        break;
      }
    }
    if (all_digits(seg) || kJunk.contains(seg)) continue;
    for (auto& c : seg) {
      if (c == '-' || c == '_' || c == '+' || c == '.') c = ' ';
    }
    // trailing article ids ("...-claim-1234567")
    std::vector<std::string> tokens;
    std::size_t pos = 0;
    while (pos < seg.size()) {
      while (pos < seg.size() && seg[pos] == ' ') ++pos;
      std::size_t end = seg.find(' ', pos);
      if (end == std::string::npos) end = seg.size();
      if (end > pos) tokens.emplace_back(seg.substr(pos, end - pos));
      pos = end;
    }
    while (!tokens.empty() && all_digits(tokens.back()) && tokens.back().size() >= 6) {
      tokens.pop_back();
    }
    std::string joined;
    for (const auto& t : tokens) {
      if (!joined.empty()) joined += ' ';
      joined += t;
    }
    std::string title = strip_brand_tokens(joined, domain);
    if (!title.empty() && !all_digits(title)) return title;
  }
  throw DomainError("no usable path segment in URL: " + std::string(url));
}

std::string strip_brand_tokens(std::string_view title, std::string_view domain) {
  std::string out = erase_ci(std::string(title), "politifact");
  if (!domain.empty()) {
    out = erase_ci(out, domain);
    std::string brand = domain_brand(domain);
    if (!brand.empty()) out = erase_word_ci(out, brand);
  }
  std::string collapsed = collapse(out);
  // brand removal can leave dangling separators ("- Claim", "Claim |")
  auto is_sep = [](char c) { return c == '-' || c == '|' || c == ':' || c == ' '; };
  std::size_t b = 0, e = collapsed.size();
  while (b < e && is_sep(collapsed[b])) ++b;
  while (e > b && is_sep(collapsed[e - 1])) --e;
  return collapsed.substr(b, e - b);
}

std::optional<Date> date_from_url(std::string_view url) {
  auto segs = path_segments(url);
  for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
    if (segs[i].size() != 4 || !all_digits(segs[i])) continue;
    int year = std::stoi(std::string(segs[i]));
    if (year < 1990 || year > 2100) continue;
    std::string month_text(segs[i + 1]);
    std::string day_text = i + 2 < segs.size() && segs[i + 2].size() <= 2 && all_digits(segs[i + 2])
                               ? std::string(segs[i + 2])
                               : "1";
    std::optional<Date> d;
    if (all_digits(month_text) && month_text.size() <= 2) {
      d = Date::parse(std::to_string(year) + "-" + month_text + "-" + day_text);
    } else {
      d = Date::parse(month_text + " " + day_text + " " + std::to_string(year));
    }
    if (d) return d;
  }
  return std::nullopt;
}

IngestStats ingest_source(const SourceAdapterConfig& config,
                          const std::function<void(Article&&)>& on_article,
                          const std::function<void(const SkipRecord&)>& on_skip) {
  config.validate();
  std::ifstream in(config.input_path, std::ios::binary);
  if (!in) throw DataError("cannot open input " + config.input_path);

  IngestStats stats;
  auto skip = [&](std::size_t row, std::string reason) {
    ++stats.skipped_by_reason[reason];
    if (on_skip) on_skip(SkipRecord{row, std::move(reason)});
  };

  auto process = [&](std::size_t rowno, const Row& row) {
    auto column = [&](std::string_view name) -> std::string {
      auto it = row.find(name);
      return it == row.end() ? std::string{} : trim(it->second);
    };
    for (const auto& f : config.filters) {
      std::string v = lower(column(f.column));
      if (std::find(f.allowed.begin(), f.allowed.end(), v) == f.allowed.end()) {
        skip(rowno, "filtered:" + f.column);
        return;
      }
    }

    std::map<std::string, std::string> fields;
    for (const auto& [col, field] : config.field_mapping) {
      std::string v = column(col);
      if (!v.empty() && fields[field].empty()) fields[field] = std::move(v);
    }

    Article a;
    a.source_dataset = config.source_dataset;
    if (config.label_assignment.fixed) {
      a.label = *config.label_assignment.fixed;
    } else {
      std::string v = lower(column(config.label_assignment.column));
      auto it = config.label_assignment.values.find(v);
      if (it == config.label_assignment.values.end()) {
        skip(rowno, "unmapped_label");
        return;
      }
      a.label = it->second;
    }

    a.url = fields["url"];
    // sources like PUBHEALTH pack several URLs into one cell
    if (auto cut = a.url.find_first_of(", "); cut != std::string::npos && a.url.find("://") != std::string::npos) {
      a.url = a.url.substr(0, cut);
    }
    a.domain = fields["domain"].empty() ? registrable_domain(a.url) : registrable_domain(fields["domain"]);

    std::string title = config.title_from_url ? std::string{} : fields["title"];
    if (title.empty()) {
      if (a.url.empty()) {
        skip(rowno, "missing_title_and_url");
        return;
      }
      try {
        title = title_from_url(a.url);
      } catch (const DomainError&) {
        skip(rowno, "no_title_in_url");
        return;
      }
    }
    a.title = strip_brand_tokens(collapse(title), a.domain);
    if (a.title.empty()) {
      skip(rowno, "empty_title");
      return;
    }

    std::optional<Date> date;
    if (config.date_from_url) date = date_from_url(a.url);
    if (!date && !fields["date"].empty()) date = Date::parse(fields["date"]);
    if (!date) {
      skip(rowno, fields["date"].empty() && !config.date_from_url ? "missing_date" : "unparseable_date");
      return;
    }
    a.date = *date;

    if (!fields["body"].empty()) a.body = fields["body"];
    a.topic = lower(fields["topic"]);
    a.id = make_article_id(a.title, a.source_dataset);
    ++stats.emitted;
    on_article(std::move(a));
  };

  if (resolve_format(config) == InputFormat::jsonl) {
    std::string line;
    std::size_t rowno = 0;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      ++rowno;
      ++stats.rows;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const std::exception&) {
        skip(rowno, "malformed_json");
        continue;
      }
      if (!j.is_object()) {
        skip(rowno, "malformed_json");
        continue;
      }
      Row row;
      for (const auto& [k, v] : j.items()) row[k] = json_scalar(v);
      process(rowno, row);
    }
  } else {
    CsvReader reader(in, config.delimiter);
    std::vector<std::string> header, fields;
    if (!reader.next(header)) return stats;
    if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);
    std::size_t rowno = 0;
    while (reader.next(fields)) {
      if (fields.size() == 1 && trim(fields[0]).empty()) continue;
      ++rowno;
      ++stats.rows;
      if (fields.size() != header.size()) {
        skip(rowno, "column_count_mismatch");
        continue;
      }
      Row row;
      for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = fields[i];
      process(rowno, row);
    }
  }
  return stats;
}

IngestResult ingest_source(const SourceAdapterConfig& config) {
  IngestResult result;
  result.stats = ingest_source(
      config, [&](Article&& a) { result.articles.push_back(std::move(a)); },
      [&](const SkipRecord& r) { result.skipped.push_back(r); });
  return result;
}

EnrichStats fill_missing_bodies(std::vector<Article>& articles, Fetcher& fetcher,
                                const std::vector<ExtractionRule>& rules, std::size_t workers) {
  std::vector<std::size_t> todo;
  std::vector<std::string> urls;
  for (std::size_t i = 0; i < articles.size(); ++i) {
    if (!articles[i].body && !articles[i].url.empty()) {
      todo.push_back(i);
      urls.push_back(articles[i].url);
    }
  }
  EnrichStats stats;
  stats.attempted = todo.size();
  auto outcomes = fetch_many(fetcher, urls, rules, workers);
  for (std::size_t k = 0; k < todo.size(); ++k) {
    const auto& o = outcomes[k];
    if (!o.article) {
      ++stats.failed;
      log::warn("fetch failed", {{"url", o.url}, {"error", o.error}});
      continue;
    }
    if (o.article->thin_content) ++stats.thin;
    if (o.article->body) {
      articles[todo[k]].body = *o.article->body;
      ++stats.filled;
    }
  }
  return stats;
}

}  // namespace evver
