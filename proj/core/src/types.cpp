#include "evver/types.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "evver/error.hpp"

namespace evver {
namespace {

constexpr std::array<std::string_view, kNumClasses> kLabelNames = {"fact_checked", "credible",
                                                                   "unreliable"};
constexpr std::array<std::string_view, 6> kSourceNames = {"multifc", "pubhealth", "politifact",
                                                          "fnc",     "nelagt",    "grafn"};

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<int> month_from_name(std::string_view word) {
  static constexpr std::array<std::string_view, 12> kMonths = {
      "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"};
  if (word.size() < 3) return std::nullopt;
  std::string w;
  for (char c : word) w += lower(c);
  for (std::size_t i = 0; i < kMonths.size(); ++i) {
    if (w.compare(0, 3, kMonths[i]) == 0) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

int days_in_month(int year, int month) {
  static constexpr std::array<int, 12> kDays = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  return month == 2 && leap ? 29 : kDays[static_cast<std::size_t>(month - 1)];
}

std::optional<Date> make_date(int y, int m, int d) {
  if (y < 1000 || y > 9999 || m < 1 || m > 12 || d < 1 || d > days_in_month(y, m)) {
    return std::nullopt;
  }
  return Date{y, m, d};
}

// Two-level public suffixes common in news URLs. Not a full public-suffix list.
const std::unordered_set<std::string_view>& two_level_suffixes() {
  static const std::unordered_set<std::string_view> kSuffixes = {
      "co.uk", "org.uk", "ac.uk",  "gov.uk", "me.uk",  "com.au", "net.au", "org.au",
      "gov.au", "co.nz", "org.nz", "co.in",  "co.jp",  "or.jp",  "ne.jp",  "com.br",
      "co.za",  "com.mx", "com.cn", "com.sg", "com.hk", "com.tr", "co.il",  "com.ar",
      "com.ng", "co.ke",  "com.pk", "com.ph", "com.my", "co.kr",  "com.tw", "gov.in"};
  return kSuffixes;
}

}  // namespace

ClassLabel label_from_code(int code) {
  if (code < 0 || code >= kNumClasses) {
    throw DomainError("class label code out of range: " + std::to_string(code));
  }
  return static_cast<ClassLabel>(code);
}

ClassLabel label_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i) {
    if (kLabelNames[i] == name) return static_cast<ClassLabel>(i);
  }
  throw DomainError("unknown class label: " + std::string(name));
}

std::string_view label_name(ClassLabel label) noexcept {
  return kLabelNames[static_cast<std::size_t>(label)];
}

SourceDataset source_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kSourceNames.size(); ++i) {
    if (kSourceNames[i] == name) return static_cast<SourceDataset>(i);
  }
  throw DomainError("unknown source dataset: " + std::string(name));
}

std::string_view source_name(SourceDataset source) noexcept {
  return kSourceNames[static_cast<std::size_t>(source)];
}

std::string_view split_name(SplitName split) noexcept {
  switch (split) {
    case SplitName::train: return "train";
    case SplitName::validation: return "validation";
    case SplitName::test: return "test";
  }
  return "train";
}

std::optional<Date> Date::parse(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) return std::nullopt;

  // ISO: YYYY[-MM[-DD]] with optional time suffix.
  if (text.size() >= 4 && std::all_of(text.begin(), text.begin() + 4, is_digit) &&
      (text.size() == 4 || text[4] == '-' || text[4] == '/')) {
    auto y = to_int(text.substr(0, 4));
    if (text.size() == 4) return make_date(*y, 1, 1);
    std::size_t pos = 5;
    std::size_t end = pos;
    while (end < text.size() && is_digit(text[end])) ++end;
    auto m = to_int(text.substr(pos, end - pos));
    if (!m) return std::nullopt;
    if (end == text.size()) return make_date(*y, *m, 1);
    if (text[end] != text[4]) return std::nullopt;
    pos = end + 1;
    end = pos;
    while (end < text.size() && is_digit(text[end])) ++end;
    auto d = to_int(text.substr(pos, end - pos));
    if (!d) return std::nullopt;
    if (end != text.size() && text[end] != 'T' && text[end] != ' ') return std::nullopt;
    return make_date(*y, *m, *d);
  }

  // US numeric: MM/DD/YYYY.
  if (is_digit(text.front()) && text.find('/') != std::string_view::npos) {
    std::vector<int> parts;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t end = text.find('/', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view piece = text.substr(pos, end - pos);
      if (auto sp = piece.find(' '); sp != std::string_view::npos) piece = piece.substr(0, sp);
      auto v = to_int(piece);
      if (!v) return std::nullopt;
      parts.push_back(*v);
      pos = end + 1;
      if (end == text.size()) break;
    }
    if (parts.size() != 3) return std::nullopt;
    int year = parts[2] < 100 ? 2000 + parts[2] : parts[2];
    return make_date(year, parts[0], parts[1]);
  }

  // Word forms: "January 15, 2020", "15 Jan 2020", "Jan 2020", "Monday, January 15, 2020".
  std::vector<std::string_view> words;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && !std::isalnum(static_cast<unsigned char>(text[pos]))) ++pos;
    std::size_t end = pos;
    while (end < text.size() && std::isalnum(static_cast<unsigned char>(text[end]))) ++end;
    if (end > pos) words.push_back(text.substr(pos, end - pos));
    pos = end;
  }
  std::optional<int> year, month, day;
  for (auto w : words) {
    if (is_alpha(w.front())) {
      if (!month) {
        if (auto m = month_from_name(w)) month = m;
      }
      continue;
    }
    std::string_view digits = w;
    while (!digits.empty() && !is_digit(digits.back())) digits.remove_suffix(1);  // "15th"
    auto v = to_int(digits.substr(0, std::min<std::size_t>(digits.size(), 4)));
    if (!v) continue;
    if (digits.size() == 4 && !year) {
      year = v;
    } else if (digits.size() <= 2 && !day) {
      day = v;
    }
  }
  if (!year || !month) return std::nullopt;
  return make_date(*year, *month, day.value_or(1));
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

std::string normalize_title_key(std::string_view title) {
  std::string out;
  out.reserve(title.size());
  bool pending_space = false;
  for (char c : title) {
    auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      pending_space = !out.empty();
      continue;
    }
    if (u < 0x80 && std::ispunct(u)) continue;
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += lower(c);
  }
  return out;
}

std::string make_article_id(std::string_view title, SourceDataset source) {
  std::string key = normalize_title_key(title);
  key += '\x1f';
  key += source_name(source);
  return sha256_hex(key).substr(0, 16);
}

std::string registrable_domain(std::string_view url_or_host) {
  std::string_view s = url_or_host;
  if (auto scheme = s.find("://"); scheme != std::string_view::npos) s.remove_prefix(scheme + 3);
  else if (s.starts_with("//")) s.remove_prefix(2);
  s = s.substr(0, s.find_first_of("/?#"));
  if (auto at = s.rfind('@'); at != std::string_view::npos) s.remove_prefix(at + 1);
  s = s.substr(0, s.find(':'));
  std::string host;
  for (char c : s) host += lower(c);
  while (!host.empty() && host.back() == '.') host.pop_back();
  if (host.empty()) return {};
  if (std::all_of(host.begin(), host.end(), [](char c) { return is_digit(c) || c == '.'; })) {
    return host;
  }

  std::vector<std::string_view> labels;
  std::string_view hv = host;
  std::size_t pos = 0;
  while (pos <= hv.size()) {
    std::size_t end = hv.find('.', pos);
    if (end == std::string_view::npos) end = hv.size();
    labels.push_back(hv.substr(pos, end - pos));
    pos = end + 1;
  }
  if (labels.size() <= 2) {
    return host.starts_with("www.") ? host.substr(4) : host;
  }
  std::size_t keep = 2;
  std::string last_two = std::string(labels[labels.size() - 2]) + "." + std::string(labels.back());
  if (two_level_suffixes().contains(last_two)) keep = 3;
  std::string out;
  for (std::size_t i = labels.size() - keep; i < labels.size(); ++i) {
    if (!out.empty()) out += '.';
    out += labels[i];
  }
  return out;
}

std::string domain_brand(std::string_view registrable) {
  return std::string(registrable.substr(0, registrable.find('.')));
}

std::string with_thousands(std::size_t n) {
  std::string digits = std::to_string(n);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(2 * len, '0');
  for (unsigned i = 0; i < len; ++i) {
    out[2 * i] = kHex[digest[i] >> 4];
    out[2 * i + 1] = kHex[digest[i] & 0xF];
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const ClassLabel& label) { j = std::string(label_name(label)); }

void from_json(const nlohmann::json& j, ClassLabel& label) {
  if (j.is_number_integer()) {
    label = label_from_code(j.get<int>());
  } else {
    label = label_from_name(j.get<std::string>());
  }
}

void to_json(nlohmann::json& j, const Date& date) { j = date.to_string(); }

void from_json(const nlohmann::json& j, Date& date) {
  auto parsed = Date::parse(j.get<std::string>());
  if (!parsed) throw DataError("unparseable date: " + j.get<std::string>());
  date = *parsed;
}

void to_json(nlohmann::json& j, const Article& a) {
  j = nlohmann::json{{"id", a.id},         {"title", a.title},   {"date", a.date},
                     {"url", a.url},       {"domain", a.domain}, {"topic", a.topic},
                     {"label", a.label},   {"source_dataset", std::string(source_name(a.source_dataset))}};
  if (a.body) j["body"] = *a.body;
}

void from_json(const nlohmann::json& j, Article& a) {
  a.id = j.at("id").get<std::string>();
  a.title = j.at("title").get<std::string>();
  if (auto it = j.find("body"); it != j.end() && !it->is_null()) {
    a.body = it->get<std::string>();
  } else {
    a.body.reset();
  }
  a.date = j.at("date").get<Date>();
  a.url = j.value("url", std::string{});
  a.domain = j.value("domain", std::string{});
  a.topic = j.value("topic", std::string{});
  a.label = j.at("label").get<ClassLabel>();
  a.source_dataset = source_from_name(j.at("source_dataset").get<std::string>());
}

void to_json(nlohmann::json& j, const EvidenceItem& e) {
  j = nlohmann::json{{"id", e.id},
                     {"text", e.text},
                     {"kind", e.kind == EvidenceKind::short_text ? "short" : "long"}};
  if (e.domain) j["domain"] = *e.domain;
}

void from_json(const nlohmann::json& j, EvidenceItem& e) {
  e.id = j.at("id").get<std::string>();
  e.text = j.at("text").get<std::string>();
  if (auto it = j.find("domain"); it != j.end() && !it->is_null()) {
    e.domain = it->get<std::string>();
  } else {
    e.domain.reset();
  }
  std::string kind = j.value("kind", std::string("short"));
  if (kind == "short") e.kind = EvidenceKind::short_text;
  else if (kind == "long") e.kind = EvidenceKind::long_text;
  else throw DataError("unknown evidence kind: " + kind);
}

void to_json(nlohmann::json& j, const SplitSet& s) {
  j = nlohmann::json{{"train", s.train.article_ids},
                     {"validation", s.validation.article_ids},
                     {"test", s.test.article_ids}};
}

void from_json(const nlohmann::json& j, SplitSet& s) {
  s.train = {SplitName::train, j.at("train").get<std::vector<std::string>>()};
  s.validation = {SplitName::validation, j.at("validation").get<std::vector<std::string>>()};
  s.test = {SplitName::test, j.at("test").get<std::vector<std::string>>()};
}

namespace {

template <class T>
std::vector<T> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<T>());
    } catch (const std::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

template <class T>
void write_jsonl(const std::string& path, const std::vector<T>& items) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& item : items) out << nlohmann::json(item).dump() << '\n';
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace

std::vector<Article> read_corpus(const std::string& path) { return read_jsonl<Article>(path); }

void write_corpus(const std::string& path, const std::vector<Article>& articles) {
  write_jsonl(path, articles);
}

std::vector<EvidenceItem> read_evidence(const std::string& path) {
  return read_jsonl<EvidenceItem>(path);
}

void write_evidence(const std::string& path, const std::vector<EvidenceItem>& items) {
  write_jsonl(path, items);
}

}  // namespace evver
