#include "evver/html.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "evver/error.hpp"
#include "evver/types.hpp"

namespace evver::html {
namespace {

using TagSet = std::unordered_set<std::string_view>;

const TagSet kVoid = {"area", "base", "br", "col", "embed", "hr", "img", "input",
                      "link", "meta", "param", "source", "track", "wbr"};
const TagSet kRawText = {"script", "style", "noscript", "template", "xmp", "iframe"};
const TagSet kRcData = {"title", "textarea"};
const TagSet kClosesParagraph = {"address", "article", "aside", "blockquote", "div", "dl",
                                 "fieldset", "footer", "form", "h1", "h2", "h3", "h4", "h5",
                                 "h6", "header", "hr", "main", "nav", "ol", "p", "pre",
                                 "section", "table", "ul", "figure", "figcaption"};
const TagSet kHidden = {"script", "style", "noscript", "template", "head", "iframe"};
const TagSet kBlock = {"address", "article", "aside", "blockquote", "body", "br", "dd", "div",
                       "dl", "dt", "figcaption", "figure", "footer", "form", "h1", "h2", "h3",
                       "h4", "h5", "h6", "header", "hr", "li", "main", "nav", "ol", "p", "pre",
                       "section", "table", "td", "th", "tr", "ul"};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::size_t find_ci(std::string_view hay, std::string_view needle, std::size_t from) {
  if (needle.empty()) return from;
  for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < needle.size(); ++k) {
      if (std::tolower(static_cast<unsigned char>(hay[i + k])) !=
          std::tolower(static_cast<unsigned char>(needle[k]))) {
        ok = false;
        break;
      }
    }
    if (ok) return i;
  }
  return std::string_view::npos;
}

void append_utf8(std::string& out, unsigned long cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool space = false;
  for (char c : s) {
    if (is_space(c)) {
      space = !out.empty();
    } else {
      if (space) out += ' ';
      space = false;
      out += c;
    }
  }
  return out;
}

void add_text(Node& parent, std::string text) {
  if (text.empty()) return;
  if (!parent.children.empty() && parent.children.back()->is_text()) {
    parent.children.back()->text += text;
    return;
  }
  auto node = std::make_unique<Node>();
  node->text = std::move(text);
  node->parent = &parent;
  parent.children.push_back(std::move(node));
}

// ---------------------------------------------------------------------------
// Selectors

struct AttrTest {
  std::string name;
  std::optional<std::string> value;
};

struct Compound {
  std::string tag;  // empty or "*" = any
  std::string id;
  std::vector<std::string> classes;
  std::vector<AttrTest> attrs;
};

using Chain = std::vector<Compound>;

Compound parse_compound(std::string_view s) {
  Compound c;
  std::size_t i = 0;
  auto read_ident = [&] {
    std::size_t start = i;
    while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '-' ||
                            s[i] == '_' || s[i] == '*')) {
      ++i;
    }
    return std::string(s.substr(start, i - start));
  };
  c.tag = to_lower(read_ident());
  while (i < s.size()) {
    char k = s[i++];
    if (k == '.') {
      c.classes.push_back(read_ident());
    } else if (k == '#') {
      c.id = read_ident();
    } else if (k == '[') {
      std::size_t close = s.find(']', i);
      if (close == std::string_view::npos) throw DataError("unterminated [ in selector");
      std::string_view body = s.substr(i, close - i);
      AttrTest t;
      if (auto eq = body.find('='); eq != std::string_view::npos) {
        t.name = to_lower(body.substr(0, eq));
        std::string_view v = body.substr(eq + 1);
        if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
          v = v.substr(1, v.size() - 2);
        }
        t.value = std::string(v);
      } else {
        t.name = to_lower(body);
      }
      c.attrs.push_back(std::move(t));
      i = close + 1;
    } else {
      throw DataError("unsupported selector syntax near '" + std::string(s.substr(i - 1)) + "'");
    }
  }
  return c;
}

std::vector<Chain> parse_selector(std::string_view selector) {
  std::vector<Chain> out;
  std::size_t pos = 0;
  while (pos <= selector.size()) {
    std::size_t comma = selector.find(',', pos);
    if (comma == std::string_view::npos) comma = selector.size();
    std::string_view alt = selector.substr(pos, comma - pos);
    Chain chain;
    std::size_t i = 0;
    while (i < alt.size()) {
      while (i < alt.size() && is_space(alt[i])) ++i;
      std::size_t start = i;
      while (i < alt.size() && !is_space(alt[i])) ++i;
      if (i > start) chain.push_back(parse_compound(alt.substr(start, i - start)));
    }
    if (!chain.empty()) out.push_back(std::move(chain));
    pos = comma + 1;
  }
  if (out.empty()) throw DataError("empty selector");
  return out;
}

bool matches(const Node& n, const Compound& c) {
  if (n.is_text()) return false;
  if (!c.tag.empty() && c.tag != "*" && c.tag != n.tag) return false;
  if (!c.id.empty()) {
    auto id = n.attribute("id");
    if (!id || *id != c.id) return false;
  }
  for (const auto& cls : c.classes) {
    if (!n.has_class(cls)) return false;
  }
  for (const auto& a : c.attrs) {
    auto v = n.attribute(a.name);
    if (!v) return false;
    if (a.value && *v != *a.value) return false;
  }
  return true;
}

bool matches(const Node& n, const Chain& chain) {
  if (!matches(n, chain.back())) return false;
  const Node* cur = n.parent;
  for (std::size_t k = chain.size() - 1; k-- > 0;) {
    while (cur && !matches(*cur, chain[k])) cur = cur->parent;
    if (!cur) return false;
    cur = cur->parent;
  }
  return true;
}

void collect_matches(const Node& n, const std::vector<Chain>& chains,
                     std::vector<const Node*>& out) {
  if (!n.is_text()) {
    for (const auto& chain : chains) {
      if (matches(n, chain)) {
        out.push_back(&n);
        break;
      }
    }
  }
  for (const auto& child : n.children) collect_matches(*child, chains, out);
}

void collect_text(const Node& n, std::string& out) {
  if (n.is_text()) {
    out += n.text;
    return;
  }
  if (kHidden.contains(n.tag)) return;
  bool block = kBlock.contains(n.tag);
  if (block) out += ' ';
  for (const auto& child : n.children) collect_text(*child, out);
  if (block) out += ' ';
}

}  // namespace

std::optional<std::string_view> Node::attribute(std::string_view name) const {
  for (const auto& [k, v] : attributes) {
    if (k == name) return std::string_view(v);
  }
  return std::nullopt;
}

bool Node::has_class(std::string_view cls) const {
  auto v = attribute("class");
  if (!v) return false;
  std::string_view s = *v;
  std::size_t pos = 0;
  while (pos < s.size()) {
    while (pos < s.size() && is_space(s[pos])) ++pos;
    std::size_t end = pos;
    while (end < s.size() && !is_space(s[end])) ++end;
    if (s.substr(pos, end - pos) == cls) return true;
    pos = end;
  }
  return false;
}

std::string decode_entities(std::string_view text) {
  static const std::unordered_map<std::string_view, unsigned long> kNamed = {
      {"amp", '&'},      {"lt", '<'},       {"gt", '>'},       {"quot", '"'},
      {"apos", '\''},    {"nbsp", 0xA0},    {"ndash", 0x2013}, {"mdash", 0x2014},
      {"lsquo", 0x2018}, {"rsquo", 0x2019}, {"ldquo", 0x201C}, {"rdquo", 0x201D},
      {"hellip", 0x2026}, {"copy", 0xA9},   {"reg", 0xAE},     {"trade", 0x2122},
      {"eacute", 0xE9},  {"laquo", 0xAB},   {"raquo", 0xBB},   {"middot", 0xB7}};
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '&') {
      out += text[i];
      continue;
    }
    std::size_t semi = text.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out += '&';
      continue;
    }
    std::string_view name = text.substr(i + 1, semi - i - 1);
    if (!name.empty() && name[0] == '#') {
      unsigned long cp = 0;
      bool ok = name.size() > 1;
      bool hex = ok && (name[1] == 'x' || name[1] == 'X');
      for (std::size_t k = hex ? 2 : 1; ok && k < name.size(); ++k) {
        char c = name[k];
        int d = std::isdigit(static_cast<unsigned char>(c)) ? c - '0'
                : hex && std::isxdigit(static_cast<unsigned char>(c))
                    ? std::tolower(static_cast<unsigned char>(c)) - 'a' + 10
                    : -1;
        if (d < 0) ok = false;
        else cp = cp * (hex ? 16 : 10) + static_cast<unsigned long>(d);
        if (cp > 0x10FFFF) ok = false;
      }
      if (ok && name.size() > (hex ? 2u : 1u)) {
        append_utf8(out, cp);
        i = semi;
        continue;
      }
    } else if (auto it = kNamed.find(name); it != kNamed.end()) {
      append_utf8(out, it->second);
      i = semi;
      continue;
    }
    out += '&';
  }
  return out;
}

std::string strip_tags(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '<' && i + 1 < text.size()) {
      char n = text[i + 1];
      bool tagish = std::isalpha(static_cast<unsigned char>(n)) || n == '/' || n == '!';
      if (tagish) {
        std::size_t close = text.find('>', i + 1);
        if (close != std::string_view::npos) {
          i = close;
          continue;
        }
      }
    }
    out += text[i];
  }
  return out;
}

std::string text_content(const Node& node) {
  std::string raw;
  collect_text(node, raw);
  return collapse_whitespace(raw);
}

Document Document::parse(std::string_view m) {
  Document doc;
  doc.root_ = std::make_unique<Node>();
  doc.root_->tag = "#document";
  Node* cur = doc.root_.get();
  const std::size_t n = m.size();
  std::size_t pos = 0;

  auto close = [&](std::string_view name) {
    for (Node* p = cur; p && p != doc.root_.get(); p = p->parent) {
      if (p->tag == name) {
        cur = p->parent;
        return;
      }
    }
  };

  while (pos < n) {
    if (m[pos] != '<') {
      std::size_t next = m.find('<', pos);
      if (next == std::string_view::npos) next = n;
      add_text(*cur, decode_entities(m.substr(pos, next - pos)));
      pos = next;
      continue;
    }
    if (m.substr(pos, 4) == "<!--") {
      std::size_t end = m.find("-->", pos + 4);
      pos = end == std::string_view::npos ? n : end + 3;
      continue;
    }
    char next = pos + 1 < n ? m[pos + 1] : '\0';
    if (next == '!' || next == '?') {
      std::size_t end = m.find('>', pos);
      pos = end == std::string_view::npos ? n : end + 1;
      continue;
    }
    if (next == '/') {
      std::size_t i = pos + 2;
      std::size_t start = i;
      while (i < n && !is_space(m[i]) && m[i] != '>') ++i;
      std::string name = to_lower(m.substr(start, i - start));
      std::size_t end = m.find('>', i);
      pos = end == std::string_view::npos ? n : end + 1;
      close(name);
      continue;
    }
    if (!std::isalpha(static_cast<unsigned char>(next))) {
      add_text(*cur, "<");
      ++pos;
      continue;
    }

    // start tag
    std::size_t i = pos + 1;
    std::size_t start = i;
    while (i < n && !is_space(m[i]) && m[i] != '>' && m[i] != '/') ++i;
    auto node = std::make_unique<Node>();
    node->tag = to_lower(m.substr(start, i - start));
    bool self_closing = false;
    while (i < n) {
      while (i < n && is_space(m[i])) ++i;
      if (i >= n) break;
      if (m[i] == '>') {
        ++i;
        break;
      }
      if (m[i] == '/') {
        self_closing = true;
        ++i;
        continue;
      }
      std::size_t an = i;
      while (i < n && !is_space(m[i]) && m[i] != '=' && m[i] != '>' && m[i] != '/') ++i;
      std::string attr_name = to_lower(m.substr(an, i - an));
      while (i < n && is_space(m[i])) ++i;
      std::string value;
      if (i < n && m[i] == '=') {
        ++i;
        while (i < n && is_space(m[i])) ++i;
        if (i < n && (m[i] == '"' || m[i] == '\'')) {
          char q = m[i++];
          std::size_t vend = m.find(q, i);
          if (vend == std::string_view::npos) vend = n;
          value = decode_entities(m.substr(i, vend - i));
          i = vend < n ? vend + 1 : n;
        } else {
          std::size_t vs = i;
          while (i < n && !is_space(m[i]) && m[i] != '>') ++i;
          value = decode_entities(m.substr(vs, i - vs));
        }
      }
      if (!attr_name.empty()) node->attributes.emplace_back(std::move(attr_name), std::move(value));
    }
    pos = i;

    const std::string& tag = node->tag;
    if (cur->tag == "p" && kClosesParagraph.contains(tag)) cur = cur->parent;
    if (tag == "li" && cur->tag == "li") cur = cur->parent;
    if ((tag == "td" || tag == "th") && (cur->tag == "td" || cur->tag == "th")) cur = cur->parent;
    if (tag == "tr") {
      for (Node* p = cur; p && p->tag != "table"; p = p->parent) {
        if (p->tag == "tr") {
          cur = p->parent;
          break;
        }
      }
    }

    node->parent = cur;
    Node* raw = node.get();
    cur->children.push_back(std::move(node));

    if (kVoid.contains(raw->tag) || self_closing) continue;
    if (kRawText.contains(raw->tag) || kRcData.contains(raw->tag)) {
      std::string closing = "</" + raw->tag;
      std::size_t end = find_ci(m, closing, pos);
      if (end == std::string_view::npos) end = n;
      std::string_view content = m.substr(pos, end - pos);
      add_text(*raw, kRcData.contains(raw->tag) ? decode_entities(content) : std::string(content));
      std::size_t gt = end < n ? m.find('>', end) : std::string_view::npos;
      pos = gt == std::string_view::npos ? n : gt + 1;
      continue;
    }
    cur = raw;
  }
  return doc;
}

std::vector<const Node*> Document::select(std::string_view selector) const {
  auto chains = parse_selector(selector);
  std::vector<const Node*> out;
  collect_matches(*root_, chains, out);
  return out;
}

std::optional<std::string> Document::meta(std::string_view key) const {
  for (const Node* n : select("meta")) {
    auto prop = n->attribute("property");
    auto name = n->attribute("name");
    if ((prop && *prop == key) || (name && *name == key)) {
      if (auto content = n->attribute("content")) return std::string(*content);
    }
  }
  return std::nullopt;
}

}  // namespace evver::html

namespace evver {
namespace {

using html::Node;

const std::unordered_set<std::string_view> kBoilerplate = {
    "script", "style", "noscript", "template", "nav",    "header", "footer",
    "aside",  "form",  "iframe",   "svg",      "button", "select", "head"};
const std::unordered_set<std::string_view> kInline = {
    "a",    "abbr", "b",    "bdi",  "cite", "code", "em", "i",    "mark", "q",
    "s",    "small", "span", "strong", "sub", "sup",  "time", "u",  "br",   "font"};
const std::unordered_set<std::string_view> kParagraph = {"p", "pre", "blockquote"};

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

struct Unit {
  std::string text;
  std::size_t link_chars = 0;
};

void gather(const Node& n, std::string& text, std::string& link_text, bool in_link) {
  if (n.is_text()) {
    text += n.text;
    if (in_link) link_text += n.text;
    return;
  }
  if (kBoilerplate.contains(n.tag)) return;
  bool link = in_link || n.tag == "a";
  bool block = n.tag == "br" || !kInline.contains(n.tag);
  if (block) text += ' ';
  for (const auto& c : n.children) gather(*c, text, link_text, link);
  if (block) text += ' ';
}

Unit finish_unit(const std::string& raw, const std::string& raw_links) {
  Unit u;
  u.text = collapse(html::strip_tags(raw));
  u.link_chars = collapse(raw_links).size();
  return u;
}

bool keep_unit(const Unit& u) {
  return !u.text.empty() && 2 * u.link_chars <= u.text.size();
}

// Paragraph units held directly by `n`: loose inline text runs and
// p/pre/blockquote children.
std::vector<Unit> direct_units(const Node& n) {
  std::vector<Unit> units;
  std::string loose, loose_links;
  auto flush = [&] {
    Unit u = finish_unit(loose, loose_links);
    if (keep_unit(u)) units.push_back(std::move(u));
    loose.clear();
    loose_links.clear();
  };
  for (const auto& child : n.children) {
    if (child->is_text() || kInline.contains(child->tag)) {
      gather(*child, loose, loose_links, false);
    } else if (kParagraph.contains(child->tag)) {
      flush();
      std::string t, l;
      gather(*child, t, l, false);
      Unit u = finish_unit(t, l);
      if (keep_unit(u)) units.push_back(std::move(u));
    } else {
      flush();
    }
  }
  flush();
  return units;
}

std::size_t score(const std::vector<Unit>& units) {
  std::size_t total = 0;
  for (const auto& u : units) total += u.text.size();
  return total;
}

void best_block(const Node& n, std::vector<Unit>& best, std::size_t& best_score) {
  if (n.is_text() || kBoilerplate.contains(n.tag)) return;
  auto units = direct_units(n);
  std::size_t s = score(units);
  if (s > best_score) {
    best_score = s;
    best = std::move(units);
  }
  for (const auto& c : n.children) best_block(*c, best, best_score);
}

void paragraphs_within(const Node& n, std::vector<Unit>& out) {
  if (n.is_text() || kBoilerplate.contains(n.tag)) return;
  if (kParagraph.contains(n.tag)) {
    std::string t, l;
    gather(n, t, l, false);
    Unit u = finish_unit(t, l);
    if (!u.text.empty()) out.push_back(std::move(u));
    return;
  }
  for (const auto& c : n.children) paragraphs_within(*c, out);
}

std::string join_units(const std::vector<Unit>& units) {
  std::string out;
  for (const auto& u : units) {
    if (!out.empty()) out += "\n\n";
    out += u.text;
  }
  return out;
}

std::optional<std::string> clean_title(std::string_view raw) {
  std::string t = collapse(html::strip_tags(raw));
  if (t.empty()) return std::nullopt;
  return t;
}

}  // namespace

std::vector<ExtractionRule> load_extraction_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open extraction rules " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  const nlohmann::json& arr = j.is_object() ? j.at("rules") : j;
  std::vector<ExtractionRule> rules;
  for (const auto& r : arr) {
    ExtractionRule rule;
    rule.domain = registrable_domain(r.at("domain").get<std::string>());
    if (r.contains("title_selector")) rule.title_selector = r["title_selector"].get<std::string>();
    if (r.contains("body_selector")) rule.body_selector = r["body_selector"].get<std::string>();
    if (!rule.title_selector && !rule.body_selector) {
      throw DataError("extraction rule for " + rule.domain + " has no selector");
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

const ExtractionRule* match_rule(const std::vector<ExtractionRule>& rules, std::string_view url) {
  std::string domain = registrable_domain(url);
  for (const auto& r : rules) {
    if (r.domain == domain) return &r;
  }
  return nullptr;
}

ExtractedArticle extract_article(std::string_view markup, const ExtractionRule* rule) {
  auto doc = html::Document::parse(markup);
  ExtractedArticle out;
  std::string body;

  if (rule && rule->title_selector) {
    auto hits = doc.select(*rule->title_selector);
    if (!hits.empty()) {
      out.title = clean_title(html::text_content(*hits.front()));
      out.used_rule = true;
    }
  }
  if (rule && rule->body_selector) {
    std::vector<Unit> units;
    for (const Node* hit : doc.select(*rule->body_selector)) {
      std::vector<Unit> paras;
      paragraphs_within(*hit, paras);
      if (paras.empty()) {
        std::string t, l;
        gather(*hit, t, l, false);
        Unit u = finish_unit(t, l);
        if (!u.text.empty()) paras.push_back(std::move(u));
      }
      for (auto& p : paras) units.push_back(std::move(p));
    }
    if (!units.empty()) {
      body = join_units(units);
      out.used_rule = true;
    }
  }

  if (!out.title) {
    if (auto og = doc.meta("og:title")) out.title = clean_title(*og);
  }
  if (!out.title) {
    auto titles = doc.select("title");
    if (!titles.empty()) out.title = clean_title(html::text_content(*titles.front()));
  }
  if (!out.title) {
    auto h1 = doc.select("h1");
    if (!h1.empty()) out.title = clean_title(html::text_content(*h1.front()));
  }

  if (body.empty()) {
    std::vector<Unit> best;
    std::size_t best_score = 0;
    best_block(doc.root(), best, best_score);
    body = join_units(best);
  }

  if (!body.empty() && body.size() < kThinContentChars) {
    out.thin_content = true;
  } else if (!body.empty()) {
    out.body = std::move(body);
  }
  return out;
}

}  // namespace evver
