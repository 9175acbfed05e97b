#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace evver::html {

struct Node {
  std::string tag;   // lowercase element name; empty for text nodes
  std::string text;  // decoded text for text nodes
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<std::unique_ptr<Node>> children;
  Node* parent = nullptr;

  bool is_text() const { return tag.empty(); }
  std::optional<std::string_view> attribute(std::string_view name) const;
  bool has_class(std::string_view cls) const;
};

/// Tolerant HTML tree builder: unclosed elements, stray end tags, raw-text
/// script/style bodies, comments and doctype are all handled without error.
class Document {
 public:
  static Document parse(std::string_view markup);

  const Node& root() const { return *root_; }

  /// CSS subset: type, `*`, `.class`, `#id`, `[attr]`, `[attr=value]`,
  /// descendant combinator (whitespace) and `,` alternatives.
  std::vector<const Node*> select(std::string_view selector) const;

  /// Value of `<meta property|name=key content=...>`.
  std::optional<std::string> meta(std::string_view key) const;

 private:
  std::unique_ptr<Node> root_;
};

std::string decode_entities(std::string_view text);

/// Visible text below `node`, whitespace collapsed. Script/style bodies are
/// never included.
std::string text_content(const Node& node);

/// Removes anything shaped like a markup tag (`<tag ...>`, `</tag>`,
/// `<!-- -->`) from already-decoded text.
std::string strip_tags(std::string_view text);

}  // namespace evver::html

namespace evver {

/// Per-domain extraction directive. Selectors use the CSS subset of
/// `html::Document::select`.
struct ExtractionRule {
  std::string domain;
  std::optional<std::string> title_selector;
  std::optional<std::string> body_selector;
};

std::vector<ExtractionRule> load_extraction_rules(const std::string& path);

inline constexpr std::size_t kThinContentChars = 200;

struct ExtractedArticle {
  std::optional<std::string> title;
  std::optional<std::string> body;
  bool thin_content = false;  // body found but shorter than kThinContentChars; omitted
  bool used_rule = false;
};

/// Applies `rule` when given, else (or when the rule's body selector matches
/// nothing) the readability fallback: after dropping script, style, nav,
/// header, footer, aside and form regions, the element whose direct
/// paragraph children hold the most non-link text wins.
ExtractedArticle extract_article(std::string_view markup, const ExtractionRule* rule);

const ExtractionRule* match_rule(const std::vector<ExtractionRule>& rules, std::string_view url);

}  // namespace evver
