#include <gtest/gtest.h>

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

#include "evver/error.hpp"
#include "evver/ingest.hpp"
#include "test_support.hpp"

namespace evver {
namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

TEST(TitleFromUrl, PolitifactSlug) {
  EXPECT_EQ(title_from_url("https://www.politifact.com/factchecks/2021/mar/02/joe-biden/biden-said-x/"),
            "biden said x");
}

TEST(TitleFromUrl, EmptyPathIsError) { EXPECT_THROW(title_from_url("https://example.com/"), DomainError); }

TEST(TitleFromUrl, DatedNewsPath) {
  EXPECT_EQ(title_from_url("https://news.site/2019/05/fake-moon-landing-photos"), "fake moon landing photos");
}

TEST(TitleFromUrl, DropsExtensionsAndNumericIds) {
  EXPECT_EQ(title_from_url("https://x.org/world/leaders-meet-in-paris-1234567.html"), "leaders meet in paris");
  EXPECT_EQ(title_from_url("https://x.org/story/some_thing/index.html?utm=1"), "some thing");
}

TEST(StripBrandTokens, RemovesPolitifactAndOwnDomain) {
  EXPECT_EQ(strip_brand_tokens("PolitiFact checks moon claim", "politifact.com"), "checks moon claim");
  EXPECT_EQ(strip_brand_tokens("Reuters: markets rally", "reuters.com"), "markets rally");
  EXPECT_EQ(strip_brand_tokens("Seen on cnn.com today", "cnn.com"), "Seen on today");
}

TEST(DateFromUrl, Variants) {
  EXPECT_EQ(date_from_url("https://a.org/2020/01/15/x"), (Date{2020, 1, 15}));
  EXPECT_EQ(date_from_url("https://a.org/2021/mar/02/x/"), (Date{2021, 3, 2}));
  EXPECT_EQ(date_from_url("https://a.org/2019/05/x"), (Date{2019, 5, 1}));
  EXPECT_FALSE(date_from_url("https://a.org/x"));
}

TEST(IngestSource, PolitifactCsv) {
  auto cfg = default_adapter(SourceDataset::politifact, test::fixture("politifact_sample.csv"));
  auto result = ingest_source(cfg);
  ASSERT_EQ(result.articles.size(), 3u);
  EXPECT_EQ(result.articles[0].title, "biden said x");
  EXPECT_EQ(result.articles[0].date, (Date{2021, 3, 2}));
  EXPECT_EQ(result.articles[0].label, ClassLabel::fact_checked);
  EXPECT_EQ(result.articles[0].source_dataset, SourceDataset::politifact);
  EXPECT_EQ(result.articles[0].domain, "politifact.com");
  EXPECT_EQ(result.articles[1].title, "some claim slug");
  for (const auto& a : result.articles) {
    EXPECT_EQ(lower(a.title).find("politifact"), std::string::npos) << a.title;
  }
  ASSERT_EQ(result.skipped.size(), 1u);
  EXPECT_EQ(result.skipped[0].row, 3u);
  EXPECT_EQ(result.skipped[0].reason, "missing_title_and_url");
  EXPECT_EQ(result.stats.rows, 4u);
  EXPECT_EQ(result.stats.emitted, 3u);
}

TEST(IngestSource, PubhealthBodyWithoutFetching) {
  auto cfg = default_adapter(SourceDataset::pubhealth, test::fixture("pubhealth_sample.jsonl"));
  auto result = ingest_source(cfg);
  ASSERT_EQ(result.articles.size(), 1u);
  const auto& a = result.articles[0];
  EXPECT_EQ(a.title, "Vitamin C cures colds");
  ASSERT_TRUE(a.body);
  EXPECT_NE(a.body->find("vitamin C"), std::string::npos);
  EXPECT_EQ(a.url, "https://www.healthfeedback.org/a");
  EXPECT_EQ(a.topic, "health");
  ASSERT_EQ(result.skipped.size(), 2u);
  EXPECT_EQ(result.skipped[0].reason, "missing_title_and_url");
  EXPECT_EQ(result.skipped[1].reason, "unparseable_date");
}

TEST(IngestSource, Deterministic) {
  auto cfg = default_adapter(SourceDataset::politifact, test::fixture("politifact_sample.csv"));
  EXPECT_EQ(ingest_source(cfg).articles, ingest_source(cfg).articles);
}

TEST(IngestSource, UnreadableFileIsDataError) {
  auto cfg = default_adapter(SourceDataset::politifact, "/nonexistent/file.csv");
  EXPECT_THROW(ingest_source(cfg), DataError);
}

TEST(IngestSource, ColumnLabelRuleAndFilters) {
  test::TempDir dir;
  test::write_text(dir.file("nela.jsonl"),
                   R"({"title":"A","date":"2020-01-01","url":"https://good.org/a","source":"good.org","label":"0"})"
                   "\n"
                   R"({"title":"B","date":"2020-01-01","url":"https://bad.org/b","source":"bad.org","label":"2"})"
                   "\n"
                   R"({"title":"C","date":"2020-01-01","url":"https://mid.org/c","source":"mid.org","label":"1"})"
                   "\n");
  auto result = ingest_source(default_adapter(SourceDataset::nelagt, dir.file("nela.jsonl")));
  ASSERT_EQ(result.articles.size(), 2u);
  EXPECT_EQ(result.articles[0].label, ClassLabel::credible);
  EXPECT_EQ(result.articles[1].label, ClassLabel::unreliable);
  EXPECT_EQ(result.stats.skipped_by_reason.at("unmapped_label"), 1u);

  test::write_text(dir.file("grafn.csv"),
                   "title,text,published,site_url,type,language\n"
                   "Hoax one,body,2017-02-01,http://fake.net,bs,english\n"
                   "Hoax two,body,2017-02-01,http://fake.net,bs,german\n"
                   "Hoax three,body,2017-02-01,http://fake.net,state,english\n");
  result = ingest_source(default_adapter(SourceDataset::grafn, dir.file("grafn.csv")));
  ASSERT_EQ(result.articles.size(), 1u);
  EXPECT_EQ(result.articles[0].label, ClassLabel::unreliable);
}

TEST(AdapterConfig, ValidateRequiresDateAndUrl) {
  SourceAdapterConfig c = default_adapter(SourceDataset::multifc, "x.tsv");
  EXPECT_NO_THROW(c.validate());
  c.field_mapping.erase("publishDate");
  EXPECT_THROW(c.validate(), DomainError);
  c = default_adapter(SourceDataset::multifc, "x.tsv");
  c.field_mapping.erase("claimURL");
  EXPECT_THROW(c.validate(), DomainError);
}

TEST(AdapterConfig, JsonOverrides) {
  auto base = default_adapter(SourceDataset::nelagt, "x.jsonl");
  auto c = adapter_from_json(nlohmann::json::parse(R"({"label_assignment":{"fixed":"unreliable"}})"), base);
  EXPECT_EQ(c.label_assignment.fixed, ClassLabel::unreliable);
  EXPECT_EQ(c.field_mapping, base.field_mapping);
}

}  // namespace
}  // namespace evver
