#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "evver/error.hpp"
#include "evver/types.hpp"
#include "test_support.hpp"

namespace evver {
namespace {

TEST(ClassLabel, FromCode) {
  EXPECT_EQ(label_from_code(1), ClassLabel::credible);
  EXPECT_EQ(label_from_code(0), ClassLabel::fact_checked);
  EXPECT_EQ(label_from_code(2), ClassLabel::unreliable);
  EXPECT_THROW(label_from_code(7), DomainError);
  EXPECT_THROW(label_from_code(-1), DomainError);
}

TEST(ClassLabel, NamesRoundTrip) {
  for (auto l : kAllLabels) EXPECT_EQ(label_from_name(label_name(l)), l);
  EXPECT_THROW(label_from_name("true"), DomainError);
}

TEST(SourceDataset, NamesRoundTrip) {
  for (auto name : {"multifc", "pubhealth", "politifact", "fnc", "nelagt", "grafn"}) {
    EXPECT_EQ(source_name(source_from_name(name)), name);
  }
  EXPECT_THROW(source_from_name("liar"), DomainError);
}

TEST(Date, ParsesCommonForms) {
  EXPECT_EQ(Date::parse("2020-01-15"), (Date{2020, 1, 15}));
  EXPECT_EQ(Date::parse("2020-01-15T08:00:00Z"), (Date{2020, 1, 15}));
  EXPECT_EQ(Date::parse("2020-03"), (Date{2020, 3, 1}));
  EXPECT_EQ(Date::parse("2019"), (Date{2019, 1, 1}));
  EXPECT_EQ(Date::parse("01/15/2020"), (Date{2020, 1, 15}));
  EXPECT_EQ(Date::parse("January 15, 2020"), (Date{2020, 1, 15}));
  EXPECT_EQ(Date::parse("15 Jan 2020"), (Date{2020, 1, 15}));
  EXPECT_EQ(Date::parse("Jan 2020"), (Date{2020, 1, 1}));
  EXPECT_FALSE(Date::parse("yesterday"));
  EXPECT_FALSE(Date::parse(""));
  EXPECT_EQ((Date{2021, 3, 2}.to_string()), "2021-03-02");
}

TEST(TitleKey, NormalizesCaseAndPunctuation) {
  EXPECT_EQ(normalize_title_key("  Biden   Said X! "), "biden said x");
  EXPECT_EQ(normalize_title_key("Biden said, X"), normalize_title_key("biden said x"));
}

TEST(ArticleId, DependsOnNormalizedTitleAndSource) {
  auto a = make_article_id("Biden said X", SourceDataset::politifact);
  EXPECT_EQ(a.size(), 16u);
  EXPECT_EQ(a, make_article_id("biden said x!", SourceDataset::politifact));
  EXPECT_NE(a, make_article_id("Biden said X", SourceDataset::multifc));
}

TEST(RegistrableDomain, StripsSchemeWwwAndSubdomains) {
  EXPECT_EQ(registrable_domain("https://www.politifact.com/factchecks/2021/"), "politifact.com");
  EXPECT_EQ(registrable_domain("news.bbc.co.uk"), "bbc.co.uk");
  EXPECT_EQ(registrable_domain("HTTP://Edition.CNN.com:8080/x"), "cnn.com");
  EXPECT_EQ(registrable_domain(""), "");
  EXPECT_EQ(domain_brand("politifact.com"), "politifact");
}

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(WithThousands, GroupsDigits) {
  EXPECT_EQ(with_thousands(0), "0");
  EXPECT_EQ(with_thousands(999), "999");
  EXPECT_EQ(with_thousands(10238), "10,238");
  EXPECT_EQ(with_thousands(1234567), "1,234,567");
}

TEST(ArticleJson, RoundTrip) {
  Article a;
  a.id = "abc";
  a.title = "t";
  a.body = "b";
  a.date = {2018, 5, 6};
  a.url = "https://x.org/a";
  a.domain = "x.org";
  a.topic = "politics";
  a.label = ClassLabel::unreliable;
  a.source_dataset = SourceDataset::grafn;
  nlohmann::json j = a;
  EXPECT_EQ(j.get<Article>(), a);
  a.body.reset();
  j = a;
  EXPECT_EQ(j.get<Article>(), a);
}

TEST(CorpusIo, RoundTripAndLineNumbersOnError) {
  test::TempDir dir;
  std::vector<Article> corpus(2);
  corpus[0].id = "1";
  corpus[0].title = "one";
  corpus[1].id = "2";
  corpus[1].title = "two";
  corpus[0].date = Date{2018, 5, 1};
  corpus[1].date = Date{2020, 12, 31};
  corpus[1].label = ClassLabel::credible;
  write_corpus(dir.file("c.jsonl"), corpus);
  EXPECT_EQ(read_corpus(dir.file("c.jsonl")), corpus);

  test::write_text(dir.file("bad.jsonl"), test::read_text(dir.file("c.jsonl")) + "{not json\n");
  try {
    read_corpus(dir.file("bad.jsonl"));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(EvidenceIo, RoundTrip) {
  test::TempDir dir;
  std::vector<EvidenceItem> items{{"e1", "some text", std::string("reuters.com"), EvidenceKind::short_text},
                                  {"e2", "long text", std::nullopt, EvidenceKind::long_text}};
  write_evidence(dir.file("e.jsonl"), items);
  EXPECT_EQ(read_evidence(dir.file("e.jsonl")), items);
}

TEST(SplitSetJson, RoundTrip) {
  SplitSet s;
  s.train.article_ids = {"a", "b"};
  s.validation.article_ids = {"c"};
  s.test.article_ids = {"d"};
  nlohmann::json j = s;
  EXPECT_EQ(j.get<SplitSet>(), s);
}

}  // namespace
}  // namespace evver
