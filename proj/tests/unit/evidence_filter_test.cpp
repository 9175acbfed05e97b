#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "evver/error.hpp"
#include "evver/evidence_filter.hpp"
#include "test_support.hpp"

namespace evver {
namespace {

std::vector<EvidenceItem> items_n(std::size_t n) {
  std::vector<EvidenceItem> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back({"e" + std::to_string(i + 1), "text " + std::to_string(i), std::nullopt});
  return v;
}

Prediction pred(const std::string& id, int label) {
  std::array<double, 3> p{0.1, 0.1, 0.1};
  p[static_cast<std::size_t>(label)] = 0.8;
  return Prediction::from_probabilities(id, p);
}

TEST(Prediction, ArgmaxLabel) {
  EXPECT_EQ(Prediction::from_probabilities("x", {0.1, 0.8, 0.1}).label, ClassLabel::credible);
  EXPECT_EQ(Prediction::from_probabilities("x", {0.4, 0.4, 0.2}).label, ClassLabel::fact_checked);
  auto p = Prediction::from_probabilities("x", {0.2, 0.3, 0.5}, true);
  nlohmann::json j = p;
  auto back = j.get<Prediction>();
  EXPECT_EQ(back.item_id, "x");
  EXPECT_EQ(back.label, ClassLabel::unreliable);
  EXPECT_TRUE(back.dcs_used);
}

TEST(FilterCredible, KeepsCredibleInOrder) {
  auto items = items_n(4);
  std::vector<Prediction> preds{pred("e1", 0), pred("e2", 1), pred("e3", 2), pred("e4", 1)};
  auto kept = filter_credible(items, preds);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].id, "e2");
  EXPECT_EQ(kept[1].id, "e4");
}

TEST(FilterCredible, AllFactCheckedGivesEmpty) {
  auto items = items_n(3);
  std::vector<Prediction> preds{pred("e1", 0), pred("e2", 0), pred("e3", 0)};
  EXPECT_TRUE(filter_credible(items, preds).empty());
}

TEST(FilterCredible, Idempotent) {
  auto items = items_n(4);
  std::vector<Prediction> preds{pred("e1", 1), pred("e2", 2), pred("e3", 1), pred("e4", 0)};
  auto once = filter_credible(items, preds);
  std::vector<Prediction> kept_preds{preds[0], preds[2]};
  EXPECT_EQ(filter_credible(once, kept_preds), once);
}

TEST(FilterCredible, MisalignmentIsError) {
  auto items = items_n(2);
  std::vector<Prediction> one{pred("e1", 1)};
  EXPECT_THROW(filter_credible(items, one), DataError);
  std::vector<Prediction> swapped{pred("e2", 1), pred("e1", 1)};
  EXPECT_THROW(filter_credible(items, swapped), DataError);
}

struct Fixture {
  EvverModel model;
  EmbeddingSet embeddings;
};

Fixture make_fixture(bool use_dcs, std::size_t n) {
  EvverConfig c;
  c.input_dim = 4;
  c.hidden_dims = {6};
  c.use_dcs = use_dcs;
  Fixture f{EvverModel::initialize(c), {}};
  f.embeddings.model_name = "m";
  f.embeddings.vectors = RowMatrixF::Random(static_cast<Eigen::Index>(n), 4);
  for (std::size_t i = 0; i < n; ++i) f.embeddings.ids.push_back("e" + std::to_string(i + 1));
  f.embeddings.build_index();
  return f;
}

TEST(ClassifyEvidence, OrderEmptyAndMissingEmbeddings) {
  auto f = make_fixture(false, 10);
  EXPECT_TRUE(classify_evidence({}, f.model, f.embeddings).empty());
  auto items = items_n(10);
  auto results = classify_evidence(items, f.model, f.embeddings, nullptr, 3);
  ASSERT_EQ(results.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(results[i].item_id, items[i].id);
    ASSERT_TRUE(results[i].prediction);
    std::vector<float> row(f.embeddings.vectors.row(static_cast<Eigen::Index>(i)).data(),
                           f.embeddings.vectors.row(static_cast<Eigen::Index>(i)).data() + 4);
    EXPECT_EQ(results[i].prediction->probabilities, f.model.forward(std::span<const float>(row)));
  }
  items.push_back({"unknown", "t", std::nullopt});
  results = classify_evidence(items, f.model, f.embeddings);
  EXPECT_FALSE(results.back().prediction);
  EXPECT_NE(results.back().error.find("unknown"), std::string::npos);
  EXPECT_EQ(successful(results).size(), 10u);
}

TEST(ClassifyEvidence, DcsRequiredAndApplied) {
  auto f = make_fixture(true, 2);
  auto items = items_n(2);
  items[0].domain = "https://www.good.org/story";
  EXPECT_THROW(classify_evidence(items, f.model, f.embeddings, nullptr), DataError);
  DcsTable table({DcsRecord::from_ratings("good.org", std::nullopt, std::string("very high"), std::nullopt)});
  auto results = classify_evidence(items, f.model, f.embeddings, &table);
  std::vector<float> r0(f.embeddings.vectors.row(0).data(), f.embeddings.vectors.row(0).data() + 4);
  std::vector<float> r1(f.embeddings.vectors.row(1).data(), f.embeddings.vectors.row(1).data() + 4);
  EXPECT_EQ(results[0].prediction->probabilities, f.model.forward(std::span<const float>(r0), 1.0));
  EXPECT_EQ(results[1].prediction->probabilities, f.model.forward(std::span<const float>(r1), normalize_dcs(0)));
  EXPECT_TRUE(results[0].prediction->dcs_used);
}

TEST(ClassifyEvidence, EmbeddingDimMismatchIsError) {
  auto f = make_fixture(false, 2);
  f.embeddings.vectors = RowMatrixF::Zero(2, 3);
  auto items = items_n(2);
  EXPECT_THROW(classify_evidence(items, f.model, f.embeddings), DataError);
}

std::vector<Prediction> multiset(std::size_t fc, std::size_t cr, std::size_t un) {
  std::vector<Prediction> v;
  for (std::size_t i = 0; i < fc; ++i) v.push_back(pred("f" + std::to_string(i), 0));
  for (std::size_t i = 0; i < cr; ++i) v.push_back(pred("c" + std::to_string(i), 1));
  for (std::size_t i = 0; i < un; ++i) v.push_back(pred("u" + std::to_string(i), 2));
  return v;
}

TEST(Audit, AllCredible) {
  auto r = audit("x", multiset(0, 7, 0));
  EXPECT_EQ(r.percent_fact_checked(), 0.0);
  EXPECT_EQ(r.percent_credible(), 100.0);
  EXPECT_EQ(r.percent_unreliable(), 0.0);
  EXPECT_EQ(format_audit_row(r), "0.0% / 100.0% / 0.0% / 7");
}

TEST(Audit, ReferenceRowFormatting) {
  auto r = audit("Ruling statements", multiset(10084, 102, 52));
  EXPECT_EQ(r.sample_count, 10238u);
  EXPECT_EQ(format_audit_row(r), "98.5% / 1.0% / 0.5% / 10,238");
  nlohmann::json j = r;
  EXPECT_EQ(j["counts"]["credible"], 102);
  EXPECT_EQ(j["percent_fact_checked"], 98.5);
}

TEST(Audit, EmptyIsError) { EXPECT_THROW(audit("x", std::vector<Prediction>{}), DataError); }

TEST(Audit, LargestRemainderAlwaysTotals1000) {
  EXPECT_EQ(audit_tenths({1, 1, 1}), (std::array<long, 3>{334, 333, 333}));
  EXPECT_EQ(audit_tenths({2, 1, 0}), (std::array<long, 3>{667, 333, 0}));
  for (std::size_t a = 0; a < 12; ++a) {
    for (std::size_t b = 0; b < 12; ++b) {
      for (std::size_t c = 0; c < 12; ++c) {
        if (a + b + c == 0) continue;
        auto t = audit_tenths({a, b, c});
        EXPECT_EQ(t[0] + t[1] + t[2], 1000);
      }
    }
  }
}

TEST(Audit, TableIsAligned) {
  std::vector<AuditReport> reports{audit("Short", multiset(3, 1, 0)), audit("A much longer corpus name", multiset(1, 1, 1))};
  auto table = format_audit_table(reports);
  std::vector<std::string> lines;
  std::size_t start = 0;
  for (std::size_t pos; (pos = table.find('\n', start)) != std::string::npos; start = pos + 1) {
    lines.push_back(table.substr(start, pos - start));
  }
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0].size(), lines[2].size());
  EXPECT_EQ(lines[2].size(), lines[3].size());
  EXPECT_EQ(lines[0].rfind("Corpus", 0), 0u);
}

TEST(CleanEvidence, SpecExamples) {
  std::vector<EvidenceItem> raw{{"1", "IMG_2024.jpg", std::nullopt},
                                {"2", "Page Not Found", std::nullopt},
                                {"3", "Senate passes the annual budget after a late-night vote", std::nullopt},
                                {"4", "ok", std::nullopt},
                                {"5", "report.PDF", std::nullopt},
                                {"6", "Error 404 - the page you requested could not be found", std::nullopt}};
  CleanReport report;
  auto kept = clean_evidence(raw, &report);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].id, "3");
  EXPECT_EQ(report.input, 6u);
  EXPECT_EQ(report.kept, 1u);
  EXPECT_EQ(report.dropped_file_name, 2u);
  EXPECT_EQ(report.dropped_error_page, 2u);
  EXPECT_EQ(report.dropped_too_short, 1u);
}

TEST(CleanEvidence, LongTextMentioningAnErrorPhraseIsKept) {
  std::string text = "Officials said the page not found error on the tax portal affected thousands of users who tried to "
                     "file their returns before the deadline on Monday evening last week";
  std::vector<EvidenceItem> raw{{"1", text, std::nullopt}};
  EXPECT_EQ(clean_evidence(raw).size(), 1u);
}

TEST(CleanEvidence, FixtureFile) {
  auto items = read_evidence(test::fixture("evidence_sample.jsonl"));
  auto kept = clean_evidence(items);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].id, "e1");
  EXPECT_EQ(kept[1].id, "e4");
}

}  // namespace
}  // namespace evver
