#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "evver/error.hpp"
#include "evver/text_features.hpp"
#include "test_support.hpp"

namespace evver {
namespace {

using Tokens = std::vector<std::string>;

TEST(Tokenize, Rules) {
  EXPECT_EQ(tokenize("Biden said X!"), (Tokens{"biden", "said", "x"}));
  EXPECT_EQ(tokenize(""), Tokens{});
  EXPECT_EQ(tokenize("COVID-19 cure"), (Tokens{"covid", "19", "cure"}));
  EXPECT_EQ(tokenize("caf\xC3\xA9 au lait"), (Tokens{"caf\xC3\xA9", "au", "lait"}));
}

TEST(Vocabulary, TopKWithLexicographicTies) {
  std::vector<std::string> docs{"a b", "b c"};
  auto v = Vocabulary::fit(docs, 2);
  EXPECT_EQ(v.tokens(), (Tokens{"a", "b"}));
  EXPECT_EQ(v.document_frequency(), (std::vector<std::uint32_t>{1, 2}));
  EXPECT_EQ(v.index_of("c"), -1);
  EXPECT_EQ(v.corpus_size(), 2u);
}

TEST(Vocabulary, AllRetainedWhenCapIsLarge) {
  std::vector<std::string> docs{"a b", "b c", "d"};
  EXPECT_EQ(Vocabulary::fit(docs, 100).size(), 4u);
}

TEST(Vocabulary, PermutationInvariantAndParallelSafe) {
  auto docs = test::random_corpus(5, 50, 200);
  auto a = Vocabulary::fit(docs, 7, 1);
  std::reverse(docs.begin(), docs.end());
  auto b = Vocabulary::fit(docs, 7, 4);
  EXPECT_EQ(a.tokens(), b.tokens());
  EXPECT_EQ(a.document_frequency(), b.document_frequency());
}

TEST(Vocabulary, JsonRoundTrip) {
  std::vector<std::string> docs{"a b", "b c"};
  auto v = Vocabulary::fit(docs);
  nlohmann::json j = v;
  auto w = j.get<Vocabulary>();
  EXPECT_EQ(w.tokens(), v.tokens());
  EXPECT_EQ(w.index_of("c"), v.index_of("c"));
  EXPECT_EQ(w.corpus_size(), 2u);
}

TEST(CountVector, DirectCount) {
  std::vector<std::string> docs{"a b"};
  auto v = Vocabulary::fit(docs);
  EXPECT_EQ(count_vector("b b a", v).dense(), (std::vector<std::uint32_t>{1, 2}));
  EXPECT_EQ(count_vector("a b b", v).dense(), count_vector("b a b", v).dense());
  auto zero = count_vector("zzz qqq", v);
  EXPECT_TRUE(zero.indices.empty());
  EXPECT_EQ(zero.dense(), (std::vector<std::uint32_t>{0, 0}));
}

TEST(TfidfVector, HandOracle) {
  std::vector<std::string> docs{"a b", "b"};
  auto v = Vocabulary::fit(docs);
  auto got = tfidf_vector("a b", v);
  double wa = std::log(3.0 / 2.0) + 1.0, wb = std::log(3.0 / 3.0) + 1.0;
  double norm = std::sqrt(wa * wa + wb * wb);
  EXPECT_NEAR(got.at(static_cast<std::size_t>(v.index_of("a"))), wa / norm, 1e-12);
  EXPECT_NEAR(got.at(static_cast<std::size_t>(v.index_of("b"))), wb / norm, 1e-12);
  EXPECT_NEAR(v.idf(static_cast<std::size_t>(v.index_of("a"))), wa, 1e-15);
}

TEST(TfidfVector, ZeroStaysZero) {
  std::vector<std::string> docs{"a b"};
  auto got = tfidf_vector("nothing here", Vocabulary::fit(docs));
  EXPECT_TRUE(got.values.empty());
  for (double x : got.dense()) EXPECT_FALSE(std::isnan(x));
}

TEST(TfidfVector, IdenticalDocsIdenticalVectors) {
  std::vector<std::string> docs{"moon vote x", "moon vote x", "moon vote x"};
  auto v = Vocabulary::fit(docs);
  auto a = tfidf_vector(docs[0], v).dense();
  for (const auto& d : docs) EXPECT_EQ(tfidf_vector(d, v).dense(), a);
}

TEST(TfidfVector, MatchesBruteForceOracle) {
  for (std::uint64_t seed = 100; seed < 105; ++seed) {
    auto docs = test::random_corpus(seed, 30, 60);
    auto vocab = Vocabulary::fit(docs, 10);
    for (const auto& d : docs) {
      auto got = tfidf_vector(d, vocab);
      auto want = test::tfidf_oracle(docs, 10, d);
      ASSERT_EQ(got.indices.size(), want.size());
      for (std::size_t k = 0; k < got.indices.size(); ++k) {
        EXPECT_NEAR(got.values[k], want.at(vocab.tokens()[got.indices[k]]), 1e-9);
      }
    }
  }
}

TEST(Featurize, RowsMatchVectorsAndFileRoundTrips) {
  test::TempDir dir;
  auto docs = test::random_corpus(9, 20, 30);
  auto vocab = Vocabulary::fit(docs, 8);
  auto m = featurize(docs, vocab, FeatureMode::tfidf, 2);
  ASSERT_EQ(static_cast<std::size_t>(m.rows()), docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    auto want = tfidf_vector(docs[i], vocab).dense();
    for (std::size_t j = 0; j < vocab.size(); ++j) {
      EXPECT_FLOAT_EQ(m.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), static_cast<float>(want[j]));
    }
  }
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < docs.size(); ++i) ids.push_back("d" + std::to_string(i));
  write_sparse_features(dir.file("f.bin"), m, ids, FeatureMode::tfidf, vocab);
  auto back = read_sparse_features(dir.file("f.bin"));
  EXPECT_EQ(back.ids, ids);
  EXPECT_EQ(back.mode, FeatureMode::tfidf);
  EXPECT_EQ(back.vocabulary.tokens(), vocab.tokens());
  ASSERT_EQ(back.matrix.nonZeros(), m.nonZeros());
  EXPECT_TRUE(back.matrix.isApprox(m, 0.0f));
}

TEST(Featurize, CountMode) {
  std::vector<std::string> docs{"b b a", "a"};
  auto vocab = Vocabulary::fit(docs);
  auto m = featurize(docs, vocab, FeatureMode::count);
  EXPECT_EQ(m.coeff(0, 0), 1.0f);
  EXPECT_EQ(m.coeff(0, 1), 2.0f);
  EXPECT_EQ(m.coeff(1, 1), 0.0f);
  EXPECT_THROW(feature_mode_from_name("bm25"), DomainError);
}

TEST(SparseFeatureFile, TruncationIsDataError) {
  test::TempDir dir;
  std::vector<std::string> docs{"a b", "b c"};
  auto vocab = Vocabulary::fit(docs);
  write_sparse_features(dir.file("f.bin"), featurize(docs, vocab, FeatureMode::count), {"x", "y"}, FeatureMode::count,
                        vocab);
  auto bytes = test::read_text(dir.file("f.bin"));
  test::write_text(dir.file("f.bin"), bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_sparse_features(dir.file("f.bin")), DataError);
}

}  // namespace
}  // namespace evver
