#include "evver/text_features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "evver/binary_io.hpp"
#include "evver/error.hpp"
#include "evver/parallel.hpp"

namespace evver {
namespace {

bool is_token_char(unsigned char c) { return c >= 0x80 || std::isalnum(c); }

std::map<std::uint32_t, std::uint32_t> raw_counts(std::string_view text, const Vocabulary& vocab) {
  std::map<std::uint32_t, std::uint32_t> counts;
  for (const auto& tok : tokenize(text)) {
    auto idx = vocab.index_of(tok);
    if (idx >= 0) ++counts[static_cast<std::uint32_t>(idx)];
  }
  return counts;
}

constexpr char kSparseMagic[4] = {'E', 'V', 'S', 'F'};
constexpr std::uint32_t kSparseVersion = 1;

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (is_token_char(c)) {
      cur += c < 0x80 ? static_cast<char>(std::tolower(c)) : ch;
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocabulary Vocabulary::fit(std::span<const std::string> documents, std::size_t max_features,
                           std::size_t workers) {
  // parallel document-frequency counting over contiguous chunks, serial merge
  workers = std::max<std::size_t>(1, std::min(workers, documents.size()));
  std::vector<std::unordered_map<std::string, std::uint32_t>> partial(workers);
  std::size_t chunk = (documents.size() + workers - 1) / std::max<std::size_t>(workers, 1);
  parallel_for(workers, workers, [&](std::size_t w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(documents.size(), begin + chunk);
    for (std::size_t d = begin; d < end; ++d) {
      auto toks = tokenize(documents[d]);
      std::unordered_set<std::string> seen(toks.begin(), toks.end());
      for (const auto& t : seen) ++partial[w][t];
    }
  });
  std::unordered_map<std::string, std::uint32_t> df;
  for (auto& p : partial) {
    for (auto& [tok, n] : p) df[tok] += n;
  }

  std::vector<std::pair<std::string, std::uint32_t>> ranked(df.begin(), df.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > max_features) ranked.resize(max_features);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  Vocabulary v;
  v.corpus_size_ = documents.size();
  for (auto& [tok, n] : ranked) {
    v.tokens_.push_back(tok);
    v.df_.push_back(n);
  }
  v.rebuild_index();
  return v;
}

void Vocabulary::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_[tokens_[i]] = static_cast<std::uint32_t>(i);
}

std::int64_t Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

double Vocabulary::idf(std::size_t index) const {
  return std::log((1.0 + static_cast<double>(corpus_size_)) / (1.0 + static_cast<double>(df_[index]))) + 1.0;
}

void to_json(nlohmann::json& j, const Vocabulary& v) {
  j = nlohmann::json{{"corpus_size", v.corpus_size_}, {"tokens", v.tokens_}, {"document_frequency", v.df_}};
}

void from_json(const nlohmann::json& j, Vocabulary& v) {
  v.corpus_size_ = j.at("corpus_size").get<std::size_t>();
  v.tokens_ = j.at("tokens").get<std::vector<std::string>>();
  v.df_ = j.at("document_frequency").get<std::vector<std::uint32_t>>();
  if (v.tokens_.size() != v.df_.size()) throw DataError("vocabulary tokens/df length mismatch");
  for (auto d : v.df_) {
    if (d > v.corpus_size_) throw DataError("vocabulary document frequency exceeds corpus size");
  }
  v.rebuild_index();
}

SparseVector<std::uint32_t> count_vector(std::string_view text, const Vocabulary& vocab) {
  SparseVector<std::uint32_t> out;
  out.dim = vocab.size();
  for (auto [idx, n] : raw_counts(text, vocab)) {
    out.indices.push_back(idx);
    out.values.push_back(n);
  }
  return out;
}

SparseVector<double> tfidf_vector(std::string_view text, const Vocabulary& vocab) {
  SparseVector<double> out;
  out.dim = vocab.size();
  double norm2 = 0.0;
  for (auto [idx, n] : raw_counts(text, vocab)) {
    double w = static_cast<double>(n) * vocab.idf(idx);
    out.indices.push_back(idx);
    out.values.push_back(w);
    norm2 += w * w;
  }
  if (norm2 > 0.0) {
    double inv = 1.0 / std::sqrt(norm2);
    for (auto& w : out.values) w *= inv;
  }
  return out;
}

FeatureMode feature_mode_from_name(std::string_view name) {
  if (name == "count") return FeatureMode::count;
  if (name == "tfidf") return FeatureMode::tfidf;
  throw DomainError("unknown feature mode: " + std::string(name));
}

SparseRowMatrix featurize(std::span<const std::string> documents, const Vocabulary& vocab,
                          FeatureMode mode, std::size_t workers) {
  std::vector<SparseVector<double>> rows(documents.size());
  parallel_for(documents.size(), workers, [&](std::size_t i) {
    if (mode == FeatureMode::tfidf) {
      rows[i] = tfidf_vector(documents[i], vocab);
    } else {
      auto c = count_vector(documents[i], vocab);
      rows[i].dim = c.dim;
      rows[i].indices = std::move(c.indices);
      rows[i].values.assign(c.values.begin(), c.values.end());
    }
  });
  std::vector<Eigen::Triplet<float, std::int64_t>> triplets;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < rows[r].indices.size(); ++k) {
      triplets.emplace_back(static_cast<std::int64_t>(r), rows[r].indices[k],
                            static_cast<float>(rows[r].values[k]));
    }
  }
  SparseRowMatrix m(static_cast<std::int64_t>(documents.size()), static_cast<std::int64_t>(vocab.size()));
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

void write_sparse_features(const std::string& path, const SparseRowMatrix& matrix,
                           const std::vector<std::string>& ids, FeatureMode mode,
                           const Vocabulary& vocab) {
  if (static_cast<std::size_t>(matrix.rows()) != ids.size()) {
    throw DataError("feature rows (" + std::to_string(matrix.rows()) + ") != ids (" +
                    std::to_string(ids.size()) + ")");
  }
  SparseRowMatrix m = matrix;
  m.makeCompressed();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(kSparseMagic, 4);
  binio::write_u32(out, kSparseVersion);
  binio::write_u32(out, static_cast<std::uint32_t>(m.rows()));
  binio::write_u32(out, static_cast<std::uint32_t>(m.cols()));
  binio::write_u64(out, static_cast<std::uint64_t>(m.nonZeros()));
  for (std::int64_t r = 0; r <= m.rows(); ++r) binio::write_u64(out, static_cast<std::uint64_t>(m.outerIndexPtr()[r]));
  for (std::int64_t k = 0; k < m.nonZeros(); ++k) binio::write_u32(out, static_cast<std::uint32_t>(m.innerIndexPtr()[k]));
  for (std::int64_t k = 0; k < m.nonZeros(); ++k) binio::write_f32(out, m.valuePtr()[k]);
  if (!out) throw DataError("write failed: " + path);

  std::ofstream man(path + ".manifest.json");
  man << nlohmann::json{{"mode", mode == FeatureMode::count ? "count" : "tfidf"},
                        {"ids", ids},
                        {"vocabulary", vocab}}
             .dump();
}

SparseFeatureFile read_sparse_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kSparseMagic)) throw DataError(path + ": bad magic, expected EVSF");
  auto version = binio::read_u32(in);
  if (version != kSparseVersion) throw DataError(path + ": unsupported version " + std::to_string(version));
  auto rows = binio::read_u32(in);
  auto cols = binio::read_u32(in);
  auto nnz = binio::read_u64(in);
  std::vector<std::int64_t> outer(rows + 1);
  for (auto& o : outer) o = static_cast<std::int64_t>(binio::read_u64(in));
  std::vector<std::int64_t> inner(nnz);
  for (auto& i : inner) i = binio::read_u32(in);
  std::vector<float> values(nnz);
  for (auto& v : values) v = binio::read_f32(in);
  if (!in) throw DataError(path + ": truncated payload");
  if (outer.front() != 0 || static_cast<std::uint64_t>(outer.back()) != nnz) throw DataError(path + ": inconsistent row offsets");

  SparseFeatureFile f;
  f.matrix.resize(rows, cols);
  f.matrix.reserve(static_cast<std::int64_t>(nnz));
  for (std::uint32_t r = 0; r < rows; ++r) {
    f.matrix.startVec(r);
    for (auto k = outer[r]; k < outer[r + 1]; ++k) {
      if (inner[static_cast<std::size_t>(k)] >= cols) throw DataError(path + ": column index out of range");
      f.matrix.insertBack(r, inner[static_cast<std::size_t>(k)]) = values[static_cast<std::size_t>(k)];
    }
  }
  f.matrix.finalize();

  std::ifstream man(path + ".manifest.json");
  if (!man) throw DataError("missing manifest " + path + ".manifest.json");
  auto j = nlohmann::json::parse(man);
  f.ids = j.at("ids").get<std::vector<std::string>>();
  f.mode = feature_mode_from_name(j.at("mode").get<std::string>());
  f.vocabulary = j.at("vocabulary").get<Vocabulary>();
  if (f.ids.size() != rows) throw DataError(path + ": manifest ids != matrix rows");
  return f;
}

}  // namespace evver
