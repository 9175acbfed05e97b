#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/SparseCore>
#include <nlohmann/json_fwd.hpp>

namespace evver {

/// Lowercase ASCII, split on every non-alphanumeric run, drop empties.
/// Bytes >= 0x80 count as alphanumeric so UTF-8 words stay intact.
std::vector<std::string> tokenize(std::string_view text);

inline constexpr std::size_t kDefaultMaxFeatures = 50000;

class Vocabulary {
 public:
  Vocabulary() = default;

  /// Keeps the `max_features` tokens with the highest document frequency
  /// (ties: lexicographically smaller first). Indices are assigned in
  /// lexicographic token order.
  static Vocabulary fit(std::span<const std::string> documents,
                        std::size_t max_features = kDefaultMaxFeatures, std::size_t workers = 1);

  std::size_t size() const { return tokens_.size(); }
  std::size_t corpus_size() const { return corpus_size_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::uint32_t>& document_frequency() const { return df_; }

  /// Index of `token`, or -1.
  std::int64_t index_of(std::string_view token) const;

  /// ln((1 + N) / (1 + df)) + 1
  double idf(std::size_t index) const;

  friend void to_json(nlohmann::json& j, const Vocabulary& v);
  friend void from_json(const nlohmann::json& j, Vocabulary& v);

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint32_t> df_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::size_t corpus_size_ = 0;

  void rebuild_index();
};

template <class T>
struct SparseVector {
  std::size_t dim = 0;
  std::vector<std::uint32_t> indices;  // strictly increasing
  std::vector<T> values;

  T at(std::size_t i) const {
    for (std::size_t k = 0; k < indices.size(); ++k) {
      if (indices[k] == i) return values[k];
    }
    return T{};
  }
  std::vector<T> dense() const {
    std::vector<T> out(dim, T{});
    for (std::size_t k = 0; k < indices.size(); ++k) out[indices[k]] = values[k];
    return out;
  }
};

/// Raw in-vocabulary token counts.
SparseVector<std::uint32_t> count_vector(std::string_view text, const Vocabulary& vocab);

/// tf * idf with tf = raw count, L2-normalized; all-zero stays zero.
SparseVector<double> tfidf_vector(std::string_view text, const Vocabulary& vocab);

enum class FeatureMode { count, tfidf };

FeatureMode feature_mode_from_name(std::string_view name);

using SparseRowMatrix = Eigen::SparseMatrix<float, Eigen::RowMajor, std::int64_t>;

/// One row per document.
SparseRowMatrix featurize(std::span<const std::string> documents, const Vocabulary& vocab,
                          FeatureMode mode, std::size_t workers = 1);

/// Sparse feature file: "EVSF", version u32, rows u32, cols u32, nnz u64,
/// row offsets (rows + 1) u64, column indices (nnz) u32, values (nnz) f32,
/// all little-endian; sidecar `<path>.manifest.json` = {mode, ids, vocabulary}.
void write_sparse_features(const std::string& path, const SparseRowMatrix& matrix,
                           const std::vector<std::string>& ids, FeatureMode mode,
                           const Vocabulary& vocab);

struct SparseFeatureFile {
  SparseRowMatrix matrix;
  std::vector<std::string> ids;
  FeatureMode mode = FeatureMode::tfidf;
  Vocabulary vocabulary;
};

SparseFeatureFile read_sparse_features(const std::string& path);

}  // namespace evver
