#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace evver {

enum class Pooling { eos, cls, mean };

Pooling pooling_from_name(std::string_view name);
std::string_view pooling_name(Pooling p) noexcept;

using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense text embeddings in the on-disk exchange format:
///
///   bytes 0..3   magic "EVVR"
///   bytes 4..7   version (u32 LE, currently 1)
///   bytes 8..11  count   (u32 LE)
///   bytes 12..15 dim     (u32 LE)
///   payload      count * dim IEEE-754 binary32 LE, row-major
///
/// with a sidecar `<file>.manifest.json` = {model_name, pooling, ids}.
/// Extra manifest keys are preserved in `manifest_extra`.
struct EmbeddingSet {
  std::string model_name;
  Pooling pooling = Pooling::cls;
  std::vector<std::string> ids;
  RowMatrixF vectors;  // ids.size() x dim
  std::string manifest_extra = "{}";  // JSON object text

  std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }
  std::size_t size() const { return ids.size(); }

  /// Row of `id`, or nullopt.
  std::optional<std::size_t> row_of(const std::string& id) const;

  void build_index();

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr std::uint32_t kEmbeddingVersion = 1;

/// Throws DataError on magic/version mismatch, payload size inconsistent
/// with count * dim (naming expected and actual bytes), manifest/matrix row
/// mismatch, or duplicate ids.
EmbeddingSet load_embeddings(const std::string& path);

void save_embeddings(const std::string& path, const EmbeddingSet& set);

}  // namespace evver
