#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "evver/training.hpp"
#include "evver/types.hpp"

namespace evver::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

std::string fixture(const std::string& name);
std::string data_file(const std::string& name);
std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

/// Three isotropic unit-variance clusters in `dim` dimensions whose means
/// are pairwise `separation` apart (scaled basis vectors). Samples are
/// interleaved by class.
TrainingSet gaussian_clusters(std::size_t dim, std::size_t per_class, double separation, std::uint64_t seed);

/// Labels follow the DCS scalar with probability `determinism` (the class of
/// floor(3 * dcs)) and are uniform otherwise; features are N(0,1) noise.
TrainingSet dcs_driven_set(std::size_t dim, std::size_t n, double determinism, std::uint64_t seed);

/// Same samples with the DCS column removed.
TrainingSet without_dcs(const TrainingSet& data);

}  // namespace evver::test

namespace evver::test {

/// Brute-force TF-IDF for `doc` against a vocabulary fitted on `corpus`:
/// its own tokenizer, document frequencies, top-k selection and the
/// smoothed-idf / L2 formula, evaluated term by term. Keys are tokens.
std::map<std::string, double> tfidf_oracle(const std::vector<std::string>& corpus, std::size_t max_features,
                                           const std::string& doc);

}  // namespace evver::test

namespace evver::test {

/// 1..max_docs documents of 0..max_tokens words drawn from a small alphabet
/// of word shapes (mixed case, digits, punctuation between words).
std::vector<std::string> random_corpus(std::uint64_t seed, std::size_t max_docs, std::size_t max_tokens);

}  // namespace evver::test
