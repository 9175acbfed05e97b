#include "evver/embeddings.hpp"

#include <filesystem>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "evver/binary_io.hpp"
#include "evver/error.hpp"

namespace evver {
namespace {

constexpr char kMagic[4] = {'E', 'V', 'V', 'R'};
constexpr std::uint64_t kHeaderBytes = 16;

}  // namespace

Pooling pooling_from_name(std::string_view name) {
  if (name == "eos") return Pooling::eos;
  if (name == "cls") return Pooling::cls;
  if (name == "mean") return Pooling::mean;
  throw DomainError("unknown pooling: " + std::string(name));
}

std::string_view pooling_name(Pooling p) noexcept {
  switch (p) {
    case Pooling::eos: return "eos";
    case Pooling::cls: return "cls";
    case Pooling::mean: return "mean";
  }
  return "cls";
}

std::optional<std::size_t> EmbeddingSet::row_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingSet::build_index() {
  index_.clear();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!index_.emplace(ids[i], i).second) throw DataError("duplicate embedding id: " + ids[i]);
  }
}

EmbeddingSet load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embeddings " + path);
  std::error_code ec;
  auto file_size = std::filesystem::file_size(path, ec);
  if (ec) throw DataError("cannot stat " + path + ": " + ec.message());
  if (file_size < kHeaderBytes) {
    throw DataError(path + ": file is " + std::to_string(file_size) + " bytes, shorter than the 16-byte header");
  }

  char magic[4];
  in.read(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) {
    throw DataError(path + ": bad magic '" + std::string(magic, 4) + "', expected 'EVVR'");
  }
  std::uint32_t version = binio::read_u32(in);
  if (version != kEmbeddingVersion) {
    throw DataError(path + ": unsupported version " + std::to_string(version) + ", expected " +
                    std::to_string(kEmbeddingVersion));
  }
  std::uint64_t count = binio::read_u32(in);
  std::uint64_t dim = binio::read_u32(in);
  std::uint64_t expected = count * dim * 4;
  std::uint64_t actual = file_size - kHeaderBytes;
  if (expected != actual) {
    throw DataError(path + ": payload size mismatch: count " + std::to_string(count) + " x dim " +
                    std::to_string(dim) + " needs " + std::to_string(expected) + " bytes, file has " +
                    std::to_string(actual));
  }

  std::ifstream man(path + ".manifest.json");
  if (!man) throw DataError("missing manifest " + path + ".manifest.json");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(man);
  } catch (const std::exception& e) {
    throw DataError(path + ".manifest.json: " + e.what());
  }

  EmbeddingSet set;
  set.model_name = j.at("model_name").get<std::string>();
  set.pooling = pooling_from_name(j.at("pooling").get<std::string>());
  set.ids = j.at("ids").get<std::vector<std::string>>();
  if (set.ids.size() != count) {
    throw DataError(path + ": manifest lists " + std::to_string(set.ids.size()) + " ids but matrix has " +
                    std::to_string(count) + " rows");
  }
  nlohmann::json extra = j;
  extra.erase("model_name");
  extra.erase("pooling");
  extra.erase("ids");
  set.manifest_extra = extra.dump();
  set.build_index();

  set.vectors.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(set.vectors.data()), static_cast<std::streamsize>(expected));
  } else {
    for (std::uint64_t k = 0; k < count * dim; ++k) set.vectors.data()[k] = binio::read_f32(in);
  }
  if (!in) throw DataError(path + ": short read of payload");
  return set;
}

void save_embeddings(const std::string& path, const EmbeddingSet& set) {
  if (static_cast<std::size_t>(set.vectors.rows()) != set.ids.size()) {
    throw DataError("embedding rows (" + std::to_string(set.vectors.rows()) + ") != ids (" +
                    std::to_string(set.ids.size()) + ")");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : set.ids) {
    if (!seen.insert(id).second) throw DataError("duplicate embedding id: " + id);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(kMagic, 4);
  binio::write_u32(out, kEmbeddingVersion);
  binio::write_u32(out, static_cast<std::uint32_t>(set.vectors.rows()));
  binio::write_u32(out, static_cast<std::uint32_t>(set.vectors.cols()));
  for (Eigen::Index k = 0; k < set.vectors.size(); ++k) binio::write_f32(out, set.vectors.data()[k]);
  if (!out) throw DataError("write failed: " + path);

  nlohmann::json j = nlohmann::json::parse(set.manifest_extra);
  j["model_name"] = set.model_name;
  j["pooling"] = pooling_name(set.pooling);
  j["ids"] = set.ids;
  std::ofstream man(path + ".manifest.json");
  man << j.dump();
}

}  // namespace evver
