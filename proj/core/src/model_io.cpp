#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evver/binary_io.hpp"
#include "evver/error.hpp"
#include "evver/evvernet.hpp"

namespace evver {
namespace {

constexpr char kMagic[4] = {'E', 'V', 'N', 'M'};

std::string hex_to_bytes(const std::string& hex) {
  std::string out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
    out.push_back(static_cast<char>(std::stoi(hex.substr(i, 2), nullptr, 16)));
  }
  return out;
}

}  // namespace

void save_model(const EvverModel& model, const std::string& path) {
  model.check_shapes();
  std::ostringstream payload(std::ios::binary);
  nlohmann::json header{{"config", model.config}, {"training_metrics", model.training_metrics}};
  if (model.best_epoch) header["best_epoch"] = *model.best_epoch;
  std::string header_text = header.dump();
  binio::write_u32(payload, static_cast<std::uint32_t>(header_text.size()));
  payload.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  binio::write_u32(payload, static_cast<std::uint32_t>(model.params.layers.size()));
  for (const auto& layer : model.params.layers) {
    binio::write_u32(payload, static_cast<std::uint32_t>(layer.weight.rows()));
    binio::write_u32(payload, static_cast<std::uint32_t>(layer.weight.cols()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) binio::write_f64(payload, layer.weight(r, c));
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) binio::write_f64(payload, layer.bias(r));
  }
  std::string bytes = payload.str();
  std::string digest = hex_to_bytes(sha256_hex(bytes));

  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    out.write(kMagic, 4);
    binio::write_u32(out, kModelVersion);
    binio::write_u64(out, bytes.size());
    out.write(digest.data(), 32);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw DataError("cannot rename " + tmp + " to " + path);
}

EvverModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path);
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kMagic)) throw DataError(path + ": not a model file (bad magic)");
  auto version = binio::read_u32(in);
  if (version != kModelVersion) {
    throw DataError(path + ": model version " + std::to_string(version) + ", expected " + std::to_string(kModelVersion));
  }
  auto length = binio::read_u64(in);
  std::string digest(32, '\0');
  in.read(digest.data(), 32);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() != length) {
    throw DataError(path + ": payload is " + std::to_string(bytes.size()) + " bytes, header says " +
                    std::to_string(length));
  }
  if (hex_to_bytes(sha256_hex(bytes)) != digest) throw DataError(path + ": checksum mismatch");

  std::istringstream payload(bytes, std::ios::binary);
  EvverModel m;
  try {
    auto header_len = binio::read_u32(payload);
    std::string header_text(header_len, '\0');
    payload.read(header_text.data(), header_len);
    auto header = nlohmann::json::parse(header_text);
    m.config = header.at("config").get<EvverConfig>();
    m.training_metrics = header.at("training_metrics").get<std::vector<EpochMetrics>>();
    if (header.contains("best_epoch")) m.best_epoch = header["best_epoch"].get<std::size_t>();
    auto layers = binio::read_u32(payload);
    for (std::uint32_t l = 0; l < layers; ++l) {
      auto rows = binio::read_u32(payload);
      auto cols = binio::read_u32(payload);
      mlp::Layer<double> layer{mlp::Mat<double>(rows, cols), mlp::Vec<double>(rows)};
      for (std::uint32_t r = 0; r < rows; ++r) {
        for (std::uint32_t c = 0; c < cols; ++c) layer.weight(r, c) = binio::read_f64(payload);
      }
      for (std::uint32_t r = 0; r < rows; ++r) layer.bias(r) = binio::read_f64(payload);
      m.params.layers.push_back(std::move(layer));
    }
    if (!payload) throw DataError("truncated payload");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad model header: " + e.what());
  }
  m.check_shapes();
  return m;
}

}  // namespace evver
