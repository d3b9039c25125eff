#pragma once

// Checkpoint layout:
//   8 bytes  magic "CRAYONCK"
//   4 bytes  format version (little-endian u32)
//   8 bytes  header length n (u64)
//   n bytes  JSON header: config, vocabulary, annotation resources,
//            dtype and a tensor index {name, rows, cols, offset}
//   tensor payload, raw row-major values in the stored dtype

#include "crayon/attributes/annotator.hpp"
#include "crayon/corpus/vocabulary.hpp"
#include "crayon/io.hpp"
#include "crayon/model/model.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <memory>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace crayon::model {

inline constexpr char kCheckpointMagic[8] = {'C', 'R', 'A', 'Y', 'O', 'N', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename S>
constexpr const char* dtype_name() {
  if constexpr (std::is_same_v<S, float>) return "f32";
  else return "f64";
}

template <typename S>
struct Checkpoint {
  std::unique_ptr<Model<S>> model;
  corpus::Vocabulary vocab;
  attr::AnnotationResources resources;
  nlohmann::json extra;  // training metadata, passed through untouched
};

template <typename S>
std::string serialize_checkpoint(const Model<S>& m, const corpus::Vocabulary& vocab,
                                 const attr::AnnotationResources& resources,
                                 const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json header;
  header["config"] = to_json(m.config());
  header["vocabulary"] = to_json(vocab);
  header["resources"] = to_json(resources);
  header["dtype"] = dtype_name<S>();
  header["extra"] = extra;
  nlohmann::json index = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& p : m.parameters().all()) {
    index.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(p.value.size()) * sizeof(S);
  }
  header["tensors"] = std::move(index);
  const std::string h = header.dump();

  std::string out(kCheckpointMagic, 8);
  const std::uint32_t version = kCheckpointVersion;
  const std::uint64_t hlen = h.size();
  out.append(reinterpret_cast<const char*>(&version), sizeof version);
  out.append(reinterpret_cast<const char*>(&hlen), sizeof hlen);
  out += h;
  for (const auto& p : m.parameters().all()) {
    out.append(reinterpret_cast<const char*>(p.value.data()), static_cast<std::size_t>(p.value.size()) * sizeof(S));
  }
  return out;
}

template <typename S>
void save_checkpoint(const std::filesystem::path& path, const Model<S>& m, const corpus::Vocabulary& vocab,
                     const attr::AnnotationResources& resources, const nlohmann::json& extra = nlohmann::json::object()) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  write_file(tmp, serialize_checkpoint(m, vocab, resources, extra));
  std::filesystem::rename(tmp, path);
}

namespace detail {

template <typename S, typename Stored>
void copy_tensor(Matrix<S>& dst, const char* src) {
  for (Eigen::Index i = 0; i < dst.size(); ++i) {
    Stored v;
    std::memcpy(&v, src + static_cast<std::size_t>(i) * sizeof(Stored), sizeof(Stored));
    dst.data()[i] = static_cast<S>(v);
  }
}

}  // namespace detail

// Restores a model of scalar type S. A checkpoint stored in the other
// precision is converted value by value.
template <typename S>
Checkpoint<S> deserialize_checkpoint(const std::string& bytes, const std::string& origin = "checkpoint") {
  auto bad = [&](const std::string& what) { return ConfigError(origin + ": " + what); };
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) throw bad("not a checkpoint file");
  std::uint32_t version = 0;
  std::uint64_t hlen = 0;
  std::memcpy(&version, bytes.data() + 8, sizeof version);
  std::memcpy(&hlen, bytes.data() + 12, sizeof hlen);
  if (version != kCheckpointVersion) throw bad("unsupported checkpoint version " + std::to_string(version));
  if (hlen > bytes.size() - 20) throw bad("truncated header");
  Checkpoint<S> ck;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(20, hlen));
    ModelConfig cfg;
    update_from_json(cfg, header.at("config"));
    ck.vocab = corpus::vocabulary_from_json(header.at("vocabulary"));
    ck.resources = attr::resources_from_json(header.at("resources"));
    ck.extra = header.value("extra", nlohmann::json::object());
    ck.model = std::make_unique<Model<S>>(cfg);
  } catch (const nlohmann::json::exception& e) {
    throw bad(e.what());
  }
  const std::string dtype = header.value("dtype", "");
  const std::size_t width = dtype == "f32" ? sizeof(float) : dtype == "f64" ? sizeof(double) : 0;
  if (width == 0) throw bad("unknown dtype '" + dtype + "'");
  const char* payload = bytes.data() + 20 + hlen;
  const std::size_t payload_size = bytes.size() - 20 - hlen;

  auto& store = ck.model->parameters();
  std::size_t restored = 0;
  for (const auto& t : header.at("tensors")) {
    const auto name = t.at("name").get<std::string>();
    auto* p = store.find(name);
    if (p == nullptr) throw bad("unknown tensor " + name);
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    if (rows != p->value.rows() || cols != p->value.cols()) throw bad("shape mismatch for " + name);
    const auto offset = t.at("offset").get<std::uint64_t>();
    if (offset + static_cast<std::uint64_t>(rows * cols) * width > payload_size) throw bad("truncated tensor " + name);
    if (width == sizeof(float)) detail::copy_tensor<S, float>(p->value, payload + offset);
    else detail::copy_tensor<S, double>(p->value, payload + offset);
    ++restored;
  }
  if (restored != store.all().size()) throw bad("checkpoint is missing tensors");
  if (ck.vocab.size() != ck.model->config().vocab_size) throw bad("vocabulary size does not match the model");
  return ck;
}

template <typename S>
Checkpoint<S> load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint<S>(read_file(path), path.string());
}

// FNV-1a 64-bit digest, hex encoded. Identifies the loaded checkpoint.
inline std::string digest_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream ss;
  ss << std::hex;
  ss.width(16);
  ss.fill('0');
  ss << h;
  return ss.str();
}

}  // namespace crayon::model
