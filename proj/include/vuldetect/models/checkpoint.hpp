#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>

#include "vuldetect/models/classifier.hpp"

namespace vuldetect::models {

inline constexpr std::string_view kCheckpointMagic = "VDCK";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// A loaded model plus the free-form metadata stored beside its config
/// (vocabulary, preprocessing options and similar).
struct Checkpoint {
  AnyClassifier model;
  nlohmann::json meta;
};

namespace detail {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

template <class T>
void put(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <class T>
  T get(const std::string& field) {
    T value;
    std::memcpy(&value, take(sizeof(T), field).data(), sizeof(T));
    return value;
  }

  std::string_view take(std::size_t n, const std::string& field) {
    if (bytes_.size() - pos_ < n) throw CheckpointError("checkpoint truncated while reading " + field);
    const auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Canonical config record: sorted keys, no insignificant whitespace.
inline std::string checkpoint_header(const AnyClassifier& model, const nlohmann::json& meta) {
  const nlohmann::json record = {{"architecture", architecture(model)},
                                 {"config", config_json(model)},
                                 {"meta", meta.is_null() ? nlohmann::json::object() : meta}};
  return record.dump();
}

inline std::string serialize_checkpoint(const AnyClassifier& model,
                                        const nlohmann::json& meta = {}) {
  std::string out(kCheckpointMagic);
  detail::put<std::uint32_t>(out, kCheckpointVersion);
  const std::string header = checkpoint_header(model, meta);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  for (const auto& p : parameters(model).entries()) {
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(p.var.shape().size()));
    for (std::size_t d : p.var.shape()) detail::put<std::uint64_t>(out, d);
    for (double v : p.var.value().values()) detail::put<double>(out, v);
  }
  return out;
}

inline Checkpoint deserialize_checkpoint(std::string_view bytes) {
  detail::Reader in(bytes);
  if (in.take(kCheckpointMagic.size(), "magic") != kCheckpointMagic) {
    throw CheckpointError("bad magic: not a vuldetect checkpoint");
  }
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = in.get<std::uint32_t>("config length");
  nlohmann::json record;
  try {
    record = nlohmann::json::parse(in.take(header_len, "config"));
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError(std::string("config record is not valid JSON: ") + e.what());
  }
  if (!record.is_object() || !record.contains("architecture") || !record.contains("config")) {
    throw CheckpointError("config record lacks architecture or config");
  }
  AnyClassifier model = [&] {
    try {
      return make_classifier(record.at("architecture").get<std::string>(), record.at("config"));
    } catch (const Error& e) {
      throw CheckpointError(std::string("config: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError(std::string("config: ") + e.what());
    }
  }();

  for (const auto& p : parameters(model).entries()) {
    const auto name_len = in.get<std::uint32_t>("name length of " + p.name);
    const std::string name(in.take(name_len, "name of " + p.name));
    if (name != p.name) {
      throw CheckpointError("parameter '" + name + "' found where '" + p.name + "' expected");
    }
    const auto rank = in.get<std::uint32_t>("rank of " + name);
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(in.get<std::uint64_t>("dims of " + name));
    if (shape != p.var.shape()) {
      throw CheckpointError("parameter '" + name + "' has shape " + shape_string(shape) +
                            ", config implies " + shape_string(p.var.shape()));
    }
    Var target = p.var;
    for (double& v : target.value().values()) v = in.get<double>("data of " + name);
  }
  if (!in.done()) throw CheckpointError("trailing bytes after last parameter");
  return {std::move(model), record.value("meta", nlohmann::json::object())};
}

inline void save_checkpoint(const AnyClassifier& model, const std::string& path,
                            const nlohmann::json& meta = {}) {
  const std::string bytes = serialize_checkpoint(model, meta);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace vuldetect::models
