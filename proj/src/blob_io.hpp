#pragma once

// Raw little-endian blobs and JSON manifests shared by datasets and checkpoints.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "ladder/error.hpp"

namespace ladder::detail {

template <typename T>
using uint_of = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;

template <typename U>
U byteswap(U v) {
  U out = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out = static_cast<U>((out << 8) | ((v >> (8 * i)) & 0xFF));
  }
  return out;
}

template <typename T>
void write_blob(const std::filesystem::path& path, std::span<const T> values) {
  static_assert(std::is_floating_point_v<T> && (sizeof(T) == 4 || sizeof(T) == 8));
  std::vector<uint_of<T>> raw(values.size());
  std::memcpy(raw.data(), values.data(), values.size() * sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& r : raw) r = byteswap(r);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(T)));
  if (!out) fail(ErrorCode::io_error, "write failed for " + path.string());
}

template <typename T>
std::vector<T> read_blob(const std::filesystem::path& path, std::size_t expected_count) {
  std::error_code ec;
  const auto bytes = std::filesystem::file_size(path, ec);
  if (ec) fail(ErrorCode::io_error, "cannot stat " + path.string() + ": " + ec.message());
  if (bytes != expected_count * sizeof(T)) {
    fail(ErrorCode::shape_mismatch, path.filename().string() + " holds " + std::to_string(bytes) +
                                        " bytes, manifest implies " +
                                        std::to_string(expected_count * sizeof(T)));
  }
  std::vector<uint_of<T>> raw(expected_count);
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
  if (!in) fail(ErrorCode::io_error, "short read from " + path.string());
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& r : raw) r = byteswap(r);
  }
  std::vector<T> values(expected_count);
  std::memcpy(values.data(), raw.data(), bytes);
  return values;
}

inline nlohmann::json read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest";
  std::ifstream in(path);
  if (!in) fail(ErrorCode::manifest_error, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::manifest_error, path.string() + ": " + e.what());
  }
}

inline void write_manifest(const std::filesystem::path& dir, const nlohmann::json& manifest) {
  const auto path = dir / "manifest";
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
  out << manifest.dump(2) << '\n';
  if (!out) fail(ErrorCode::io_error, "write failed for " + path.string());
}

template <typename T>
T manifest_field(const nlohmann::json& manifest, const char* key) {
  auto it = manifest.find(key);
  if (it == manifest.end()) fail(ErrorCode::manifest_error, std::string("manifest is missing '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::manifest_error, std::string("manifest field '") + key + "' has the wrong type");
  }
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io_error, "cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace ladder::detail
