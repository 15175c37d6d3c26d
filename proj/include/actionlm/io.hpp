#pragma once

#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "actionlm/errors.hpp"

namespace actionlm {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (!in.good() && !in.eof()) throw IoError("read failed: " + path.string());
  return ss.str();
}

// Write via a sibling temp file and rename. Rename is atomic on POSIX, so
// concurrent writers of distinct files never see partial content and two
// writers of the same file leave one complete version.
inline void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out.good()) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("rename failed for: " + path.string());
  }
}

// Little-endian binary scalar helpers for the fixed file formats.
template <class T>
void put_le(std::string& buf, T v) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <class T>
T get_le(const std::string& buf, std::size_t& pos) {
  static_assert(std::is_integral_v<T>);
  if (pos + sizeof(T) > buf.size()) throw ParseError("truncated binary payload");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  pos += sizeof(T);
  return static_cast<T>(v);
}

// Raw little-endian dump of an arithmetic array. All supported targets are
// little-endian; stamped into the headers as "le" regardless.
template <class T>
void put_array(std::string& buf, const T* data, std::size_t n) {
  buf.append(reinterpret_cast<const char*>(data), n * sizeof(T));
}

template <class T>
void get_array(const std::string& buf, std::size_t& pos, T* data, std::size_t n) {
  if (pos + n * sizeof(T) > buf.size()) throw ParseError("truncated binary payload");
  std::memcpy(data, buf.data() + pos, n * sizeof(T));
  pos += n * sizeof(T);
}

// FNV-1a 64-bit. Used for config hashes and input manifests.
inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

// Fixed-precision double formatting; keeps emitted artifacts byte-stable.
inline std::string fmt_double(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return std::string(buf);
}

// Shortest round-trip representation, for metrics written to CSV.
inline std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

}  // namespace actionlm
