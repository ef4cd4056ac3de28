// SPDX-License-Identifier: Apache-2.0
#pragma once

// Little-endian container helpers shared by the dataset and checkpoint
// formats.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tagm::io {

inline constexpr std::size_t kHeaderSize = 16;

struct Header {
  char magic[4] = {0, 0, 0, 0};
  std::uint32_t version = 0;
  std::uint64_t payload_length = 0;
};

class Writer {
 public:
  void bytes(std::span<const char> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void f64s(std::span<const double> v);
  const std::vector<char>& buffer() const { return buf_; }
  std::size_t size() const { return buf_.size(); }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(std::span<const char> data, std::string what) : data_(data), what_(std::move(what)) {}
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  void f64s(std::span<double> out);
  std::span<const char> bytes(std::size_t n);
  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const;
  std::span<const char> data_;
  std::size_t pos_ = 0;
  std::string what_;
};

/// Writes header + length-prefixed metadata + body atomically enough for
/// single-writer use (truncate then write).
void write_container(const std::filesystem::path& path, const char (&magic)[4],
                     std::uint32_t version, const std::string& metadata,
                     std::span<const char> payload, std::span<const char> trailer = {});

struct Container {
  Header header;
  std::string metadata;
  std::vector<char> payload;  // exactly header.payload_length bytes
  std::vector<char> trailer;  // whatever follows the payload
};

/// Validates magic before reading anything beyond the header, then checks
/// the declared lengths against the file size.
Container read_container(const std::filesystem::path& path, const char (&magic)[4],
                         std::uint32_t version, const std::string& what);

}  // namespace tagm::io
