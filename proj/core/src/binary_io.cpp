// SPDX-License-Identifier: Apache-2.0
#include "binary_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "tagm/error.hpp"

namespace tagm::io {

namespace {

template <typename T>
void put_le(std::vector<char>& buf, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  buf.insert(buf.end(), raw, raw + sizeof(T));
}

template <typename T>
T get_le(const char* p) {
  char raw[sizeof(T)];
  std::memcpy(raw, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  T v;
  std::memcpy(&v, raw, sizeof(T));
  return v;
}

}  // namespace

void Writer::u32(std::uint32_t v) { put_le(buf_, v); }
void Writer::u64(std::uint64_t v) { put_le(buf_, v); }
void Writer::f64(double v) { put_le(buf_, v); }
void Writer::f64s(std::span<const double> v) {
  buf_.reserve(buf_.size() + v.size() * 8);
  for (double d : v) put_le(buf_, d);
}

void Reader::need(std::size_t n) const {
  if (n > data_.size() - pos_) {
    throw FormatError(what_ + ": truncated at byte " + std::to_string(pos_) + ": expected " +
                      std::to_string(n) + " more bytes, " + std::to_string(data_.size() - pos_) +
                      " available");
  }
}

std::uint32_t Reader::u32() {
  need(4);
  auto v = get_le<std::uint32_t>(data_.data() + pos_);
  pos_ += 4;
  return v;
}

std::uint64_t Reader::u64() {
  need(8);
  auto v = get_le<std::uint64_t>(data_.data() + pos_);
  pos_ += 8;
  return v;
}

double Reader::f64() {
  need(8);
  auto v = get_le<double>(data_.data() + pos_);
  pos_ += 8;
  return v;
}

void Reader::f64s(std::span<double> out) {
  need(out.size() * 8);
  for (double& d : out) {
    d = get_le<double>(data_.data() + pos_);
    pos_ += 8;
  }
}

std::span<const char> Reader::bytes(std::size_t n) {
  need(n);
  auto s = data_.subspan(pos_, n);
  pos_ += n;
  return s;
}

void write_container(const std::filesystem::path& path, const char (&magic)[4],
                     std::uint32_t version, const std::string& metadata,
                     std::span<const char> payload, std::span<const char> trailer) {
  Writer w;
  w.bytes(std::span<const char>(magic, 4));
  w.u32(version);
  w.u64(payload.size());
  w.u64(metadata.size());
  w.bytes(std::span<const char>(metadata.data(), metadata.size()));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  out.write(trailer.data(), static_cast<std::streamsize>(trailer.size()));
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

Container read_container(const std::filesystem::path& path, const char (&magic)[4],
                         std::uint32_t version, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + what + " '" + path.string() + "'");
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);

  char head[kHeaderSize + 8];
  const std::uint64_t head_avail = std::min<std::uint64_t>(file_size, sizeof(head));
  in.read(head, static_cast<std::streamsize>(head_avail));
  if (head_avail < 4 || std::memcmp(head, magic, 4) != 0) {
    throw FormatError(what + " '" + path.string() + "': bad magic (expected '" +
                      std::string(magic, 4) + "')");
  }
  if (head_avail < sizeof(head)) {
    throw FormatError(what + " '" + path.string() + "': truncated header: expected " +
                      std::to_string(sizeof(head)) + " bytes, " + std::to_string(head_avail) +
                      " available");
  }
  Container c;
  std::memcpy(c.header.magic, head, 4);
  c.header.version = get_le<std::uint32_t>(head + 4);
  c.header.payload_length = get_le<std::uint64_t>(head + 8);
  const auto meta_len = get_le<std::uint64_t>(head + 16);
  if (c.header.version != version) {
    throw FormatError(what + " '" + path.string() + "': unsupported version " +
                      std::to_string(c.header.version) + " (expected " + std::to_string(version) +
                      ")");
  }
  const std::uint64_t avail = file_size - sizeof(head);
  if (meta_len > avail || c.header.payload_length > avail - meta_len) {
    throw FormatError(what + " '" + path.string() + "': truncated: header declares " +
                      std::to_string(meta_len) + " metadata + " +
                      std::to_string(c.header.payload_length) + " payload bytes, " +
                      std::to_string(avail) + " available");
  }
  c.metadata.resize(meta_len);
  in.read(c.metadata.data(), static_cast<std::streamsize>(meta_len));
  c.payload.resize(c.header.payload_length);
  in.read(c.payload.data(), static_cast<std::streamsize>(c.payload.size()));
  c.trailer.resize(avail - meta_len - c.header.payload_length);
  in.read(c.trailer.data(), static_cast<std::streamsize>(c.trailer.size()));
  if (!in) throw Error("read from '" + path.string() + "' failed");
  return c;
}

}  // namespace tagm::io
