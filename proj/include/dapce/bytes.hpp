#pragma once

// Little-endian binary encoding shared by the checkpoint and model bundle formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dapce/errors.hpp"

namespace dapce {

using Bytes = std::vector<std::uint8_t>;

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size,
                                std::uint64_t hash = 0xCBF29CE484222325ULL) noexcept {
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= data[i];
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void bytes(const Bytes& b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void string(std::string_view s) {
    u64(s.size());
    raw(s);
  }
  /// Shape (rows, cols) followed by column-major values.
  void matrix(const Eigen::MatrixXd& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
  }

  Bytes& data() { return out_; }
  Bytes take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes out_;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size, std::string context)
      : data_(data), size_(size), context_(std::move(context)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  std::string string() { return raw(static_cast<std::size_t>(u64())); }
  Eigen::MatrixXd matrix() {
    const std::uint64_t rows = u64();
    const std::uint64_t cols = u64();
    if (rows > (1ULL << 32) || cols > (1ULL << 32) || (cols != 0 && rows > remaining() / 8 / cols)) {
      fail(ErrorKind::Truncated, context_ + ": matrix of " + std::to_string(rows) + "x" +
                                     std::to_string(cols) + " exceeds the remaining data");
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
    return m;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return size_ - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > size_ - pos_) {
      fail(ErrorKind::Truncated, context_ + ": unexpected end of data at byte " + std::to_string(pos_));
    }
  }
  std::uint64_t get(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string context_;
};

/// Frames `payload` as magic | u32 version | u64 length | payload | u64 FNV-1a of all preceding bytes.
Bytes frame_payload(std::string_view magic, std::uint32_t version, const Bytes& payload);

/// Validates a frame produced by frame_payload and returns the payload.
/// Errors: BadFormat (magic), UnsupportedVersion, Truncated, ChecksumMismatch.
Bytes unframe_payload(std::string_view magic, std::uint32_t version, const Bytes& framed,
                      const std::string& context);

}  // namespace dapce
