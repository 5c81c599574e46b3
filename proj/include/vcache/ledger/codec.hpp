#pragma once

// Canonical byte encoding: fixed field order, big-endian integers, doubles as
// their IEEE-754 bit pattern, variable-length fields prefixed by a u32 length.

#include <bit>
#include <cstdint>
#include <string>

#include "vcache/core/error.hpp"
#include "vcache/ledger/crypto.hpp"

namespace vcache::ledger {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void u64(std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void blob(ByteView b) {
    u32(static_cast<std::uint32_t>(b.size()));
    raw(b);
  }
  template <std::size_t N, typename Tag>
  void fixed(const FixedBytes<N, Tag>& f) {
    raw(f.view());
  }

  const Bytes& bytes() const { return out_; }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(ByteView in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v = (v << 8) | in_[pos_++];
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v = (v << 8) | in_[pos_++];
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  Bytes raw(std::size_t n) {
    need(n);
    Bytes out(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
              in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }
  Bytes blob() { return raw(u32()); }
  template <typename T>
  T fixed() {
    T f;
    need(T::size());
    for (auto& b : f.bytes) b = in_[pos_++];
    return f;
  }

  std::size_t remaining() const { return in_.size() - pos_; }
  void expect_end() const {
    if (pos_ != in_.size()) throw ParseError("trailing bytes after record");
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw ParseError("truncated record");
  }

  ByteView in_;
  std::size_t pos_ = 0;
};

}  // namespace vcache::ledger
