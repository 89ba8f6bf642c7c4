// Copyright 2026 The Cactus Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CACTUS_BYTES_H_
#define CACTUS_BYTES_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cactus/error.h"

namespace cactus {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Overwrites memory in a way the optimizer may not elide.
void SecureZero(void* data, std::size_t size);

// Allocator that wipes storage before returning it to the heap.
template <typename T>
struct ZeroizingAllocator {
  using value_type = T;

  ZeroizingAllocator() = default;
  template <typename U>
  ZeroizingAllocator(const ZeroizingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return std::allocator<T>{}.allocate(n); }
  void deallocate(T* p, std::size_t n) noexcept {
    SecureZero(p, n * sizeof(T));
    std::allocator<T>{}.deallocate(p, n);
  }

  template <typename U>
  bool operator==(const ZeroizingAllocator<U>&) const noexcept {
    return true;
  }
};

using SecureBytes = std::vector<std::uint8_t, ZeroizingAllocator<std::uint8_t>>;

// Fixed-size secret that is wiped on destruction and on overwrite.
template <std::size_t N>
class SecretArray {
 public:
  SecretArray() { bytes_.fill(0); }
  explicit SecretArray(ByteView src) {
    if (src.size() != N) Fail(ErrorCode::kInvalidArgument, "secret length");
    std::copy(src.begin(), src.end(), bytes_.begin());
  }
  SecretArray(const SecretArray&) = default;
  SecretArray& operator=(const SecretArray& other) {
    if (this != &other) bytes_ = other.bytes_;
    return *this;
  }
  ~SecretArray() { SecureZero(bytes_.data(), N); }

  static constexpr std::size_t size() { return N; }
  std::uint8_t* data() { return bytes_.data(); }
  const std::uint8_t* data() const { return bytes_.data(); }
  std::span<std::uint8_t, N> span() { return bytes_; }
  std::span<const std::uint8_t, N> span() const { return bytes_; }
  std::uint8_t& operator[](std::size_t i) { return bytes_[i]; }
  std::uint8_t operator[](std::size_t i) const { return bytes_[i]; }

  void Wipe() { SecureZero(bytes_.data(), N); }

  // Constant-time comparison.
  friend bool operator==(const SecretArray& a, const SecretArray& b) {
    std::uint8_t diff = 0;
    for (std::size_t i = 0; i < N; ++i) diff |= a.bytes_[i] ^ b.bytes_[i];
    return diff == 0;
  }

 private:
  std::array<std::uint8_t, N> bytes_;
};

using Key256 = SecretArray<32>;
using Key128 = SecretArray<16>;

std::string ToHex(ByteView bytes);
Bytes FromHex(std::string_view hex);  // throws kInvalidArgument

inline ByteView AsBytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// Append-only encoder for the binary wire formats. Little-endian unless a
// method says otherwise.
class ByteWriter {
 public:
  ByteWriter& U8(std::uint8_t v);
  ByteWriter& U16(std::uint16_t v);
  ByteWriter& U32(std::uint32_t v);
  ByteWriter& U64(std::uint64_t v);
  ByteWriter& U64BigEndian(std::uint64_t v);
  ByteWriter& Raw(ByteView v);
  ByteWriter& Raw(std::string_view v) { return Raw(AsBytes(v)); }
  // u32 length prefix followed by the bytes.
  ByteWriter& Blob(ByteView v);

  const Bytes& bytes() const& { return out_; }
  Bytes bytes() && { return std::move(out_); }
  std::size_t size() const { return out_.size(); }

 private:
  Bytes out_;
};

// Bounds-checked decoder. Every read past the end throws an Error carrying
// the code chosen by the owner of the format.
class ByteReader {
 public:
  ByteReader(ByteView data, ErrorCode on_error)
      : data_(data), on_error_(on_error) {}

  std::uint8_t U8();
  std::uint16_t U16();
  std::uint32_t U32();
  std::uint64_t U64();
  ByteView Raw(std::size_t n);
  template <std::size_t N>
  std::array<std::uint8_t, N> Array() {
    auto v = Raw(N);
    std::array<std::uint8_t, N> out;
    std::copy(v.begin(), v.end(), out.begin());
    return out;
  }
  ByteView Blob();

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }
  void ExpectEnd() const;
  [[noreturn]] void Malformed(const std::string& what) const;

 private:
  ByteView data_;
  std::size_t pos_ = 0;
  ErrorCode on_error_;
};

}  // namespace cactus

#endif  // CACTUS_BYTES_H_
