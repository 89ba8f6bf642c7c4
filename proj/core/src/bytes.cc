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

#include "cactus/bytes.h"

#include <openssl/crypto.h>

namespace cactus {

void SecureZero(void* data, std::size_t size) {
  if (data != nullptr && size > 0) OPENSSL_cleanse(data, size);
}

std::string ToHex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

namespace {

int HexValue(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Bytes FromHex(std::string_view hex) {
  if (hex.size() % 2 != 0) Fail(ErrorCode::kInvalidArgument, "odd hex length");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = HexValue(hex[2 * i]);
    int lo = HexValue(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) Fail(ErrorCode::kInvalidArgument, "bad hex digit");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

ByteWriter& ByteWriter::U8(std::uint8_t v) {
  out_.push_back(v);
  return *this;
}

ByteWriter& ByteWriter::U16(std::uint16_t v) {
  for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  return *this;
}

ByteWriter& ByteWriter::U32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  return *this;
}

ByteWriter& ByteWriter::U64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  return *this;
}

ByteWriter& ByteWriter::U64BigEndian(std::uint64_t v) {
  for (int i = 7; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  return *this;
}

ByteWriter& ByteWriter::Raw(ByteView v) {
  out_.insert(out_.end(), v.begin(), v.end());
  return *this;
}

ByteWriter& ByteWriter::Blob(ByteView v) {
  if (v.size() > UINT32_MAX) Fail(ErrorCode::kInvalidArgument, "blob too large");
  U32(static_cast<std::uint32_t>(v.size()));
  return Raw(v);
}

std::uint8_t ByteReader::U8() { return Raw(1)[0]; }

std::uint16_t ByteReader::U16() {
  auto v = Raw(2);
  return static_cast<std::uint16_t>(v[0] | (v[1] << 8));
}

std::uint32_t ByteReader::U32() {
  auto v = Raw(4);
  std::uint32_t out = 0;
  for (int i = 3; i >= 0; --i) out = (out << 8) | v[i];
  return out;
}

std::uint64_t ByteReader::U64() {
  auto v = Raw(8);
  std::uint64_t out = 0;
  for (int i = 7; i >= 0; --i) out = (out << 8) | v[i];
  return out;
}

ByteView ByteReader::Raw(std::size_t n) {
  if (n > remaining()) Malformed("truncated input");
  ByteView out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

ByteView ByteReader::Blob() {
  std::uint32_t n = U32();
  return Raw(n);
}

void ByteReader::ExpectEnd() const {
  if (remaining() != 0) Malformed("trailing bytes");
}

void ByteReader::Malformed(const std::string& what) const {
  Fail(on_error_, what + " at offset " + std::to_string(pos_));
}

}  // namespace cactus
