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

#include "cactus/passphrase.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>

#include "cactus/crypto.h"

namespace cactus {
namespace {

constexpr std::array<std::string_view, 2048> kWordList = {
#include "wordlist_en.inc"
};

// 132 bits: key || 4 checksum bits, as 12 x 11-bit indices.
std::array<int, Passphrase::kWords> ToIndices(const Key128& key) {
  const auto digest = crypto::Sha256(key.span());
  std::array<std::uint8_t, 17> bits{};
  std::copy(key.data(), key.data() + 16, bits.begin());
  bits[16] = digest[0] & 0xf0;
  std::array<int, Passphrase::kWords> out{};
  for (int w = 0; w < Passphrase::kWords; ++w) {
    int v = 0;
    for (int b = 0; b < 11; ++b) {
      const int pos = w * 11 + b;
      v = (v << 1) | ((bits[pos / 8] >> (7 - pos % 8)) & 1);
    }
    out[w] = v;
  }
  SecureZero(bits.data(), bits.size());
  return out;
}

}  // namespace

std::string_view PassphraseWord(int index) {
  if (index < 0 || index >= static_cast<int>(kWordList.size())) {
    Fail(ErrorCode::kInvalidArgument, "word index");
  }
  return kWordList[static_cast<std::size_t>(index)];
}

int PassphraseWordIndex(std::string_view word) {
  // The list is sorted.
  auto it = std::lower_bound(kWordList.begin(), kWordList.end(), word);
  if (it == kWordList.end() || *it != word) return -1;
  return static_cast<int>(it - kWordList.begin());
}

Passphrase Passphrase::Generate() {
  Key128 key;
  crypto::RandomBytes(key.span());
  return Passphrase(key);
}

Passphrase Passphrase::FromKey(const Key128& key) { return Passphrase(key); }

Passphrase Passphrase::Parse(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  if (words.size() != kWords) {
    Fail(ErrorCode::kBadPassphrase, "expected " + std::to_string(kWords) + " words, got " +
                                        std::to_string(words.size()));
  }
  std::array<std::uint8_t, 17> bits{};
  for (int w = 0; w < kWords; ++w) {
    const int v = PassphraseWordIndex(words[static_cast<std::size_t>(w)]);
    if (v < 0) Fail(ErrorCode::kBadPassphrase, "unknown word '" + words[static_cast<std::size_t>(w)] + "'");
    for (int b = 0; b < 11; ++b) {
      const int pos = w * 11 + b;
      if ((v >> (10 - b)) & 1) bits[pos / 8] |= static_cast<std::uint8_t>(0x80 >> (pos % 8));
    }
  }
  Key128 key(ByteView(bits.data(), 16));
  const std::uint8_t checksum = bits[16];
  SecureZero(bits.data(), bits.size());
  if ((crypto::Sha256(key.span())[0] & 0xf0) != checksum) {
    Fail(ErrorCode::kBadPassphrase, "checksum mismatch");
  }
  return Passphrase(key);
}

std::string Passphrase::ToString() const {
  std::string out;
  for (int v : ToIndices(key_)) {
    if (!out.empty()) out.push_back(' ');
    out.append(kWordList[static_cast<std::size_t>(v)]);
  }
  return out;
}

}  // namespace cactus
