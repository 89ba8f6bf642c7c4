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

#ifndef CACTUS_PASSPHRASE_H_
#define CACTUS_PASSPHRASE_H_

#include <string>
#include <string_view>

#include "cactus/bytes.h"

namespace cactus {

// A 128-bit key written as 12 words from the 2048-word BIP-39 English list:
// 128 key bits followed by the first 4 bits of SHA-256(key), 11 bits a word.
class Passphrase {
 public:
  static constexpr int kWords = 12;

  static Passphrase Generate();
  static Passphrase FromKey(const Key128& key);
  // Case-insensitive, any whitespace between words. Throws kBadPassphrase on
  // an unknown word, wrong word count or checksum mismatch.
  static Passphrase Parse(std::string_view text);

  std::string ToString() const;
  const Key128& key() const { return key_; }

  friend bool operator==(const Passphrase& a, const Passphrase& b) { return a.key_ == b.key_; }

 private:
  explicit Passphrase(const Key128& key) : key_(key) {}
  Key128 key_;
};

// Word `index` (0..2047) of the list, and the reverse lookup.
std::string_view PassphraseWord(int index);
int PassphraseWordIndex(std::string_view word);  // -1 if absent

}  // namespace cactus

#endif  // CACTUS_PASSPHRASE_H_
