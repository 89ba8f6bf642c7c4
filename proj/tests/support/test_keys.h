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

#ifndef CACTUS_TESTS_SUPPORT_TEST_KEYS_H_
#define CACTUS_TESTS_SUPPORT_TEST_KEYS_H_

#include <random>

#include "cactus/keytree.h"
#include "cactus/streamcrypto.h"

namespace cactus::testing {

// RSA-2048 generation dominates test runtime; share one key per binary.
inline const stream::SigningKeypair& SharedCameraKey() {
  static const stream::SigningKeypair key = stream::SigningKeypair::Generate();
  return key;
}

inline Key256 SeedFrom(std::uint64_t s) {
  std::mt19937_64 rng(s);
  std::array<std::uint8_t, 32> raw;
  for (auto& b : raw) b = static_cast<std::uint8_t>(rng());
  return Key256(raw);
}

inline Bytes PatternPayload(std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Bytes out(size);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  return out;
}

// Counts Extract calls made through it.
class CountingKeyProvider : public keytree::KeyProvider {
 public:
  explicit CountingKeyProvider(const keytree::KeyProvider& inner) : inner_(inner) {}
  const keytree::TreeParams& params() const override { return inner_.params(); }
  keytree::NodeKey Extract(keytree::Epoch epoch) const override {
    ++calls_;
    return inner_.Extract(epoch);
  }
  int calls() const { return calls_; }

 private:
  const keytree::KeyProvider& inner_;
  mutable int calls_ = 0;
};

}  // namespace cactus::testing

#endif  // CACTUS_TESTS_SUPPORT_TEST_KEYS_H_
