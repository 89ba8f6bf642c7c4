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

#ifndef CACTUS_CRYPTO_H_
#define CACTUS_CRYPTO_H_

// Thin RAII wrappers over the OpenSSL primitives the protocols need. Nothing
// here knows about trees, frames or pairing; callers own the formats.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>

#include "cactus/bytes.h"

typedef struct evp_pkey_st EVP_PKEY;

namespace cactus::crypto {

using Digest = std::array<std::uint8_t, 32>;
using GcmTag = std::array<std::uint8_t, 16>;

void RandomBytes(std::span<std::uint8_t> out);

template <std::size_t N>
std::array<std::uint8_t, N> RandomArray() {
  std::array<std::uint8_t, N> out;
  RandomBytes(out);
  return out;
}

Digest Sha256(ByteView data);

// RFC 5869 HKDF with SHA-256. `out` may be at most 255 * 32 bytes.
void HkdfSha256(ByteView ikm, ByteView salt, ByteView info,
                std::span<std::uint8_t> out);

// AES-GCM with a 128- or 256-bit key (chosen by key.size()) and a 12- or
// 16-byte IV. `out` must be exactly plaintext.size() bytes.
GcmTag AesGcmSeal(ByteView key, ByteView nonce, ByteView aad,
                  ByteView plaintext, std::span<std::uint8_t> out);

// Returns false on authentication failure; `out` is wiped in that case.
[[nodiscard]] bool AesGcmOpen(ByteView key, ByteView nonce, ByteView aad,
                              ByteView ciphertext, ByteView tag,
                              std::span<std::uint8_t> out);

class RsaPublicKey {
 public:
  RsaPublicKey() = default;

  // DER SubjectPublicKeyInfo.
  static RsaPublicKey FromDer(ByteView der);
  Bytes ToDer() const;

  // RSASSA-PSS, SHA-256, MGF1-SHA-256, 32-byte salt.
  bool VerifyPss(ByteView message, ByteView signature) const;
  // RSAES-OAEP, SHA-256.
  Bytes WrapOaep(ByteView secret) const;

  bool valid() const { return pkey_ != nullptr; }
  friend bool operator==(const RsaPublicKey& a, const RsaPublicKey& b);

 private:
  friend class RsaPrivateKey;
  explicit RsaPublicKey(std::shared_ptr<EVP_PKEY> pkey) : pkey_(std::move(pkey)) {}
  std::shared_ptr<EVP_PKEY> pkey_;
};

class RsaPrivateKey {
 public:
  RsaPrivateKey() = default;

  static RsaPrivateKey Generate(int bits = 2048);
  // DER PKCS#8 PrivateKeyInfo.
  static RsaPrivateKey FromDer(ByteView der);
  SecureBytes ToDer() const;

  RsaPublicKey PublicKey() const;
  Bytes SignPss(ByteView message) const;
  std::optional<SecureBytes> UnwrapOaep(ByteView wrapped) const;

  bool valid() const { return pkey_ != nullptr; }

 private:
  explicit RsaPrivateKey(std::shared_ptr<EVP_PKEY> pkey) : pkey_(std::move(pkey)) {}
  std::shared_ptr<EVP_PKEY> pkey_;
};

using X25519Public = std::array<std::uint8_t, 32>;

class X25519PrivateKey {
 public:
  X25519PrivateKey() = default;

  static X25519PrivateKey Generate();
  static X25519PrivateKey FromRaw(ByteView raw);
  Key256 Raw() const;
  X25519Public PublicRaw() const;

  // Throws kCryptoFailure for low-order or malformed peer keys.
  Key256 Agree(const X25519Public& peer) const;

  bool valid() const { return pkey_ != nullptr; }

 private:
  explicit X25519PrivateKey(std::shared_ptr<EVP_PKEY> pkey) : pkey_(std::move(pkey)) {}
  std::shared_ptr<EVP_PKEY> pkey_;
};

}  // namespace cactus::crypto

#endif  // CACTUS_CRYPTO_H_
