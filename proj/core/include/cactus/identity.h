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

#ifndef CACTUS_IDENTITY_H_
#define CACTUS_IDENTITY_H_

// Long-term identities (factory, owner, camera, delegatee), the visual token
// derived from them, and the hybrid seal used for every confidential message.

#include <cstdint>
#include <optional>
#include <string_view>

#include "cactus/bytes.h"
#include "cactus/crypto.h"
#include "cactus/error.h"

namespace cactus::protocols {

enum class Role : std::uint8_t { kFactory = 1, kOwner = 2, kCamera = 3, kDelegatee = 4 };
std::string_view RoleName(Role role);

using VisualToken = crypto::Digest;

// RSA-2048 for signatures and sealing, X25519 for the pairing exchange.
// Canonical encoding: u32 spki_len | RSA SubjectPublicKeyInfo DER | 32-byte X25519.
struct PublicIdentity {
  crypto::RsaPublicKey rsa;
  crypto::X25519Public dh{};

  Bytes Encode() const;
  // Throws `on_error` when the bytes do not parse.
  static PublicIdentity Decode(ByteView bytes, ErrorCode on_error = ErrorCode::kMalformedMessage);
  // SHA-256 of Encode(). This is what the visual channel carries.
  VisualToken Token() const;

  friend bool operator==(const PublicIdentity& a, const PublicIdentity& b) {
    return a.rsa == b.rsa && a.dh == b.dh;
  }
};

struct IdentityKeypair {
  Role role = Role::kOwner;
  crypto::RsaPrivateKey rsa;
  crypto::X25519PrivateKey dh;

  static IdentityKeypair Generate(Role role);

  PublicIdentity Public() const;
  bool valid() const { return rsa.valid() && dh.valid(); }

  // u8 role | u32 len | PKCS#8 DER | 32-byte X25519 private key
  SecureBytes Serialize() const;
  // Throws kMalformedMessage.
  static IdentityKeypair Deserialize(ByteView bytes);
};

// RSA-OAEP wraps a fresh 256-bit key; the payload is AES-256-GCM under it.
// Layout: u32 len | wrapped key | 12-byte nonce | u32 len | ciphertext | 16-byte tag
Bytes Seal(const crypto::RsaPublicKey& recipient, ByteView aad, ByteView plaintext);
std::optional<SecureBytes> Unseal(const crypto::RsaPrivateKey& recipient, ByteView aad,
                                  ByteView sealed);

// A payload together with an RSA-PSS signature over
// label | u32 len | binding | msg_type | payload.
// `binding` ties the signature to a session (both pairing nonces) or is empty.
struct SignedMessage {
  Bytes payload;
  Bytes signature;

  Bytes Encode() const;  // u32 len | payload | u32 len | signature
  // Throws kChannelTampered.
  static SignedMessage Decode(ByteView bytes);
};

Bytes SignatureInput(std::string_view label, ByteView binding, std::uint8_t msg_type,
                     ByteView payload);
SignedMessage SignMessage(const crypto::RsaPrivateKey& key, std::string_view label,
                          ByteView binding, std::uint8_t msg_type, Bytes payload);
// Throws kBadSignature.
void VerifyMessage(const crypto::RsaPublicKey& key, std::string_view label, ByteView binding,
                   std::uint8_t msg_type, const SignedMessage& message);

}  // namespace cactus::protocols

#endif  // CACTUS_IDENTITY_H_
