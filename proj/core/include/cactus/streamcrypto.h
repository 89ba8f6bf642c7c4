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

#ifndef CACTUS_STREAMCRYPTO_H_
#define CACTUS_STREAMCRYPTO_H_

// Per-frame AES-256-GCM encryption under epoch keys and per-block RSA-PSS
// signatures over the concatenated frame tags.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "cactus/bytes.h"
#include "cactus/crypto.h"
#include "cactus/keytree.h"

namespace cactus::stream {

using CameraId = std::array<std::uint8_t, 16>;
using Iv = std::array<std::uint8_t, 16>;

inline constexpr std::size_t kDefaultBlockSize = 32;

struct Frame {
  Bytes payload;
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct EncryptedFrame {
  Bytes ciphertext;
  Iv iv{};  // 16 random bytes, used whole as the GCM IV
  crypto::GcmTag tag{};
  std::int64_t timestamp_ms = 0;  // travels in clear, bound as AAD

  friend bool operator==(const EncryptedFrame&, const EncryptedFrame&) = default;
};

// Camera signing identity (SK_c / PK_c). RSA-2048.
class VerifyingKey {
 public:
  VerifyingKey() = default;
  explicit VerifyingKey(crypto::RsaPublicKey key) : key_(std::move(key)) {}

  static VerifyingKey FromDer(ByteView der) { return VerifyingKey(crypto::RsaPublicKey::FromDer(der)); }
  Bytes ToDer() const { return key_.ToDer(); }
  bool Verify(ByteView message, ByteView signature) const { return key_.VerifyPss(message, signature); }
  const crypto::RsaPublicKey& rsa() const { return key_; }
  bool valid() const { return key_.valid(); }

  friend bool operator==(const VerifyingKey& a, const VerifyingKey& b) { return a.key_ == b.key_; }

 private:
  crypto::RsaPublicKey key_;
};

class SigningKeypair {
 public:
  SigningKeypair() = default;
  explicit SigningKeypair(crypto::RsaPrivateKey key) : key_(std::move(key)) {}

  static SigningKeypair Generate() { return SigningKeypair(crypto::RsaPrivateKey::Generate(2048)); }
  static SigningKeypair FromDer(ByteView der) { return SigningKeypair(crypto::RsaPrivateKey::FromDer(der)); }
  SecureBytes ToDer() const { return key_.ToDer(); }

  VerifyingKey verifying_key() const { return VerifyingKey(key_.PublicKey()); }
  Bytes Sign(ByteView message) const { return key_.SignPss(message); }
  const crypto::RsaPrivateKey& rsa() const { return key_; }
  bool valid() const { return key_.valid(); }

 private:
  crypto::RsaPrivateKey key_;
};

struct SignedBlock {
  CameraId camera_id{};
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  std::vector<EncryptedFrame> frames;
  Bytes signature;

  // tau_1 || tau_2 || ... || tau_N
  Bytes TagConcatenation() const;

  // "CBK1" wire encoding, little-endian.
  Bytes Encode() const;
  // Throws kMalformedBlock.
  static SignedBlock Decode(ByteView bytes);
};

// 8-byte big-endian millisecond timestamp used as AEAD associated data.
std::array<std::uint8_t, 8> TimestampAad(std::int64_t timestamp_ms);

// Throws kEpochMismatch unless `key` is the leaf for the frame's epoch.
EncryptedFrame EncryptFrame(const keytree::NodeKey& key, const keytree::TreeParams& params,
                            const Frame& frame);

// Throws kTagMismatch on any tampering or on the wrong key.
Frame DecryptFrame(const keytree::NodeKey& key, const EncryptedFrame& frame);

// Throws kEmptyBlock or kNonMonotonicTimestamps.
SignedBlock SignBlock(const SigningKeypair& signer, const CameraId& camera_id,
                      std::vector<EncryptedFrame> frames);

// True iff the block is well formed (non-empty, strictly increasing
// timestamps, bounds equal to the first/last frame) and the signature covers
// the concatenated tags.
bool VerifyBlock(const VerifyingKey& key, const SignedBlock& block);

struct FrameOutcome {
  std::size_t index = 0;
  std::int64_t timestamp_ms = 0;
  std::optional<Frame> frame;       // set on success
  std::optional<ErrorCode> error;   // kNoAccess, kTagMismatch, kBeyondLifespan, ...
};

// Verify first, then extract and decrypt frame by frame. Throws
// kSignatureInvalid before touching `keys` if verification fails.
std::vector<FrameOutcome> DecryptBlock(const keytree::KeyProvider& keys, const VerifyingKey& key,
                                       const SignedBlock& block);

// As DecryptBlock, for bytes fetched from untrusted storage: undecodable
// input or a block claiming another camera is reported as kSignatureInvalid.
std::vector<FrameOutcome> DecryptEncodedBlock(const keytree::KeyProvider& keys,
                                              const VerifyingKey& key, ByteView encoded,
                                              const CameraId& expected_camera);

}  // namespace cactus::stream

#endif  // CACTUS_STREAMCRYPTO_H_
