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

#include "cactus/escrow.h"

namespace cactus::protocols {
namespace {

constexpr char kMagic[] = "CESC";
constexpr std::uint8_t kVersion = 1;
constexpr std::string_view kOwnerAad = "cactus-escrow-owner-v1";
constexpr std::string_view kKeysAad = "cactus-escrow-keys-v1";

Bytes SealKeys(const crypto::RsaPublicKey& owner, const keytree::KeyStore& store) {
  const SecureBytes plain = store.Serialize();
  return Seal(owner, AsBytes(kKeysAad), ByteView(plain));
}

}  // namespace

Bytes EscrowMaterial::Encode() const {
  ByteWriter w;
  w.Raw(std::string_view(kMagic, 4)).U8(kVersion).Blob(enc_owner_keypair).Blob(enc_key_material).Blob(camera_pubkey);
  return std::move(w).bytes();
}

EscrowMaterial EscrowMaterial::Decode(ByteView bytes) {
  ByteReader r(bytes, ErrorCode::kMalformedMessage);
  auto magic = r.Raw(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) r.Malformed("bad escrow magic");
  if (r.U8() != kVersion) r.Malformed("unsupported escrow version");
  EscrowMaterial e;
  auto a = r.Blob();
  auto b = r.Blob();
  auto c = r.Blob();
  r.ExpectEnd();
  e.enc_owner_keypair.assign(a.begin(), a.end());
  e.enc_key_material.assign(b.begin(), b.end());
  e.camera_pubkey.assign(c.begin(), c.end());
  return e;
}

stream::VerifyingKey EscrowMaterial::CameraKey() const {
  try {
    return stream::VerifyingKey::FromDer(camera_pubkey);
  } catch (const Error&) {
    Fail(ErrorCode::kMalformedMessage, "escrow camera key");
  }
}

EscrowBundle BuildEscrow(const IdentityKeypair& owner, const keytree::KeyStore& key_material,
                         const stream::VerifyingKey& camera_key) {
  Passphrase passphrase = Passphrase::Generate();
  const SecureBytes owner_plain = owner.Serialize();
  const auto nonce = crypto::RandomArray<12>();
  Bytes ct(owner_plain.size());
  const auto tag = crypto::AesGcmSeal(passphrase.key().span(), nonce, AsBytes(kOwnerAad),
                                      ByteView(owner_plain), ct);
  ByteWriter w;
  w.Raw(ByteView(nonce)).Raw(ct).Raw(ByteView(tag));

  EscrowMaterial m;
  m.enc_owner_keypair = std::move(w).bytes();
  m.enc_key_material = SealKeys(owner.rsa.PublicKey(), key_material);
  m.camera_pubkey = camera_key.ToDer();
  return {std::move(m), passphrase};
}

EscrowMaterial ReplaceEscrowKeys(const EscrowMaterial& escrow, const PublicIdentity& owner,
                                 const keytree::KeyStore& key_material) {
  EscrowMaterial out = escrow;
  out.enc_key_material = SealKeys(owner.rsa, key_material);
  return out;
}

RecoveredEscrow RecoverEscrow(const EscrowMaterial& escrow, const Passphrase& passphrase) {
  ByteView blob(escrow.enc_owner_keypair);
  if (blob.size() < 12 + 16) Fail(ErrorCode::kBadPassphrase, "owner blob too short");
  SecureBytes owner_plain(blob.size() - 28);
  if (!crypto::AesGcmOpen(passphrase.key().span(), blob.first(12), AsBytes(kOwnerAad),
                          blob.subspan(12, owner_plain.size()), blob.last(16), owner_plain)) {
    Fail(ErrorCode::kBadPassphrase, "escrow does not open under this passphrase");
  }
  RecoveredEscrow out{IdentityKeypair::Deserialize(ByteView(owner_plain)), keytree::KeyStore{},
                      escrow.CameraKey()};
  auto keys = Unseal(out.owner.rsa, AsBytes(kKeysAad), escrow.enc_key_material);
  if (!keys) Fail(ErrorCode::kMalformedMessage, "escrow key material does not open");
  out.store = keytree::KeyStore::Deserialize(ByteView(*keys));
  return out;
}

}  // namespace cactus::protocols
