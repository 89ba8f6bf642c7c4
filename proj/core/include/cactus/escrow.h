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

#ifndef CACTUS_ESCROW_H_
#define CACTUS_ESCROW_H_

// Escrow material kept on the camera so a passphrase holder can regain owner
// access without any third party.

#include "cactus/bytes.h"
#include "cactus/identity.h"
#include "cactus/keytree.h"
#include "cactus/passphrase.h"
#include "cactus/streamcrypto.h"

namespace cactus::protocols {

// "CESC" | u8 version | u32 len | enc_owner_keypair | u32 len | enc_key_material
//        | u32 len | camera_pubkey
//
// enc_owner_keypair: 12-byte nonce | AES-128-GCM(passphrase key, owner identity) | tag
// enc_key_material:  Seal(PK_o, serialized KeyStore)
// camera_pubkey:     PK_c as SubjectPublicKeyInfo DER, in clear
struct EscrowMaterial {
  Bytes enc_owner_keypair;
  Bytes enc_key_material;
  Bytes camera_pubkey;

  Bytes Encode() const;
  // Throws kMalformedMessage.
  static EscrowMaterial Decode(ByteView bytes);

  // Needs no passphrase.
  stream::VerifyingKey CameraKey() const;

  friend bool operator==(const EscrowMaterial&, const EscrowMaterial&) = default;
};

struct EscrowBundle {
  EscrowMaterial material;
  Passphrase passphrase;
};

EscrowBundle BuildEscrow(const IdentityKeypair& owner, const keytree::KeyStore& key_material,
                         const stream::VerifyingKey& camera_key);

// Same owner blob, fresh key material. Used after deletions.
EscrowMaterial ReplaceEscrowKeys(const EscrowMaterial& escrow, const PublicIdentity& owner,
                                 const keytree::KeyStore& key_material);

struct RecoveredEscrow {
  IdentityKeypair owner;
  keytree::KeyStore store;
  stream::VerifyingKey camera_key;
};

// Throws kBadPassphrase if the owner blob does not open.
RecoveredEscrow RecoverEscrow(const EscrowMaterial& escrow, const Passphrase& passphrase);

}  // namespace cactus::protocols

#endif  // CACTUS_ESCROW_H_
