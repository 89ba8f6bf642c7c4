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

#ifndef CACTUS_CONTEXTS_H_
#define CACTUS_CONTEXTS_H_

// Persistent state held by each party once a protocol completes.

#include <cstdint>
#include <optional>

#include "cactus/bytes.h"
#include "cactus/escrow.h"
#include "cactus/identity.h"
#include "cactus/keytree.h"
#include "cactus/streamcrypto.h"

namespace cactus::protocols {

// What anyone needs to verify and decrypt a camera's footage.
struct ViewerCredentials {
  stream::CameraId camera_id{};
  stream::VerifyingKey camera_key;
  const keytree::KeyStore* store = nullptr;
};

struct OwnerContext {
  IdentityKeypair identity;  // SK_o / PK_o
  stream::CameraId camera_id{};
  stream::VerifyingKey camera_key;  // PK_c
  keytree::KeyStore store;          // root store, minus deletions
  EscrowMaterial escrow;            // copy of what the camera holds
  Bytes wifi_credentials;

  ViewerCredentials viewer() const { return {camera_id, camera_key, &store}; }

  // "COWN" state file. Contains private keys.
  SecureBytes Serialize() const;
  // Throws kMalformedMessage.
  static OwnerContext Deserialize(ByteView bytes);
};

struct DelegateeContext {
  IdentityKeypair identity;  // SK_d / PK_d
  stream::CameraId camera_id{};
  stream::VerifyingKey camera_key;
  keytree::KeyStore store;
  keytree::EpochRange range;

  ViewerCredentials viewer() const { return {camera_id, camera_key, &store}; }

  SecureBytes Serialize() const;  // "CDLG"
  static DelegateeContext Deserialize(ByteView bytes);
};

struct CameraContext {
  // Material installed by a completed initialization.
  struct Installed {
    IdentityKeypair identity;   // SK_c / PK_c
    crypto::RsaPublicKey owner_key;  // PK_o
    keytree::KeyStore store;
    Bytes escrow;  // encoded EscrowMaterial
    SecureBytes wifi_credentials;
    std::int64_t last_admin_issued_ms = INT64_MIN;
  };

  stream::CameraId camera_id{};
  IdentityKeypair factory;  // SK_f / PK_f, survives factory reset
  std::optional<Installed> installed;

  // Fresh camera with a new factory keypair and, unless given, a random id.
  static CameraContext Manufacture(const std::optional<stream::CameraId>& id = std::nullopt);

  bool initialized() const { return installed.has_value(); }
  // Throws kNotInitialized.
  Installed& require();
  const Installed& require() const;

  stream::SigningKeypair signer() const { return stream::SigningKeypair(require().identity.rsa); }
  VisualToken factory_token() const { return factory.Public().Token(); }

  // Wipes everything installed by initialization. The factory key stays.
  void FactoryReset();

  SecureBytes Serialize() const;  // "CCAM"
  static CameraContext Deserialize(ByteView bytes);
};

}  // namespace cactus::protocols

#endif  // CACTUS_CONTEXTS_H_
