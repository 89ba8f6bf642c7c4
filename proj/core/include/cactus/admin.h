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

#ifndef CACTUS_ADMIN_H_
#define CACTUS_ADMIN_H_

// Owner-issued deletion and factory reset, and escrow-based access recovery.

#include <chrono>
#include <cstdint>
#include <optional>

#include "cactus/contexts.h"
#include "cactus/passphrase.h"
#include "cactus/transport.h"

namespace cactus::protocols {

inline constexpr std::chrono::milliseconds kAdminFreshness{300'000};

enum class AdminOp : std::uint8_t { kDeleteRange = 1, kFactoryReset = 2 };

// Plaintext of an admin request, sealed to PK_c and signed by SK_o:
// u8 op | u64 first | u64 last | u64 issued_at_ms | u32 len | updated escrow
struct AdminRequest {
  AdminOp op = AdminOp::kDeleteRange;
  keytree::EpochRange range;  // kDeleteRange only
  std::int64_t issued_at_ms = 0;
  Bytes updated_escrow;  // kDeleteRange only

  Bytes Encode() const;
  static AdminRequest Decode(ByteView bytes);  // throws kChannelTampered
};

// Issued but not yet acknowledged. The owner's context is untouched until
// CompleteAdmin accepts the camera's ack.
struct PendingAdmin {
  AdminRequest request;
  Bytes wire;  // kAdminRequest envelope
  keytree::KeyStore new_store;
  EscrowMaterial new_escrow;
};

// Throws kRangeInvalid for a bad range.
PendingAdmin IssueAdmin(const OwnerContext& owner, AdminOp op,
                        std::optional<keytree::EpochRange> range, std::int64_t now_ms);

// Camera side. Checks signature, then replay, then freshness; applies the
// operation and returns a kAdminAck envelope signed by SK_c. Throws
// kNotInitialized, kBadSignature, kChannelTampered, kReplayDetected or
// kStaleRequest, leaving the camera unchanged.
Bytes HandleAdmin(CameraContext& camera, ByteView wire, std::int64_t now_ms);

// Owner side. Throws kBadSignature if the ack is not the camera's answer to
// this request; otherwise applies the pending change.
void CompleteAdmin(OwnerContext& owner, const PendingAdmin& pending, ByteView ack_wire);

// Sends the request over the Internet channel of `link` (owner is party 0),
// lets the camera answer, and completes it. Throws kAckTimeout when no ack
// comes back, leaving the owner unchanged.
void RunAdmin(OwnerContext& owner, CameraContext& camera, AdminOp op,
              std::optional<keytree::EpochRange> range, transport::Link& link, std::int64_t now_ms);

// ---- Recovery ----

Bytes EscrowRequestMessage();
// kEscrowResponse: camera_id | u32 len | escrow. Given to anyone who asks.
// Throws kNotInitialized.
Bytes HandleEscrowRequest(const CameraContext& camera, ByteView wire);
// Throws kBadPassphrase, kChannelTampered or kMalformedMessage.
OwnerContext RecoverAccess(ByteView escrow_response, const Passphrase& passphrase);

// Request and response over the radio channel of `link` (new device is party 0).
// Throws kTimeout if nothing comes back.
OwnerContext RecoverOverRadio(CameraContext& camera, transport::Link& link,
                              const Passphrase& passphrase);

}  // namespace cactus::protocols

#endif  // CACTUS_ADMIN_H_
