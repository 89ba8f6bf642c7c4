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

#ifndef CACTUS_PAIRING_H_
#define CACTUS_PAIRING_H_

// Initialization and delegation pairing as externally driven state machines.
//
// Both share a five-step handshake between a presenter (camera during
// initialization, owner during delegation) and a scanner (owner, delegatee):
//
//   1. presenter -> scanner  visual  kPresenterToken   SHA-256(pub_p)
//   2. presenter -> scanner  radio   kPresenterKey     n_p | pub_p
//   3. scanner -> presenter  radio   kScannerKey       n_s | pub_s
//   4. scanner -> presenter  visual  kScannerToken     SHA-256(pub_s)
//   5. four proof messages under K = HKDF(X25519(..), n_p | n_s, label | tokens):
//        kProofChallenge         P->S  E(c_p)
//        kProofChallengeResponse S->P  E(c_s | c_p ^ pad)
//        kProofResponse          P->S  E(c_s ^ pad)
//        kProofConfirm           S->P  E(SHA-256(label | c_p | c_s))
//
// n_p and n_s are 16-byte session nonces and are bound into every signature
// that follows. Initialization continues with kCameraIdentity (step 6) and
// kSecrets (step 7); delegation with kDelegationKeys.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cactus/contexts.h"
#include "cactus/identity.h"
#include "cactus/passphrase.h"
#include "cactus/transport.h"

namespace cactus::protocols {

enum class MsgType : std::uint8_t {
  kPresenterToken = 1,
  kPresenterKey = 2,
  kScannerKey = 3,
  kScannerToken = 4,
  kProofChallenge = 5,
  kProofChallengeResponse = 6,
  kProofResponse = 7,
  kProofConfirm = 8,
  kCameraIdentity = 9,
  kSecrets = 10,
  kDelegationKeys = 11,
  kAdminRequest = 12,
  kAdminAck = 13,
  kEscrowRequest = 14,
  kEscrowResponse = 15,
};

std::string_view MsgTypeName(MsgType type);
// Makes the names above usable in adversary JSON scripts.
void RegisterMessageNames();

enum class Phase {
  kAwaitVisualToken,
  kAwaitPeerKey,
  kAwaitProof,
  kAwaitIdentityRotation,
  kAwaitSecrets,
  kAwaitKeys,
  kDone,
  kFailed,
};
std::string_view PhaseName(Phase phase);

enum class PairingRole { kInitiator, kResponder };  // presenter, scanner

struct Outbound {
  transport::ChannelKind channel;
  Bytes bytes;
};

struct TranscriptEntry {
  bool outbound;
  transport::ChannelKind channel;
  std::uint8_t msg_type;
  std::size_t size;

  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

class PairingSession {
 public:
  virtual ~PairingSession() = default;
  PairingSession(const PairingSession&) = delete;
  PairingSession& operator=(const PairingSession&) = delete;

  std::vector<Outbound> Start();
  // Protocol errors move the session to kFailed; they are not thrown.
  std::vector<Outbound> Receive(transport::ChannelKind channel, ByteView bytes);
  // A step timed out.
  void Timeout();

  PairingRole role() const { return role_; }
  Phase phase() const { return phase_; }
  bool terminal() const { return phase_ == Phase::kDone || phase_ == Phase::kFailed; }
  std::optional<ErrorCode> failure() const { return failure_; }
  const std::string& failure_detail() const { return failure_detail_; }
  bool handshake_complete() const { return handshake_complete_; }
  const std::optional<PublicIdentity>& peer() const { return peer_; }
  bool has_shared_secret() const { return shared_.has_value(); }
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
  // n_p | n_s once both are known.
  Bytes binding() const;

 protected:
  PairingSession(PairingRole role, IdentityKeypair self);

  const IdentityKeypair& self() const { return self_; }
  void set_phase(Phase phase) { phase_ = phase; }
  Outbound Emit(transport::ChannelKind channel, MsgType type, ByteView body);

  // Called once step 5 has succeeded on this side.
  virtual std::vector<Outbound> OnHandshakeComplete() = 0;
  // Messages after the handshake. Throw Error to fail.
  virtual std::vector<Outbound> OnMessage(MsgType type, ByteView body) = 0;

 private:
  std::vector<Outbound> Dispatch(transport::ChannelKind channel, MsgType type, ByteView body);
  std::vector<Outbound> TryVerifyPeer();
  void DeriveProofKey();
  Bytes ProofSeal(MsgType type, ByteView plain);
  SecureBytes ProofOpen(MsgType type, ByteView body);
  void FailWith(ErrorCode code, std::string detail);

  PairingRole role_;
  IdentityKeypair self_;
  Phase phase_;
  std::optional<ErrorCode> failure_;
  std::string failure_detail_;
  int proof_step_ = 0;  // proof messages handled so far on this side
  bool handshake_complete_ = false;
  std::vector<TranscriptEntry> transcript_;

  std::array<std::uint8_t, 16> own_nonce_{};
  std::optional<std::array<std::uint8_t, 16>> peer_nonce_;
  std::optional<VisualToken> peer_token_;
  std::optional<Bytes> stashed_peer_key_;
  std::optional<PublicIdentity> peer_;
  std::optional<Key256> shared_;
  std::optional<Key256> proof_key_;
  Key256 own_challenge_;
  Key256 peer_challenge_;
};

// ---- Initialization ----

struct OwnerInitOptions {
  Bytes wifi_credentials;
  int depth = 32;
  std::uint32_t epoch_seconds = 10;
  std::int64_t now_ms = 0;  // becomes t_0
  std::optional<IdentityKeypair> identity;  // generated if unset
};

struct OwnerInitResult {
  OwnerContext owner;
  Passphrase passphrase;
};

// Camera side of initialization; presents the factory key.
class CameraInitSession : public PairingSession {
 public:
  explicit CameraInitSession(const CameraContext& camera,
                             std::optional<IdentityKeypair> camera_identity = std::nullopt);

  bool secrets_accepted() const { return result_.has_value(); }
  // The initialized camera. Only after kDone.
  const CameraContext& result() const;

 protected:
  std::vector<Outbound> OnHandshakeComplete() override;
  std::vector<Outbound> OnMessage(MsgType type, ByteView body) override;

 private:
  CameraContext base_;
  std::optional<IdentityKeypair> camera_identity_;
  std::optional<CameraContext> result_;
};

// Owner side of initialization; scans the camera's token.
class OwnerInitSession : public PairingSession {
 public:
  explicit OwnerInitSession(OwnerInitOptions options);

  bool secrets_sent() const { return result_.has_value(); }
  const OwnerInitResult& result() const;

 protected:
  std::vector<Outbound> OnHandshakeComplete() override;
  std::vector<Outbound> OnMessage(MsgType type, ByteView body) override;

 private:
  OwnerInitOptions options_;
  std::optional<OwnerInitResult> result_;
};

// ---- Delegation ----

// Owner side; presents the owner key. Throws kNoAccess at construction if the
// owner's store does not cover `range`.
class DelegatorSession : public PairingSession {
 public:
  DelegatorSession(const OwnerContext& owner, keytree::EpochRange range,
                   transport::ChannelKind key_channel = transport::ChannelKind::kInternet);

  bool keys_sent() const { return keys_sent_; }
  std::size_t node_count() const { return nodes_.size(); }

 protected:
  std::vector<Outbound> OnHandshakeComplete() override;
  std::vector<Outbound> OnMessage(MsgType type, ByteView body) override;

 private:
  const OwnerContext& owner_;
  keytree::EpochRange range_;
  transport::ChannelKind key_channel_;
  std::vector<keytree::NodeKey> nodes_;
  bool keys_sent_ = false;
};

class DelegateeSession : public PairingSession {
 public:
  explicit DelegateeSession(std::optional<IdentityKeypair> identity = std::nullopt);

  bool keys_accepted() const { return result_.has_value(); }
  const DelegateeContext& result() const;

 protected:
  std::vector<Outbound> OnHandshakeComplete() override;
  std::vector<Outbound> OnMessage(MsgType type, ByteView body) override;

 private:
  std::optional<DelegateeContext> result_;
};

// ---- Drivers ----

struct RunEntry {
  int from;  // 0 = first session, 1 = second
  transport::ChannelKind channel;
  std::uint8_t msg_type;
  std::size_t size;

  friend bool operator==(const RunEntry&, const RunEntry&) = default;
};

struct SessionRun {
  std::vector<RunEntry> emitted;  // in emission order
  std::optional<ErrorCode> first_failure;
  std::string failure_detail;
  std::int64_t simulated_ms = 0;
  bool completed() const { return !first_failure.has_value(); }
};

// Delivers every message through `link` (party 0 = a) until both sessions
// are terminal. When traffic stops first, simulated time advances by one step
// timeout and the waiting sessions fail with kTimeout.
SessionRun RunOverLink(PairingSession& a, PairingSession& b, transport::Link& link);
// Same, but handing messages straight to the peer.
SessionRun RunDirect(PairingSession& a, PairingSession& b);

struct InitResult {
  OwnerContext owner;
  Passphrase passphrase;
  CameraContext camera;
  SessionRun run;
};

// Runs initialization with the camera as party 0. Throws the first failure.
InitResult InitPairing(const CameraContext& camera, OwnerInitOptions options,
                       transport::Link& link);

struct DelegationResult {
  DelegateeContext delegatee;
  std::size_t nodes_sent = 0;
  SessionRun run;
};

// Owner is party 0. Throws the first failure.
DelegationResult DelegatePairing(const OwnerContext& owner, keytree::EpochRange range,
                                 transport::Link& link,
                                 transport::ChannelKind key_channel = transport::ChannelKind::kInternet);

}  // namespace cactus::protocols

#endif  // CACTUS_PAIRING_H_
