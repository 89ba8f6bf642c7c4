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

#include "cactus/pairing.h"

#include <deque>

namespace cactus::protocols {
namespace {

using transport::ChannelKind;

constexpr std::string_view kProofKeyLabel = "cactus-pairing-proof";
constexpr std::string_view kProofAadLabel = "cactus-proof";
constexpr std::string_view kConfirmLabel = "cactus-proof-confirm";
constexpr std::string_view kCameraIdentityLabel = "cactus/init/camera-identity";
constexpr std::string_view kSecretsLabel = "cactus/init/secrets";
constexpr std::string_view kDelegationLabel = "cactus/delegate/keys";
constexpr std::uint8_t kPad = 0x5c;

constexpr ChannelKind kAllChannels[] = {ChannelKind::kVisual, ChannelKind::kRadio,
                                        ChannelKind::kInternet};

Key256 XorPad(ByteView in) {
  Key256 out;
  for (std::size_t i = 0; i < 32; ++i) out[i] = in[i] ^ kPad;
  return out;
}

Key256 ConfirmValue(const Key256& c_p, const Key256& c_s) {
  ByteWriter w;
  w.Raw(kConfirmLabel).Raw(c_p.span()).Raw(c_s.span());
  Bytes in = std::move(w).bytes();
  const auto d = crypto::Sha256(in);
  SecureZero(in.data(), in.size());
  return Key256(ByteView(d));
}

Bytes LabelAad(std::string_view label, ByteView binding) {
  ByteWriter w;
  w.Raw(label).U8(0).Raw(binding);
  return std::move(w).bytes();
}

void WriteParams(ByteWriter& w, const keytree::TreeParams& p) {
  w.U8(static_cast<std::uint8_t>(p.depth)).U32(p.epoch_seconds).U64(static_cast<std::uint64_t>(p.origin_ms));
}

keytree::TreeParams ReadParams(ByteReader& r) {
  keytree::TreeParams p;
  p.depth = r.U8();
  p.epoch_seconds = r.U32();
  p.origin_ms = static_cast<std::int64_t>(r.U64());
  try {
    p.Validate();
  } catch (const Error&) {
    r.Malformed("bad tree parameters");
  }
  return p;
}

SignedMessage DecodeSigned(ByteView body) { return SignedMessage::Decode(body); }

}  // namespace

std::string_view MsgTypeName(MsgType type) {
  switch (type) {
    case MsgType::kPresenterToken: return "presenter_token";
    case MsgType::kPresenterKey: return "presenter_key";
    case MsgType::kScannerKey: return "scanner_key";
    case MsgType::kScannerToken: return "scanner_token";
    case MsgType::kProofChallenge: return "proof_challenge";
    case MsgType::kProofChallengeResponse: return "proof_challenge_response";
    case MsgType::kProofResponse: return "proof_response";
    case MsgType::kProofConfirm: return "proof_confirm";
    case MsgType::kCameraIdentity: return "camera_identity";
    case MsgType::kSecrets: return "secrets";
    case MsgType::kDelegationKeys: return "delegation_keys";
    case MsgType::kAdminRequest: return "admin_request";
    case MsgType::kAdminAck: return "admin_ack";
    case MsgType::kEscrowRequest: return "escrow_request";
    case MsgType::kEscrowResponse: return "escrow_response";
  }
  return "unknown";
}

void RegisterMessageNames() {
  for (int t = 1; t <= static_cast<int>(MsgType::kEscrowResponse); ++t) {
    transport::RegisterMessageName(MsgTypeName(static_cast<MsgType>(t)), static_cast<std::uint8_t>(t));
  }
}

std::string_view PhaseName(Phase phase) {
  switch (phase) {
    case Phase::kAwaitVisualToken: return "AwaitVisualToken";
    case Phase::kAwaitPeerKey: return "AwaitPeerKey";
    case Phase::kAwaitProof: return "AwaitProof";
    case Phase::kAwaitIdentityRotation: return "AwaitIdentityRotation";
    case Phase::kAwaitSecrets: return "AwaitSecrets";
    case Phase::kAwaitKeys: return "AwaitKeys";
    case Phase::kDone: return "Done";
    case Phase::kFailed: return "Failed";
  }
  return "?";
}

// ---- PairingSession ----

PairingSession::PairingSession(PairingRole role, IdentityKeypair self)
    : role_(role),
      self_(std::move(self)),
      phase_(role == PairingRole::kInitiator ? Phase::kAwaitPeerKey : Phase::kAwaitVisualToken),
      own_nonce_(crypto::RandomArray<16>()) {}

Bytes PairingSession::binding() const {
  if (!peer_nonce_) return {};
  ByteWriter w;
  if (role_ == PairingRole::kInitiator) {
    w.Raw(ByteView(own_nonce_)).Raw(ByteView(*peer_nonce_));
  } else {
    w.Raw(ByteView(*peer_nonce_)).Raw(ByteView(own_nonce_));
  }
  return std::move(w).bytes();
}

Outbound PairingSession::Emit(ChannelKind channel, MsgType type, ByteView body) {
  Bytes wire = transport::EncodeEnvelope(static_cast<std::uint8_t>(type), body);
  transcript_.push_back({true, channel, static_cast<std::uint8_t>(type), wire.size()});
  return {channel, std::move(wire)};
}

std::vector<Outbound> PairingSession::Start() {
  if (role_ == PairingRole::kResponder) return {};
  const PublicIdentity pub = self_.Public();
  const VisualToken token = pub.Token();
  ByteWriter w;
  w.Raw(ByteView(own_nonce_)).Raw(pub.Encode());
  std::vector<Outbound> out;
  out.push_back(Emit(ChannelKind::kVisual, MsgType::kPresenterToken, token));
  out.push_back(Emit(ChannelKind::kRadio, MsgType::kPresenterKey, w.bytes()));
  return out;
}

std::vector<Outbound> PairingSession::Receive(ChannelKind channel, ByteView bytes) {
  transcript_.push_back({false, channel, transport::PeekMessageType(bytes).value_or(0), bytes.size()});
  if (terminal()) return {};
  try {
    const transport::Envelope e = transport::DecodeEnvelope(bytes);
    return Dispatch(channel, static_cast<MsgType>(e.type), e.body);
  } catch (const Error& err) {
    FailWith(err.code(), err.what());
    return {};
  }
}

void PairingSession::Timeout() {
  if (!terminal()) FailWith(ErrorCode::kTimeout, std::string("no progress in ") + std::string(PhaseName(phase_)));
}

void PairingSession::FailWith(ErrorCode code, std::string detail) {
  phase_ = Phase::kFailed;
  failure_ = code;
  failure_detail_ = std::move(detail);
  shared_.reset();
  proof_key_.reset();
  own_challenge_.Wipe();
  peer_challenge_.Wipe();
}

std::vector<Outbound> PairingSession::Dispatch(ChannelKind channel, MsgType type, ByteView body) {
  const bool is_token = type == MsgType::kPresenterToken || type == MsgType::kScannerToken;
  if (is_token != (channel == ChannelKind::kVisual)) {
    Fail(ErrorCode::kUnexpectedMessage, std::string(MsgTypeName(type)) + " on the " +
                                            std::string(transport::ChannelKindName(channel)) + " channel");
  }
  auto unexpected = [&]() -> std::vector<Outbound> {
    Fail(ErrorCode::kUnexpectedMessage,
         std::string(MsgTypeName(type)) + " while in " + std::string(PhaseName(phase_)));
  };
  auto store_token = [&] {
    if (peer_token_ || body.size() != 32) unexpected();
    VisualToken t;
    std::copy(body.begin(), body.end(), t.begin());
    peer_token_ = t;
  };
  auto stash_key = [&] {
    if (stashed_peer_key_) unexpected();
    stashed_peer_key_ = Bytes(body.begin(), body.end());
  };

  if (handshake_complete_) return OnMessage(type, body);

  if (role_ == PairingRole::kInitiator) {
    switch (phase_) {
      case Phase::kAwaitPeerKey:
        if (type == MsgType::kScannerToken) {
          store_token();
        } else if (type == MsgType::kScannerKey) {
          stash_key();
        } else {
          return unexpected();
        }
        return TryVerifyPeer();
      case Phase::kAwaitProof:
        if (type == MsgType::kProofChallengeResponse && proof_step_ == 0) {
          const SecureBytes plain = ProofOpen(type, body);
          if (plain.size() != 64) Fail(ErrorCode::kProofFailure, "challenge response length");
          const Key256 expected = XorPad(own_challenge_.span());
          if (!(Key256(ByteView(plain).subspan(32, 32)) == expected)) {
            Fail(ErrorCode::kProofFailure, "peer did not prove the shared key");
          }
          peer_challenge_ = Key256(ByteView(plain).first(32));
          ++proof_step_;
          const Key256 answer = XorPad(peer_challenge_.span());
          return {Emit(ChannelKind::kRadio, MsgType::kProofResponse,
                       ProofSeal(MsgType::kProofResponse, answer.span()))};
        }
        if (type == MsgType::kProofConfirm && proof_step_ == 1) {
          const SecureBytes plain = ProofOpen(type, body);
          if (plain.size() != 32 ||
              !(Key256(ByteView(plain)) == ConfirmValue(own_challenge_, peer_challenge_))) {
            Fail(ErrorCode::kProofFailure, "bad confirmation");
          }
          ++proof_step_;
          handshake_complete_ = true;
          return OnHandshakeComplete();
        }
        return unexpected();
      default:
        return unexpected();
    }
  }

  switch (phase_) {
    case Phase::kAwaitVisualToken:
      if (type == MsgType::kPresenterToken) {
        store_token();
        phase_ = Phase::kAwaitPeerKey;
        return TryVerifyPeer();
      }
      if (type == MsgType::kPresenterKey) {
        stash_key();  // the token may still be on its way
        return {};
      }
      return unexpected();
    case Phase::kAwaitPeerKey:
      if (type != MsgType::kPresenterKey) return unexpected();
      stash_key();
      return TryVerifyPeer();
    case Phase::kAwaitProof:
      if (type == MsgType::kProofChallenge && proof_step_ == 0) {
        const SecureBytes plain = ProofOpen(type, body);
        if (plain.size() != 32) Fail(ErrorCode::kProofFailure, "challenge length");
        peer_challenge_ = Key256(ByteView(plain));
        crypto::RandomBytes(own_challenge_.span());
        const Key256 answer = XorPad(peer_challenge_.span());
        ByteWriter w;
        w.Raw(own_challenge_.span()).Raw(answer.span());
        Bytes reply = std::move(w).bytes();
        auto out = Emit(ChannelKind::kRadio, MsgType::kProofChallengeResponse,
                        ProofSeal(MsgType::kProofChallengeResponse, reply));
        SecureZero(reply.data(), reply.size());
        ++proof_step_;
        return {std::move(out)};
      }
      if (type == MsgType::kProofResponse && proof_step_ == 1) {
        const SecureBytes plain = ProofOpen(type, body);
        if (plain.size() != 32 || !(Key256(ByteView(plain)) == XorPad(own_challenge_.span()))) {
          Fail(ErrorCode::kProofFailure, "peer did not prove the shared key");
        }
        ++proof_step_;
        const Key256 confirm = ConfirmValue(peer_challenge_, own_challenge_);
        std::vector<Outbound> out;
        out.push_back(Emit(ChannelKind::kRadio, MsgType::kProofConfirm,
                           ProofSeal(MsgType::kProofConfirm, confirm.span())));
        handshake_complete_ = true;
        for (auto& o : OnHandshakeComplete()) out.push_back(std::move(o));
        return out;
      }
      return unexpected();
    default:
      return unexpected();
  }
}

std::vector<Outbound> PairingSession::TryVerifyPeer() {
  if (!peer_token_ || !stashed_peer_key_) return {};
  ByteView msg(*stashed_peer_key_);
  if (msg.size() < 16) Fail(ErrorCode::kChannelTampered, "short key message");
  const ByteView identity_bytes = msg.subspan(16);
  // The visual token is the trust anchor: compare before parsing anything.
  if (crypto::Sha256(identity_bytes) != *peer_token_) {
    Fail(ErrorCode::kHashMismatch, role_ == PairingRole::kInitiator
                                       ? "scanner key does not match its visual token"
                                       : "presenter key does not match its visual token");
  }
  peer_ = PublicIdentity::Decode(identity_bytes, ErrorCode::kChannelTampered);
  std::array<std::uint8_t, 16> nonce;
  std::copy(msg.begin(), msg.begin() + 16, nonce.begin());
  peer_nonce_ = nonce;
  try {
    shared_ = self_.dh.Agree(peer_->dh);
  } catch (const Error&) {
    Fail(ErrorCode::kProofFailure, "key agreement failed");
  }
  DeriveProofKey();
  phase_ = Phase::kAwaitProof;

  std::vector<Outbound> out;
  if (role_ == PairingRole::kInitiator) {
    crypto::RandomBytes(own_challenge_.span());
    out.push_back(Emit(ChannelKind::kRadio, MsgType::kProofChallenge,
                       ProofSeal(MsgType::kProofChallenge, own_challenge_.span())));
  } else {
    const PublicIdentity pub = self_.Public();
    ByteWriter w;
    w.Raw(ByteView(own_nonce_)).Raw(pub.Encode());
    out.push_back(Emit(ChannelKind::kRadio, MsgType::kScannerKey, w.bytes()));
    out.push_back(Emit(ChannelKind::kVisual, MsgType::kScannerToken, pub.Token()));
  }
  return out;
}

void PairingSession::DeriveProofKey() {
  const VisualToken own_token = self_.Public().Token();
  const VisualToken& presenter = role_ == PairingRole::kInitiator ? own_token : *peer_token_;
  const VisualToken& scanner = role_ == PairingRole::kInitiator ? *peer_token_ : own_token;
  ByteWriter info;
  info.Raw(kProofKeyLabel).Raw(ByteView(presenter)).Raw(ByteView(scanner));
  Key256 key;
  crypto::HkdfSha256(shared_->span(), binding(), info.bytes(), key.span());
  proof_key_ = key;
}

Bytes PairingSession::ProofSeal(MsgType type, ByteView plain) {
  ByteWriter aad;
  aad.Raw(kProofAadLabel).U8(static_cast<std::uint8_t>(type)).Raw(binding());
  const auto nonce = crypto::RandomArray<12>();
  Bytes ct(plain.size());
  const auto tag = crypto::AesGcmSeal(proof_key_->span(), nonce, aad.bytes(), plain, ct);
  ByteWriter w;
  w.Raw(ByteView(nonce)).Raw(ct).Raw(ByteView(tag));
  return std::move(w).bytes();
}

SecureBytes PairingSession::ProofOpen(MsgType type, ByteView body) {
  if (body.size() < 12 + 16) Fail(ErrorCode::kProofFailure, "short proof message");
  ByteWriter aad;
  aad.Raw(kProofAadLabel).U8(static_cast<std::uint8_t>(type)).Raw(binding());
  SecureBytes out(body.size() - 28);
  if (!crypto::AesGcmOpen(proof_key_->span(), body.first(12), aad.bytes(),
                          body.subspan(12, out.size()), body.last(16), out)) {
    Fail(ErrorCode::kProofFailure, std::string(MsgTypeName(type)) + " failed to authenticate");
  }
  return out;
}

// ---- CameraInitSession ----

CameraInitSession::CameraInitSession(const CameraContext& camera,
                                     std::optional<IdentityKeypair> camera_identity)
    : PairingSession(PairingRole::kInitiator, camera.factory),
      base_(camera),
      camera_identity_(std::move(camera_identity)) {
  if (camera.initialized()) Fail(ErrorCode::kAlreadyInitialized);
}

const CameraContext& CameraInitSession::result() const {
  if (!result_) Fail(ErrorCode::kNotInitialized, "initialization has not completed");
  return *result_;
}

std::vector<Outbound> CameraInitSession::OnHandshakeComplete() {
  // Step 6: a fresh camera keypair, vouched for by the factory key.
  if (!camera_identity_) camera_identity_ = IdentityKeypair::Generate(Role::kCamera);
  camera_identity_->role = Role::kCamera;
  ByteWriter w;
  w.Raw(ByteView(base_.camera_id)).Blob(camera_identity_->rsa.PublicKey().ToDer());
  const auto msg = SignMessage(self().rsa, kCameraIdentityLabel, binding(),
                               static_cast<std::uint8_t>(MsgType::kCameraIdentity), std::move(w).bytes());
  set_phase(Phase::kAwaitSecrets);
  return {Emit(ChannelKind::kRadio, MsgType::kCameraIdentity, msg.Encode())};
}

std::vector<Outbound> CameraInitSession::OnMessage(MsgType type, ByteView body) {
  if (phase() != Phase::kAwaitSecrets || type != MsgType::kSecrets) {
    Fail(ErrorCode::kUnexpectedMessage, std::string(MsgTypeName(type)) + " after handshake");
  }
  const SignedMessage msg = DecodeSigned(body);
  VerifyMessage(peer()->rsa, kSecretsLabel, binding(), static_cast<std::uint8_t>(type), msg);
  const auto plain = Unseal(camera_identity_->rsa, LabelAad(kSecretsLabel, binding()), msg.payload);
  if (!plain) Fail(ErrorCode::kChannelTampered, "secrets do not open");

  ByteReader r(ByteView(*plain), ErrorCode::kChannelTampered);
  auto wifi = r.Blob();
  const Key256 seed(r.Raw(32));
  const keytree::TreeParams params = ReadParams(r);
  auto escrow_bytes = r.Blob();
  r.ExpectEnd();
  const EscrowMaterial escrow = EscrowMaterial::Decode(escrow_bytes);
  if (!(escrow.CameraKey().rsa() == camera_identity_->rsa.PublicKey())) {
    Fail(ErrorCode::kChannelTampered, "escrow names a different camera key");
  }

  CameraContext::Installed in;
  in.identity = *camera_identity_;
  in.owner_key = peer()->rsa;
  in.store = keytree::KeyStore::FromSeed(params, seed);
  in.escrow.assign(escrow_bytes.begin(), escrow_bytes.end());
  in.wifi_credentials.assign(wifi.begin(), wifi.end());
  CameraContext done = base_;
  done.installed = std::move(in);
  result_ = std::move(done);
  set_phase(Phase::kDone);
  return {};
}

// ---- OwnerInitSession ----

OwnerInitSession::OwnerInitSession(OwnerInitOptions options)
    : PairingSession(PairingRole::kResponder,
                     options.identity ? *options.identity : IdentityKeypair::Generate(Role::kOwner)),
      options_(std::move(options)) {}

const OwnerInitResult& OwnerInitSession::result() const {
  if (!result_) Fail(ErrorCode::kNotInitialized, "initialization has not completed");
  return *result_;
}

std::vector<Outbound> OwnerInitSession::OnHandshakeComplete() {
  set_phase(Phase::kAwaitIdentityRotation);
  return {};
}

std::vector<Outbound> OwnerInitSession::OnMessage(MsgType type, ByteView body) {
  if (phase() != Phase::kAwaitIdentityRotation || type != MsgType::kCameraIdentity) {
    Fail(ErrorCode::kUnexpectedMessage, std::string(MsgTypeName(type)) + " after handshake");
  }
  const SignedMessage msg = DecodeSigned(body);
  VerifyMessage(peer()->rsa, kCameraIdentityLabel, binding(), static_cast<std::uint8_t>(type), msg);
  ByteReader r(msg.payload, ErrorCode::kChannelTampered);
  const stream::CameraId camera_id = r.Array<16>();
  auto der = r.Blob();
  r.ExpectEnd();
  stream::VerifyingKey camera_key;
  try {
    camera_key = stream::VerifyingKey::FromDer(der);
  } catch (const Error&) {
    Fail(ErrorCode::kChannelTampered, "bad camera key");
  }

  // Step 7.
  keytree::TreeParams params{options_.depth, options_.epoch_seconds, options_.now_ms};
  params.Validate();
  Key256 seed;
  crypto::RandomBytes(seed.span());
  keytree::KeyStore root = keytree::KeyStore::FromSeed(params, seed);
  EscrowBundle escrow = BuildEscrow(self(), root, camera_key);
  const Bytes escrow_bytes = escrow.material.Encode();

  ByteWriter w;
  w.Blob(options_.wifi_credentials).Raw(seed.span());
  WriteParams(w, params);
  w.Blob(escrow_bytes);
  Bytes plain = std::move(w).bytes();
  Bytes sealed = Seal(camera_key.rsa(), LabelAad(kSecretsLabel, binding()), plain);
  SecureZero(plain.data(), plain.size());
  const auto signed_msg = SignMessage(self().rsa, kSecretsLabel, binding(),
                                      static_cast<std::uint8_t>(MsgType::kSecrets), std::move(sealed));

  OwnerContext owner;
  owner.identity = self();
  owner.camera_id = camera_id;
  owner.camera_key = camera_key;
  owner.store = std::move(root);
  owner.escrow = std::move(escrow.material);
  owner.wifi_credentials = options_.wifi_credentials;
  result_ = OwnerInitResult{std::move(owner), escrow.passphrase};
  set_phase(Phase::kDone);
  return {Emit(ChannelKind::kRadio, MsgType::kSecrets, signed_msg.Encode())};
}

// ---- DelegatorSession ----

DelegatorSession::DelegatorSession(const OwnerContext& owner, keytree::EpochRange range,
                                   ChannelKind key_channel)
    : PairingSession(PairingRole::kInitiator, owner.identity),
      owner_(owner),
      range_(range),
      key_channel_(key_channel) {
  range_.Validate(owner.store.params());
  nodes_ = owner.store.Delegate(range_);
}

std::vector<Outbound> DelegatorSession::OnHandshakeComplete() {
  ByteWriter w;
  WriteParams(w, owner_.store.params());
  w.Raw(ByteView(owner_.camera_id)).Blob(owner_.camera_key.ToDer());
  w.U64(range_.first).U64(range_.last).U32(static_cast<std::uint32_t>(nodes_.size()));
  for (const auto& n : nodes_) {
    w.U8(static_cast<std::uint8_t>(n.id().level)).U64(n.id().index).Raw(n.key().span());
  }
  Bytes plain = std::move(w).bytes();
  Bytes sealed = Seal(peer()->rsa, LabelAad(kDelegationLabel, binding()), plain);
  SecureZero(plain.data(), plain.size());
  const auto msg = SignMessage(self().rsa, kDelegationLabel, binding(),
                               static_cast<std::uint8_t>(MsgType::kDelegationKeys), std::move(sealed));
  keys_sent_ = true;
  set_phase(Phase::kDone);
  return {Emit(key_channel_, MsgType::kDelegationKeys, msg.Encode())};
}

std::vector<Outbound> DelegatorSession::OnMessage(MsgType type, ByteView) {
  Fail(ErrorCode::kUnexpectedMessage, std::string(MsgTypeName(type)) + " after handshake");
}

// ---- DelegateeSession ----

DelegateeSession::DelegateeSession(std::optional<IdentityKeypair> identity)
    : PairingSession(PairingRole::kResponder,
                     identity ? *identity : IdentityKeypair::Generate(Role::kDelegatee)) {}

const DelegateeContext& DelegateeSession::result() const {
  if (!result_) Fail(ErrorCode::kNotInitialized, "delegation has not completed");
  return *result_;
}

std::vector<Outbound> DelegateeSession::OnHandshakeComplete() {
  set_phase(Phase::kAwaitKeys);
  return {};
}

std::vector<Outbound> DelegateeSession::OnMessage(MsgType type, ByteView body) {
  if (phase() != Phase::kAwaitKeys || type != MsgType::kDelegationKeys) {
    Fail(ErrorCode::kUnexpectedMessage, std::string(MsgTypeName(type)) + " after handshake");
  }
  const SignedMessage msg = DecodeSigned(body);
  VerifyMessage(peer()->rsa, kDelegationLabel, binding(), static_cast<std::uint8_t>(type), msg);
  const auto plain = Unseal(self().rsa, LabelAad(kDelegationLabel, binding()), msg.payload);
  if (!plain) Fail(ErrorCode::kChannelTampered, "delegated keys do not open");

  ByteReader r(ByteView(*plain), ErrorCode::kChannelTampered);
  DelegateeContext ctx;
  const keytree::TreeParams params = ReadParams(r);
  ctx.camera_id = r.Array<16>();
  auto der = r.Blob();
  ctx.range.first = r.U64();
  ctx.range.last = r.U64();
  const std::uint32_t count = r.U32();
  if (count > 2u * keytree::kMaxDepth) r.Malformed("too many nodes");
  std::vector<keytree::NodeKey> nodes;
  for (std::uint32_t i = 0; i < count; ++i) {
    keytree::NodeId id{r.U8(), 0};
    id.index = r.U64();
    const Key256 key(r.Raw(32));
    if (!id.valid(params.depth)) r.Malformed("node outside tree");
    if (id.first_epoch(params.depth) < ctx.range.first || id.last_epoch(params.depth) > ctx.range.last) {
      r.Malformed("node outside delegated range");
    }
    nodes.emplace_back(id, key);
  }
  r.ExpectEnd();
  try {
    ctx.camera_key = stream::VerifyingKey::FromDer(der);
    ctx.range.Validate(params);
    ctx.store = keytree::KeyStore::FromNodes(params, std::move(nodes));
  } catch (const Error& e) {
    Fail(ErrorCode::kChannelTampered, e.what());
  }
  ctx.identity = self();
  result_ = std::move(ctx);
  set_phase(Phase::kDone);
  return {};
}

// ---- Drivers ----

namespace {

void NoteFailure(SessionRun& run, const PairingSession& s, const char* who) {
  if (!run.first_failure && s.failure()) {
    run.first_failure = s.failure();
    run.failure_detail = std::string(who) + ": " + s.failure_detail();
  }
}

const char* WhoName(const PairingSession& s) {
  return s.role() == PairingRole::kInitiator ? "initiator" : "responder";
}

// Traffic has stopped: whoever is still waiting times out.
void FinishStalled(SessionRun& run, PairingSession* s[2]) {
  if (s[0]->terminal() && s[1]->terminal()) return;
  run.simulated_ms += transport::kStepTimeout.count();
  for (int p = 0; p < 2; ++p) {
    s[p]->Timeout();
    NoteFailure(run, *s[p], WhoName(*s[p]));
  }
}

}  // namespace

SessionRun RunOverLink(PairingSession& a, PairingSession& b, transport::Link& link) {
  SessionRun run;
  PairingSession* s[2] = {&a, &b};
  // Channels to drain, in the order messages were sent. Keeps delivery in
  // global send order so an honest link behaves like direct calls.
  std::deque<std::pair<int, ChannelKind>> tickets;
  auto send = [&](int from, std::vector<Outbound> outs) {
    for (auto& o : outs) {
      run.emitted.push_back({from, o.channel, transport::PeekMessageType(o.bytes).value_or(0), o.bytes.size()});
      tickets.emplace_back(from, o.channel);
      link.Outbound(from, o.channel).Send(std::move(o.bytes));
    }
  };
  send(0, a.Start());
  send(1, b.Start());
  while (!tickets.empty()) {
    const auto [from, kind] = tickets.front();
    tickets.pop_front();
    const int to = 1 - from;
    while (auto m = link.Outbound(from, kind).TryRecv()) {
      auto outs = s[to]->Receive(kind, *m);
      NoteFailure(run, *s[to], WhoName(*s[to]));
      send(to, std::move(outs));
    }
  }
  FinishStalled(run, s);
  return run;
}

SessionRun RunDirect(PairingSession& a, PairingSession& b) {
  SessionRun run;
  PairingSession* s[2] = {&a, &b};
  struct Pending {
    int to;
    Outbound msg;
  };
  std::deque<Pending> queue;
  auto send = [&](int from, std::vector<Outbound> outs) {
    for (auto& o : outs) {
      run.emitted.push_back({from, o.channel, transport::PeekMessageType(o.bytes).value_or(0), o.bytes.size()});
      queue.push_back({1 - from, std::move(o)});
    }
  };
  send(0, a.Start());
  send(1, b.Start());
  while (!queue.empty()) {
    Pending p = std::move(queue.front());
    queue.pop_front();
    auto outs = s[p.to]->Receive(p.msg.channel, p.msg.bytes);
    NoteFailure(run, *s[p.to], WhoName(*s[p.to]));
    send(p.to, std::move(outs));
  }
  FinishStalled(run, s);
  return run;
}

InitResult InitPairing(const CameraContext& camera, OwnerInitOptions options, transport::Link& link) {
  CameraInitSession cam(camera);
  OwnerInitSession owner(std::move(options));
  SessionRun run = RunOverLink(cam, owner, link);
  if (cam.phase() != Phase::kDone || owner.phase() != Phase::kDone) {
    Fail(run.first_failure.value_or(ErrorCode::kTimeout), "initialization failed: " + run.failure_detail);
  }
  return {owner.result().owner, owner.result().passphrase, cam.result(), std::move(run)};
}

DelegationResult DelegatePairing(const OwnerContext& owner, keytree::EpochRange range,
                                 transport::Link& link, ChannelKind key_channel) {
  DelegatorSession delegator(owner, range, key_channel);
  DelegateeSession delegatee;
  SessionRun run = RunOverLink(delegator, delegatee, link);
  if (delegator.phase() != Phase::kDone || delegatee.phase() != Phase::kDone) {
    Fail(run.first_failure.value_or(ErrorCode::kTimeout), "delegation failed: " + run.failure_detail);
  }
  return {delegatee.result(), delegator.node_count(), std::move(run)};
}

}  // namespace cactus::protocols
