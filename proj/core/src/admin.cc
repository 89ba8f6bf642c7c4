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

#include "cactus/admin.h"

#include <cstdlib>

#include "cactus/pairing.h"

namespace cactus::protocols {
namespace {

using transport::ChannelKind;

constexpr std::string_view kRequestLabel = "cactus/admin/request";
constexpr std::string_view kAckLabel = "cactus/admin/ack";
constexpr auto kRequestType = static_cast<std::uint8_t>(MsgType::kAdminRequest);
constexpr auto kAckType = static_cast<std::uint8_t>(MsgType::kAdminAck);

// digest of the request envelope | u8 op | u64 issued_at
Bytes AckPayload(ByteView request_wire, const AdminRequest& req) {
  ByteWriter w;
  w.Raw(ByteView(crypto::Sha256(request_wire))).U8(static_cast<std::uint8_t>(req.op));
  w.U64(static_cast<std::uint64_t>(req.issued_at_ms));
  return std::move(w).bytes();
}

transport::Envelope ExpectType(ByteView wire, MsgType type) {
  transport::Envelope e = transport::DecodeEnvelope(wire);
  if (e.type != static_cast<std::uint8_t>(type)) {
    Fail(ErrorCode::kUnexpectedMessage, "expected " + std::string(MsgTypeName(type)));
  }
  return e;
}

}  // namespace

Bytes AdminRequest::Encode() const {
  ByteWriter w;
  w.U8(static_cast<std::uint8_t>(op)).U64(range.first).U64(range.last);
  w.U64(static_cast<std::uint64_t>(issued_at_ms)).Blob(updated_escrow);
  return std::move(w).bytes();
}

AdminRequest AdminRequest::Decode(ByteView bytes) {
  ByteReader r(bytes, ErrorCode::kChannelTampered);
  AdminRequest req;
  const std::uint8_t op = r.U8();
  if (op != 1 && op != 2) r.Malformed("unknown admin operation");
  req.op = static_cast<AdminOp>(op);
  req.range.first = r.U64();
  req.range.last = r.U64();
  req.issued_at_ms = static_cast<std::int64_t>(r.U64());
  auto escrow = r.Blob();
  req.updated_escrow.assign(escrow.begin(), escrow.end());
  r.ExpectEnd();
  return req;
}

PendingAdmin IssueAdmin(const OwnerContext& owner, AdminOp op,
                        std::optional<keytree::EpochRange> range, std::int64_t now_ms) {
  PendingAdmin p;
  p.request.op = op;
  p.request.issued_at_ms = now_ms;
  if (op == AdminOp::kDeleteRange) {
    if (!range) Fail(ErrorCode::kInvalidArgument, "deletion needs a range");
    range->Validate(owner.store.params());
    p.request.range = *range;
    p.new_store = owner.store.DeleteRange(*range);
    p.new_escrow = ReplaceEscrowKeys(owner.escrow, owner.identity.Public(), p.new_store);
    p.request.updated_escrow = p.new_escrow.Encode();
  } else {
    p.new_store = keytree::KeyStore::Empty(owner.store.params());
    p.new_escrow = owner.escrow;
  }
  Bytes sealed = Seal(owner.camera_key.rsa(), AsBytes(kRequestLabel), p.request.Encode());
  const SignedMessage msg = SignMessage(owner.identity.rsa, kRequestLabel, {}, kRequestType, std::move(sealed));
  p.wire = transport::EncodeEnvelope(kRequestType, msg.Encode());
  return p;
}

Bytes HandleAdmin(CameraContext& camera, ByteView wire, std::int64_t now_ms) {
  auto& in = camera.require();
  const transport::Envelope e = ExpectType(wire, MsgType::kAdminRequest);
  const SignedMessage msg = SignedMessage::Decode(e.body);
  VerifyMessage(in.owner_key, kRequestLabel, {}, kRequestType, msg);
  const auto plain = Unseal(in.identity.rsa, AsBytes(kRequestLabel), msg.payload);
  if (!plain) Fail(ErrorCode::kChannelTampered, "admin request does not open");
  const AdminRequest req = AdminRequest::Decode(ByteView(*plain));

  if (req.issued_at_ms <= in.last_admin_issued_ms) {
    Fail(ErrorCode::kReplayDetected, "issued_at " + std::to_string(req.issued_at_ms) +
                                         " not after " + std::to_string(in.last_admin_issued_ms));
  }
  const std::int64_t skew = now_ms - req.issued_at_ms;
  if (skew > kAdminFreshness.count() || -skew > kAdminFreshness.count()) {
    Fail(ErrorCode::kStaleRequest, "request is " + std::to_string(skew) + " ms off the camera clock");
  }

  // Everything is checked before anything changes.
  std::optional<keytree::KeyStore> new_store;
  if (req.op == AdminOp::kDeleteRange) {
    req.range.Validate(in.store.params());
    EscrowMaterial::Decode(req.updated_escrow);
    new_store = in.store.DeleteRange(req.range);
  }
  const SignedMessage ack = SignMessage(in.identity.rsa, kAckLabel, {}, kAckType, AckPayload(wire, req));
  Bytes ack_wire = transport::EncodeEnvelope(kAckType, ack.Encode());

  if (req.op == AdminOp::kDeleteRange) {
    in.store = std::move(*new_store);
    SecureZero(in.escrow.data(), in.escrow.size());
    in.escrow = req.updated_escrow;
    in.last_admin_issued_ms = req.issued_at_ms;
  } else {
    camera.FactoryReset();
  }
  return ack_wire;
}

void CompleteAdmin(OwnerContext& owner, const PendingAdmin& pending, ByteView ack_wire) {
  try {
    const transport::Envelope e = ExpectType(ack_wire, MsgType::kAdminAck);
    const SignedMessage msg = SignedMessage::Decode(e.body);
    VerifyMessage(owner.camera_key.rsa(), kAckLabel, {}, kAckType, msg);
    if (msg.payload != AckPayload(pending.wire, pending.request)) {
      Fail(ErrorCode::kBadSignature, "ack answers a different request");
    }
  } catch (const Error& err) {
    Fail(ErrorCode::kBadSignature, std::string("admin ack: ") + err.what());
  }
  owner.store = pending.new_store;
  owner.escrow = pending.new_escrow;
}

void RunAdmin(OwnerContext& owner, CameraContext& camera, AdminOp op,
              std::optional<keytree::EpochRange> range, transport::Link& link, std::int64_t now_ms) {
  PendingAdmin pending = IssueAdmin(owner, op, range, now_ms);
  link.Outbound(0, ChannelKind::kInternet).Send(pending.wire);
  if (auto req = link.Outbound(0, ChannelKind::kInternet).TryRecv()) {
    link.Outbound(1, ChannelKind::kInternet).Send(HandleAdmin(camera, *req, now_ms));
  }
  auto ack = link.Outbound(1, ChannelKind::kInternet).TryRecv();
  if (!ack) Fail(ErrorCode::kAckTimeout, "camera did not acknowledge");
  CompleteAdmin(owner, pending, *ack);
}

// ---- Recovery ----

Bytes EscrowRequestMessage() {
  return transport::EncodeEnvelope(static_cast<std::uint8_t>(MsgType::kEscrowRequest), {});
}

Bytes HandleEscrowRequest(const CameraContext& camera, ByteView wire) {
  ExpectType(wire, MsgType::kEscrowRequest);
  const auto& in = camera.require();
  ByteWriter w;
  w.Raw(ByteView(camera.camera_id)).Blob(in.escrow);
  return transport::EncodeEnvelope(static_cast<std::uint8_t>(MsgType::kEscrowResponse), w.bytes());
}

OwnerContext RecoverAccess(ByteView escrow_response, const Passphrase& passphrase) {
  const transport::Envelope e = ExpectType(escrow_response, MsgType::kEscrowResponse);
  ByteReader r(e.body, ErrorCode::kChannelTampered);
  OwnerContext owner;
  owner.camera_id = r.Array<16>();
  owner.escrow = EscrowMaterial::Decode(r.Blob());
  r.ExpectEnd();
  RecoveredEscrow rec = RecoverEscrow(owner.escrow, passphrase);
  owner.identity = std::move(rec.owner);
  owner.store = std::move(rec.store);
  owner.camera_key = std::move(rec.camera_key);
  return owner;
}

OwnerContext RecoverOverRadio(CameraContext& camera, transport::Link& link,
                              const Passphrase& passphrase) {
  link.Outbound(0, ChannelKind::kRadio).Send(EscrowRequestMessage());
  if (auto req = link.Outbound(0, ChannelKind::kRadio).TryRecv()) {
    link.Outbound(1, ChannelKind::kRadio).Send(HandleEscrowRequest(camera, *req));
  }
  auto resp = link.Outbound(1, ChannelKind::kRadio).TryRecv();
  if (!resp) Fail(ErrorCode::kTimeout, "no escrow response");
  return RecoverAccess(*resp, passphrase);
}

}  // namespace cactus::protocols
