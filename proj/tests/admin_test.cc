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

#include <gtest/gtest.h>

#include <functional>

#include "cactus/pairing.h"
#include "cactus/streamcrypto.h"
#include "support/protocol_fixtures.h"
#include "support/test_keys.h"

namespace cactus::protocols {
namespace {

using keytree::EpochRange;
using transport::Action;
using transport::AdversaryScript;
using transport::ChannelKind;
using transport::Link;
using transport::Rule;

constexpr std::int64_t kNow = 1'000'000;

void ExpectCode(ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << ErrorCodeName(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

class AdminTest : public ::testing::Test {
 protected:
  testing::HonestInit init_ = testing::InitHonestly(6, 10, kNow);
  OwnerContext& owner() { return init_.owner; }
  CameraContext& camera() { return init_.camera; }
};

TEST_F(AdminTest, DeleteRangeRemovesAccessOnBothSides) {
  Link link;
  RunAdmin(owner(), camera(), AdminOp::kDeleteRange, EpochRange{7, 7}, link, kNow + 1000);
  EXPECT_FALSE(owner().store.CanDerive(7));
  EXPECT_FALSE(camera().require().store.CanDerive(7));
  EXPECT_TRUE(owner().store.CanDerive(6));
  EXPECT_TRUE(owner().store.CanDerive(8));
  EXPECT_TRUE(camera().require().store.CanDerive(8));
  ExpectCode(ErrorCode::kNoAccess, [&] { owner().store.Extract(7); });
  // Camera now holds the owner's updated escrow.
  EXPECT_EQ(camera().require().escrow, owner().escrow.Encode());
  EXPECT_EQ(camera().require().last_admin_issued_ms, kNow + 1000);
}

TEST_F(AdminTest, RecoveryAfterDeletionCannotReachDeletedEpochs) {
  Link link;
  RunAdmin(owner(), camera(), AdminOp::kDeleteRange, EpochRange{10, 20}, link, kNow);
  Link radio;
  OwnerContext recovered = RecoverOverRadio(camera(), radio, init_.passphrase);
  for (keytree::Epoch e = 0; e < 64; ++e) {
    EXPECT_EQ(recovered.store.CanDerive(e), e < 10 || e > 20) << e;
  }
}

TEST_F(AdminTest, ReplayedRequestIsRejectedWithoutChange) {
  PendingAdmin p = IssueAdmin(owner(), AdminOp::kDeleteRange, EpochRange{3, 3}, kNow);
  HandleAdmin(camera(), p.wire, kNow);
  const auto before = camera().require().store.node_ids();
  const Bytes escrow_before = camera().require().escrow;
  ExpectCode(ErrorCode::kReplayDetected, [&] { HandleAdmin(camera(), p.wire, kNow + 10); });
  EXPECT_EQ(camera().require().store.node_ids(), before);
  EXPECT_EQ(camera().require().escrow, escrow_before);
}

TEST_F(AdminTest, IssuedAtMustStrictlyIncrease) {
  HandleAdmin(camera(), IssueAdmin(owner(), AdminOp::kDeleteRange, EpochRange{1, 1}, kNow).wire, kNow);
  ExpectCode(ErrorCode::kReplayDetected, [&] {
    HandleAdmin(camera(), IssueAdmin(owner(), AdminOp::kDeleteRange, EpochRange{2, 2}, kNow).wire, kNow);
  });
  ExpectCode(ErrorCode::kReplayDetected, [&] {
    HandleAdmin(camera(), IssueAdmin(owner(), AdminOp::kDeleteRange, EpochRange{2, 2}, kNow - 5).wire, kNow);
  });
  EXPECT_NO_THROW(
      HandleAdmin(camera(), IssueAdmin(owner(), AdminOp::kDeleteRange, EpochRange{2, 2}, kNow + 1).wire, kNow));
  EXPECT_EQ(camera().require().last_admin_issued_ms, kNow + 1);
}

TEST_F(AdminTest, FreshnessWindowIsFiveMinutes) {
  const std::int64_t w = kAdminFreshness.count();
  ExpectCode(ErrorCode::kStaleRequest, [&] {
    HandleAdmin(camera(), IssueAdmin(owner(), AdminOp::kDeleteRange, EpochRange{1, 1}, kNow).wire, kNow + w + 1);
  });
  ExpectCode(ErrorCode::kStaleRequest, [&] {
    HandleAdmin(camera(), IssueAdmin(owner(), AdminOp::kDeleteRange, EpochRange{1, 1}, kNow + w + 1).wire, kNow);
  });
  EXPECT_NO_THROW(
      HandleAdmin(camera(), IssueAdmin(owner(), AdminOp::kDeleteRange, EpochRange{1, 1}, kNow).wire, kNow + w));
}

TEST_F(AdminTest, RequestFromAnotherOwnerIsRejected) {
  OwnerContext mallory = owner();
  mallory.identity = testing::CachedIdentity(Role::kOwner, 5);
  ExpectCode(ErrorCode::kBadSignature, [&] {
    HandleAdmin(camera(), IssueAdmin(mallory, AdminOp::kFactoryReset, std::nullopt, kNow).wire, kNow);
  });
  EXPECT_TRUE(camera().initialized());
}

TEST_F(AdminTest, TamperedRequestIsRejected) {
  PendingAdmin p = IssueAdmin(owner(), AdminOp::kDeleteRange, EpochRange{4, 4}, kNow);
  for (std::size_t pos : {std::size_t{0}, std::size_t{5}, std::size_t{40}, p.wire.size() - 3}) {
    Bytes bad = p.wire;
    bad[pos] ^= 0x04;
    try {
      HandleAdmin(camera(), bad, kNow);
      ADD_FAILURE() << pos;
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == ErrorCode::kBadSignature || e.code() == ErrorCode::kChannelTampered ||
                  e.code() == ErrorCode::kUnexpectedMessage)
          << e.what();
    }
  }
  EXPECT_TRUE(camera().require().store.CanDerive(4));
}

TEST_F(AdminTest, OwnerWaitsForAck) {
  const auto before = owner().store.node_ids();
  auto adv = std::make_shared<AdversaryScript>(
      0, std::vector<Rule>{{.msg_type = static_cast<std::uint8_t>(MsgType::kAdminAck), .action = Action::kDrop}});
  Link link(adv);
  ExpectCode(ErrorCode::kAckTimeout,
             [&] { RunAdmin(owner(), camera(), AdminOp::kDeleteRange, EpochRange{9, 9}, link, kNow); });
  // The camera applied it; the owner did not.
  EXPECT_EQ(owner().store.node_ids(), before);
  EXPECT_FALSE(camera().require().store.CanDerive(9));

  auto drop_request = std::make_shared<AdversaryScript>(
      0, std::vector<Rule>{{.msg_type = static_cast<std::uint8_t>(MsgType::kAdminRequest), .action = Action::kDrop}});
  Link lossy(drop_request);
  ExpectCode(ErrorCode::kAckTimeout,
             [&] { RunAdmin(owner(), camera(), AdminOp::kDeleteRange, EpochRange{11, 11}, lossy, kNow + 1); });
  EXPECT_TRUE(camera().require().store.CanDerive(11));
}

TEST_F(AdminTest, AckMustMatchRequest) {
  PendingAdmin first = IssueAdmin(owner(), AdminOp::kDeleteRange, EpochRange{1, 1}, kNow);
  PendingAdmin second = IssueAdmin(owner(), AdminOp::kDeleteRange, EpochRange{2, 2}, kNow + 1);
  const Bytes ack1 = HandleAdmin(camera(), first.wire, kNow);
  ExpectCode(ErrorCode::kBadSignature, [&] { CompleteAdmin(owner(), second, ack1); });
  Bytes forged = ack1;
  forged[20] ^= 1;
  ExpectCode(ErrorCode::kBadSignature, [&] { CompleteAdmin(owner(), first, forged); });
  EXPECT_TRUE(owner().store.CanDerive(1));
  CompleteAdmin(owner(), first, ack1);
  EXPECT_FALSE(owner().store.CanDerive(1));
}

TEST_F(AdminTest, FactoryResetReturnsCameraToUninitialized) {
  const auto factory = camera().factory.Public();
  const auto old_leaf = owner().store.Extract(0);
  // Footage recorded before the reset.
  const auto signer = camera().signer();
  const auto block = stream::SignBlock(
      signer, camera().camera_id,
      {stream::EncryptFrame(camera().require().store.Extract(0), camera().require().store.params(),
                            {testing::PatternPayload(64, 1), kNow + 5})});

  Link link;
  RunAdmin(owner(), camera(), AdminOp::kFactoryReset, std::nullopt, link, kNow);
  EXPECT_FALSE(camera().initialized());
  EXPECT_EQ(camera().factory.Public(), factory);
  EXPECT_TRUE(owner().store.empty());
  ExpectCode(ErrorCode::kNotInitialized, [&] { camera().require(); });
  ExpectCode(ErrorCode::kNotInitialized, [&] {
    HandleEscrowRequest(camera(), EscrowRequestMessage());
  });

  // A fresh initialization works and cannot open pre-reset footage.
  CameraInitSession cam(camera(), testing::CachedIdentity(Role::kCamera, 1));
  OwnerInitSession next(testing::InitOptions(6, 10, kNow, 1));
  Link l2;
  ASSERT_TRUE(RunOverLink(cam, next, l2).completed());
  const CameraContext& again = cam.result();
  EXPECT_FALSE(again.require().store.Extract(0).key() == old_leaf.key());
  ExpectCode(ErrorCode::kSignatureInvalid,
             [&] { stream::DecryptBlock(again.require().store, again.signer().verifying_key(), block); });
  // Even trusting the old camera key, the new keys do not open old frames.
  const auto outcomes = stream::DecryptBlock(again.require().store, signer.verifying_key(), block);
  ASSERT_EQ(outcomes.size(), 1u);
  EXPECT_FALSE(outcomes[0].frame.has_value());
  EXPECT_EQ(outcomes[0].error, ErrorCode::kTagMismatch);
}

TEST_F(AdminTest, ResetZeroizesInstalledBytes) {
  const std::int64_t live_before = keytree::NodeKey::LiveCount();
  ASSERT_TRUE(camera().initialized());
  const std::size_t camera_nodes = camera().require().store.size();
  camera().FactoryReset();
  EXPECT_EQ(keytree::NodeKey::LiveCount(), live_before - static_cast<std::int64_t>(camera_nodes));
  EXPECT_FALSE(camera().initialized());
}

// ---- Recovery ----

TEST_F(AdminTest, RecoveryRestoresOwnerState) {
  Link radio;
  OwnerContext recovered = RecoverOverRadio(camera(), radio, Passphrase::Parse(init_.passphrase.ToString()));
  EXPECT_EQ(recovered.identity.Public(), owner().identity.Public());
  EXPECT_EQ(recovered.camera_id, owner().camera_id);
  EXPECT_EQ(recovered.camera_key, owner().camera_key);
  EXPECT_EQ(recovered.store.node_ids(), owner().store.node_ids());
  EXPECT_EQ(recovered.store.params(), owner().store.params());
  EXPECT_EQ(recovered.store.Extract(33).key(), owner().store.Extract(33).key());
  // The recovered owner is a full owner: the camera accepts its requests.
  EXPECT_NO_THROW(HandleAdmin(camera(), IssueAdmin(recovered, AdminOp::kDeleteRange, EpochRange{0, 0}, kNow).wire, kNow));
}

TEST_F(AdminTest, AnyoneGetsEscrowButNeedsPassphrase) {
  const Bytes response = HandleEscrowRequest(camera(), EscrowRequestMessage());
  ExpectCode(ErrorCode::kBadPassphrase, [&] { RecoverAccess(response, Passphrase::Generate()); });
  Link radio;
  ExpectCode(ErrorCode::kBadPassphrase, [&] { RecoverOverRadio(camera(), radio, Passphrase::Generate()); });
}

TEST_F(AdminTest, RecoveryRequiresInitializedCamera) {
  CameraContext blank = testing::FreshCamera(3);
  Link radio;
  ExpectCode(ErrorCode::kNotInitialized, [&] { RecoverOverRadio(blank, radio, init_.passphrase); });
}

// ---- Context state files ----

TEST_F(AdminTest, ContextsSurviveSerialization) {
  const OwnerContext o = OwnerContext::Deserialize(ByteView(owner().Serialize()));
  EXPECT_EQ(o.identity.Public(), owner().identity.Public());
  EXPECT_EQ(o.camera_id, owner().camera_id);
  EXPECT_EQ(o.camera_key, owner().camera_key);
  EXPECT_EQ(o.store.node_ids(), owner().store.node_ids());
  EXPECT_EQ(o.escrow, owner().escrow);
  EXPECT_EQ(o.wifi_credentials, owner().wifi_credentials);

  const CameraContext c = CameraContext::Deserialize(ByteView(camera().Serialize()));
  EXPECT_EQ(c.camera_id, camera().camera_id);
  EXPECT_EQ(c.factory.Public(), camera().factory.Public());
  ASSERT_TRUE(c.initialized());
  EXPECT_EQ(c.require().identity.Public(), camera().require().identity.Public());
  EXPECT_EQ(c.require().owner_key, camera().require().owner_key);
  EXPECT_EQ(c.require().escrow, camera().require().escrow);
  EXPECT_EQ(c.require().last_admin_issued_ms, camera().require().last_admin_issued_ms);

  const CameraContext blank = CameraContext::Deserialize(ByteView(testing::FreshCamera(2).Serialize()));
  EXPECT_FALSE(blank.initialized());

  Link link;
  const auto d = DelegatePairing(owner(), {5, 9}, link).delegatee;
  const DelegateeContext d2 = DelegateeContext::Deserialize(ByteView(d.Serialize()));
  EXPECT_EQ(d2.range, d.range);
  EXPECT_EQ(d2.store.node_ids(), d.store.node_ids());

  SecureBytes bad = owner().Serialize();
  bad[1] ^= 1;
  ExpectCode(ErrorCode::kMalformedMessage, [&] { OwnerContext::Deserialize(ByteView(bad)); });
}

}  // namespace
}  // namespace cactus::protocols
