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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "cactus/admin.h"
#include "cactus/camera.h"
#include "cactus/client.h"
#include "cactus/keytree.h"
#include "cactus/pairing.h"
#include "cactus/stats.h"
#include "cactus/storage.h"
#include "cactus/streamcrypto.h"
#include "support/protocol_fixtures.h"
#include "support/tree_oracle.h"

namespace cactus {
namespace {

using keytree::Epoch;
using keytree::EpochRange;
using keytree::KeyStore;
using keytree::NodeId;
using keytree::TreeParams;

// ---- pinned thresholds ----
constexpr double kTableRuntimeLimitMs = 1000;
constexpr double kOracleRuntimeLimitMs = 60'000;
constexpr int kOracleSequences = 10'000;
constexpr int kOpsPerSequence = 8;
constexpr int kOracleMaxDepth = 12;
constexpr int kCoverMaxDepth = 6;
constexpr int kTamperFlips = 1000;
constexpr int kPerfFrames = 1000;
constexpr std::size_t kPerfFrameBytes = 100 * 1024;
constexpr std::size_t kPerfBlockFrames = stream::kDefaultBlockSize;
constexpr double kEncryptLimitMs = 10;
constexpr double kSignLimitMs = 50;
constexpr double kExtractLimitMs = 1;
constexpr double kDelayFactorLimit = 2.0;
constexpr double kGapDeviationLimit = 1.0;
constexpr int kSimSeconds = 120;

// Published lifespan table in integer years, depths 24..32 step 2.
constexpr std::array<int, 5> kDepths = {24, 26, 28, 30, 32};
constexpr std::array<long long, 5> kLifespan10s = {5, 21, 85, 340, 1362};
constexpr std::array<long long, 5> kLifespan60s = {32, 128, 511, 2043, 8172};
constexpr std::uint64_t kMiB = std::uint64_t{1} << 20;
constexpr std::array<std::uint64_t, 5> kStorage = {256 * kMiB, 1024 * kMiB, 4096 * kMiB, 16384 * kMiB,
                                                   65536 * kMiB};

struct Outcome {
  bool pass = false;
  std::string detail;
};

testing::RawKey ToRaw(const Key256& k) {
  testing::RawKey out;
  std::copy(k.data(), k.data() + 32, out.begin());
  return out;
}

Key256 SeedFrom(std::uint64_t s) {
  std::mt19937_64 rng(s);
  std::array<std::uint8_t, 32> raw;
  for (auto& b : raw) b = static_cast<std::uint8_t>(rng());
  return Key256(raw);
}

std::string Fmt(const char* fmt, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c);
  return buf;
}

// ---- 1, 2: lifespan and storage table ----

Outcome LifespanTable() {
  Stopwatch sw;
  int mismatches = 0;
  for (std::size_t i = 0; i < kDepths.size(); ++i) {
    if (std::llround(keytree::LifespanYears({kDepths[i], 10, 0})) != kLifespan10s[i]) ++mismatches;
    if (std::llround(keytree::LifespanYears({kDepths[i], 60, 0})) != kLifespan60s[i]) ++mismatches;
  }
  const double ms = sw.ElapsedMs();
  return {mismatches == 0 && ms < kTableRuntimeLimitMs,
          Fmt("10 cells, %.0f mismatches, %.3f ms", mismatches, ms)};
}

Outcome StorageTable() {
  Stopwatch sw;
  int mismatches = 0;
  for (std::size_t i = 0; i < kDepths.size(); ++i) {
    if (keytree::WorstCaseStorageBytes({kDepths[i], 10, 0}) != kStorage[i]) ++mismatches;
  }
  const double ms = sw.ElapsedMs();
  // Materialized check on small trees: delete every odd epoch and weigh what is left.
  for (int depth = 1; depth <= 12; ++depth) {
    KeyStore store = KeyStore::FromSeed({depth, 10, 0}, SeedFrom(depth));
    for (Epoch e = 1; e < store.params().leaf_count(); e += 2) store = store.DeleteRange({e, e});
    if (store.size() * 32 != keytree::WorstCaseStorageBytes(store.params())) ++mismatches;
  }
  return {mismatches == 0 && ms < kTableRuntimeLimitMs, Fmt("5 cells, %.0f mismatches, %.3f ms", mismatches, ms)};
}

// ---- 3: depth-3 deletion example ----

Outcome DeletionExample() {
  const Key256 seed = SeedFrom(3);
  const TreeParams params{3, 10, 0};
  const KeyStore after = KeyStore::FromSeed(params, seed).DeleteRange({0, 0});
  // k_B = leaf 1, k_CD = (2,1), k_EFGH = (1,1).
  const std::vector<NodeId> expected = {{3, 1}, {2, 1}, {1, 1}};
  bool ok = after.node_ids() == expected;
  for (const NodeId& id : expected) {
    const auto keys = after.Delegate({id.first_epoch(3), id.last_epoch(3)});
    ok = ok && keys.size() == 1 && ToRaw(keys[0].key()) == testing::OracleNodeKey(ToRaw(seed), id.level, id.index);
  }
  return {ok, "retained " + std::to_string(after.size()) + " nodes"};
}

// ---- 4: random op sequences against the per-leaf model ----

Outcome OracleEquivalence() {
  Stopwatch sw;
  std::mt19937_64 rng(20260401);
  std::uint64_t mismatches = 0, ops = 0;
  for (int seq = 0; seq < kOracleSequences; ++seq) {
    const int depth = 1 + seq % kOracleMaxDepth;
    const std::uint64_t n = std::uint64_t{1} << depth;
    const TreeParams params{depth, 10, 0};
    const Key256 seed = SeedFrom(static_cast<std::uint64_t>(seq));
    const testing::RawKey raw_seed = ToRaw(seed);
    KeyStore store = KeyStore::FromSeed(params, seed);
    testing::LeafAccessModel model(depth, true);
    auto range = [&] {
      Epoch a = rng() % n, b = rng() % n;
      if (a > b) std::swap(a, b);
      return EpochRange{a, b};
    };
    for (int op = 0; op < kOpsPerSequence; ++op, ++ops) {
      switch (rng() % 4) {
        case 0: {
          const EpochRange r = range();
          store = store.DeleteRange(r);
          model.Delete(r.first, r.last);
          break;
        }
        case 1: {
          const Epoch j = rng() % n;
          store = store.AdvanceFrontier(j);
          model.Delete(0, j);
          break;
        }
        case 2: {
          const EpochRange r = range();
          if (model.CoversAll(r.first, r.last)) {
            KeyStore recipient = KeyStore::FromNodes(params, store.Delegate(r));
            if (recipient.DerivabilityBitmap() != testing::LeafAccessModel::Granted(depth, r.first, r.last).bits()) {
              ++mismatches;
            }
            // Continue half the sequences as the delegatee.
            if (rng() % 2 == 0) {
              store = std::move(recipient);
              model = testing::LeafAccessModel::Granted(depth, r.first, r.last);
            }
          } else {
            try {
              store.Delegate(r);
              ++mismatches;
            } catch (const Error& e) {
              if (e.code() != ErrorCode::kNoAccess) ++mismatches;
            }
          }
          break;
        }
        default: {
          const Epoch e = rng() % n;
          try {
            const auto key = store.Extract(e);
            if (!model.bits()[e] || ToRaw(key.key()) != testing::OracleNodeKey(raw_seed, depth, e)) ++mismatches;
          } catch (const Error& err) {
            if (model.bits()[e] || err.code() != ErrorCode::kNoAccess) ++mismatches;
          }
          break;
        }
      }
      if (store.DerivabilityBitmap() != model.bits()) ++mismatches;
    }
  }
  const double ms = sw.ElapsedMs();
  return {mismatches == 0 && ms < kOracleRuntimeLimitMs,
          Fmt("%.0f sequences, %.0f mismatches, %.0f ms", kOracleSequences, static_cast<double>(mismatches), ms)};
}

// ---- 5: cover minimality ----

Outcome CoverMinimality() {
  std::uint64_t ranges = 0, violations = 0;
  for (int depth = 1; depth <= kCoverMaxDepth; ++depth) {
    const std::uint64_t n = std::uint64_t{1} << depth;
    for (Epoch a = 0; a < n; ++a) {
      for (Epoch b = a; b < n; ++b, ++ranges) {
        const auto cover = keytree::CoverSet({depth, 10, 0}, {a, b});
        bool ok = static_cast<int>(cover.size()) == testing::BruteMinCover(depth, a, b);
        Epoch next = a;
        for (const auto& id : cover) {
          ok = ok && id.first_epoch(depth) == next;
          next = id.last_epoch(depth) + 1;
        }
        if (!ok || next != b + 1) ++violations;
      }
    }
  }
  // At depth 6 alone there are C(65, 2) = 2080 ranges.
  return {violations == 0, Fmt("%.0f ranges, %.0f violations", static_cast<double>(ranges),
                               static_cast<double>(violations))};
}

// ---- shared recorded stream: 3 one-second epochs at 10 fps ----

struct Recording {
  static constexpr std::uint64_t kFrames = 30;
  testing::HonestInit init = testing::InitHonestly(8, 1);
  storage::MemoryBlobStore store;

  Recording() {
    camera::CameraConfig config;
    config.frame_rate = 10;
    config.frame_bytes = 256;
    config.block_size = 5;
    config.retry_base_ms = 0;
    config.seed = 9;
    camera::CameraNode node(config, init.camera, store);
    node.Record(origin(), kFrames);
  }
  std::int64_t origin() const { return init.owner.store.params().origin_ms; }
  Epoch EpochAt(std::int64_t t) const { return keytree::EpochOf(init.owner.store.params(), t); }
};

client::StreamOptions RangeOptions() {
  client::StreamOptions o;
  o.retry_base_ms = 0;
  return o;
}

// ---- 6: end-to-end mediation ----

Outcome Mediation(Recording& rec) {
  std::uint64_t owner_rendered = 0, owner_other = 0;
  client::Stream(rec.init.owner.viewer(), rec.store, RangeOptions(), [&](const client::StreamEvent& ev) {
    if (ev.kind == client::EventKind::kRendered && camera::PayloadIntact(ev.frame->payload, 9)) {
      ++owner_rendered;
    } else {
      ++owner_other;
    }
  });

  transport::Link link;
  const EpochRange window{1, 1};
  const auto delegation = protocols::DelegatePairing(rec.init.owner, window, link);
  std::uint64_t leaks = 0, missing = 0, other = 0;
  std::map<Epoch, int> rendered, no_access;
  client::Stream(delegation.delegatee.viewer(), rec.store, RangeOptions(), [&](const client::StreamEvent& ev) {
    const Epoch e = rec.EpochAt(ev.timestamp_ms);
    if (ev.kind == client::EventKind::kRendered) {
      ++rendered[e];
      if (!window.Contains(e)) ++leaks;
    } else if (ev.kind == client::EventKind::kNoAccess) {
      ++no_access[e];
      if (window.Contains(e)) ++missing;
    } else {
      ++other;
    }
  });
  const bool exact = rendered[1] == 10 && no_access[0] == 10 && no_access[2] == 10;
  const bool ok = owner_rendered == Recording::kFrames && owner_other == 0 && leaks == 0 && missing == 0 &&
                  other == 0 && exact;
  return {ok, Fmt("owner %.0f/30, delegatee rendered %.0f in window, %.0f leaks", static_cast<double>(owner_rendered),
                  rendered[1], static_cast<double>(leaks))};
}

// ---- 7: tamper totality ----

Outcome TamperTotality(Recording& rec) {
  const auto metas = rec.store.List(rec.init.owner.camera_id, INT64_MIN, INT64_MAX);
  std::mt19937_64 rng(77);
  int silent = 0, wrong_code = 0;
  for (int i = 0; i < kTamperFlips; ++i) {
    const auto& meta = metas[rng() % metas.size()];
    const std::size_t offset = rng() % meta.size;
    const auto mask = static_cast<std::uint8_t>(1u << (rng() % 8));
    storage::Tamper(rec.store, meta.locator, offset, mask);
    client::StreamOptions o = RangeOptions();
    o.from_ms = meta.locator.start_ms;
    o.to_ms = meta.end_ms;
    int detected = 0;
    client::Stream(rec.init.owner.viewer(), rec.store, o, [&](const client::StreamEvent& ev) {
      if (ev.kind == client::EventKind::kRendered) return;
      if (ev.error == ErrorCode::kSignatureInvalid || ev.error == ErrorCode::kTagMismatch) {
        ++detected;
      } else {
        ++wrong_code;
      }
    });
    if (detected == 0) ++silent;
    storage::Tamper(rec.store, meta.locator, offset, mask);
  }
  const bool restored = client::Stream(rec.init.owner.viewer(), rec.store, RangeOptions()).rendered ==
                        Recording::kFrames;
  return {silent == 0 && wrong_code == 0 && restored,
          Fmt("%.0f flips, %.0f silent, %.0f other errors", kTamperFlips, silent, wrong_code)};
}

// ---- 8: pairing adversary suite ----

constexpr std::uint8_t T(protocols::MsgType t) { return static_cast<std::uint8_t>(t); }

struct AttackRun {
  std::unique_ptr<protocols::CameraInitSession> camera;
  std::unique_ptr<protocols::OwnerInitSession> owner;
  protocols::SessionRun run;
};

AttackRun RunInit(std::shared_ptr<transport::AdversaryScript> adversary, int slot) {
  AttackRun r;
  r.camera = std::make_unique<protocols::CameraInitSession>(
      testing::FreshCamera(slot), testing::CachedIdentity(protocols::Role::kCamera, slot));
  r.owner = std::make_unique<protocols::OwnerInitSession>(testing::InitOptions(8, 10, 1'000'000, slot));
  transport::Link link(std::move(adversary));
  r.run = protocols::RunOverLink(*r.camera, *r.owner, link);
  return r;
}

bool Aborted(const AttackRun& r) {
  return !r.run.completed() && !r.camera->secrets_accepted() && r.camera->phase() != protocols::Phase::kDone;
}

Outcome PairingAdversaries() {
  using protocols::MsgType;
  using transport::Action;
  using transport::AdversaryScript;
  using transport::ChannelKind;
  using transport::Rule;
  int completions = 0;
  std::string detail;
  auto record = [&](const char* name, const AttackRun& r) {
    if (!Aborted(r)) ++completions;
    detail += std::string(name) + "=" +
              (r.run.first_failure ? std::string(ErrorCodeName(*r.run.first_failure)) : std::string("none")) + " ";
  };

  // Step 2: attacker key advertised over radio.
  {
    const auto mallory = testing::CachedIdentity(protocols::Role::kFactory, 7).Public();
    ByteWriter w;
    w.Raw(Bytes(16, 0x42)).Raw(mallory.Encode());
    auto adv = std::make_shared<AdversaryScript>(
        0, std::vector<Rule>{{.channel = ChannelKind::kRadio, .msg_type = T(MsgType::kPresenterKey),
                              .action = Action::kReplace,
                              .data = transport::EncodeEnvelope(T(MsgType::kPresenterKey), w.bytes())}});
    record("step2", RunInit(adv, 0));
  }
  // Step 4: visual token never arrives.
  {
    auto adv = std::make_shared<AdversaryScript>(
        0, std::vector<Rule>{{.channel = ChannelKind::kVisual, .msg_type = T(MsgType::kScannerToken),
                              .action = Action::kDrop}});
    record("step4", RunInit(adv, 0));
  }
  // Step 5: proof response corrupted.
  {
    auto adv = std::make_shared<AdversaryScript>(
        0, std::vector<Rule>{{.msg_type = T(MsgType::kProofResponse), .action = Action::kCorrupt,
                              .offset = transport::kEnvelopeHeaderBytes + 14}});
    record("step5", RunInit(adv, 0));
  }
  // Step 7: secrets captured from an honest session, replayed into the next.
  {
    auto adv = std::make_shared<AdversaryScript>(
        0, std::vector<Rule>{{.msg_type = T(MsgType::kSecrets), .occurrence = 2, .action = Action::kReplay}});
    const AttackRun honest = RunInit(adv, 0);
    if (!honest.run.completed()) ++completions;  // the capture run must be genuine
    record("step7", RunInit(adv, 1));
  }
  return {completions == 0, detail + "completions=" + std::to_string(completions)};
}

// ---- 9: deletion irrecoverability ----

Outcome DeletionIrrecoverable() {
  Recording rec;
  const EpochRange deleted{1, 1};
  transport::Link internet;
  protocols::RunAdmin(rec.init.owner, rec.init.camera, protocols::AdminOp::kDeleteRange, deleted, internet,
                      rec.origin() + 5'000);
  transport::Link radio;
  const protocols::OwnerContext recovered =
      protocols::RecoverOverRadio(rec.init.camera, radio, rec.init.passphrase);
  const Bytes escrow = protocols::HandleEscrowRequest(rec.init.camera, protocols::EscrowRequestMessage());
  const protocols::OwnerContext from_escrow = protocols::RecoverAccess(escrow, rec.init.passphrase);

  // Every key anyone still holds.
  std::vector<keytree::NodeKey> held;
  for (const KeyStore* s : std::initializer_list<const KeyStore*>{&rec.init.owner.store, &recovered.store, &from_escrow.store,
                            &rec.init.camera.require().store}) {
    for (const auto& id : s->node_ids()) {
      const auto keys = s->Delegate({id.first_epoch(s->params().depth), id.last_epoch(s->params().depth)});
      held.insert(held.end(), keys.begin(), keys.end());
    }
  }

  int decrypted = 0, deleted_frames = 0, kept_ok = 0;
  for (const auto& meta : rec.store.List(rec.init.owner.camera_id, INT64_MIN, INT64_MAX)) {
    const auto block = stream::SignedBlock::Decode(rec.store.Get(meta.locator));
    for (const auto& frame : block.frames) {
      if (!deleted.Contains(rec.EpochAt(frame.timestamp_ms))) continue;
      ++deleted_frames;
      // Try each held key directly, and whatever leaf each store can derive.
      for (const auto& key : held) {
        try {
          stream::DecryptFrame(key, frame);
          ++decrypted;
        } catch (const Error&) {
        }
      }
    }
  }
  for (const protocols::OwnerContext* o : std::initializer_list<const protocols::OwnerContext*>{&rec.init.owner, &recovered, &from_escrow}) {
    client::Stream(o->viewer(), rec.store, RangeOptions(), [&](const client::StreamEvent& ev) {
      const bool in_deleted = deleted.Contains(rec.EpochAt(ev.timestamp_ms));
      if (ev.kind == client::EventKind::kRendered) {
        if (in_deleted) ++decrypted;
        else ++kept_ok;
      }
    });
  }
  const bool ok = decrypted == 0 && deleted_frames == 10 && kept_ok == 3 * 20;
  return {ok, Fmt("%.0f deleted frames, %.0f decryptions, %.0f held keys tried", deleted_frames, decrypted,
                  static_cast<double>(held.size()))};
}

// ---- 10: performance ----

Outcome Performance() {
  const TreeParams params{32, 10, 0};
  const KeyStore store = KeyStore::FromSeed(params, SeedFrom(10));
  const auto signer = stream::SigningKeypair::Generate();
  std::mt19937_64 rng(10);
  Bytes payload(kPerfFrameBytes);
  for (auto& b : payload) b = static_cast<std::uint8_t>(rng());

  RunningStat extract, encrypt, sign;
  std::vector<stream::EncryptedFrame> pending;
  for (int i = 0; i < kPerfFrames; ++i) {
    const std::int64_t t = i * 100;
    Stopwatch ks;
    // Worst case: every frame derives its leaf from the root.
    const auto key = store.Extract(keytree::EpochOf(params, t));
    extract.Add(ks.ElapsedMs());
    Stopwatch es;
    pending.push_back(stream::EncryptFrame(key, params, {payload, t}));
    encrypt.Add(es.ElapsedMs());
    if (pending.size() == kPerfBlockFrames || i + 1 == kPerfFrames) {
      Stopwatch ss;
      const auto block = stream::SignBlock(signer, {}, std::move(pending));
      sign.Add(ss.ElapsedMs());
      pending.clear();
    }
  }
  const bool ok = encrypt.mean() < kEncryptLimitMs && sign.mean() < kSignLimitMs && extract.mean() < kExtractLimitMs;
  return {ok, Fmt("encrypt %.3f ms, sign %.3f ms, extract %.4f ms", encrypt.mean(), sign.mean(), extract.mean())};
}

// ---- 11: frame dropping ----

Outcome FrameDropping() {
  double previous = -1;
  bool monotone = true;
  double worst_ratio = 0;
  for (int fps : {10, 20, 30}) {
    testing::HonestInit init = testing::InitHonestly(16, 10);
    storage::MemoryBlobStore store;
    camera::CameraConfig config;
    config.frame_rate = fps;
    config.frame_bytes = 128;
    config.block_size = 10;
    config.retry_base_ms = 0;
    camera::CameraNode node(config, init.camera, store);
    node.Record(init.owner.store.params().origin_ms, static_cast<std::uint64_t>(fps * kSimSeconds));
    const auto result = client::SimulateLive(init.owner.viewer(), store, client::LiveSimOptions{});
    worst_ratio = std::max(worst_ratio, result.steady_state_max_delay_ms() / client::kDefaultTargetDelayMs);
    if (result.drop_proportion() < previous) monotone = false;
    previous = result.drop_proportion();
  }

  // Spacing under injected constant delays, measured on the scheduler.
  double worst_gap = 0;
  for (int delay = 2100; delay <= 20'000; delay += 700) {
    client::DropScheduler s;
    const double p = client::DropFraction(delay, client::kDefaultTargetDelayMs);
    std::int64_t last = -1;
    for (std::int64_t i = 0; i < 5000; ++i) {
      if (s.Decide(delay, client::kDefaultTargetDelayMs)) continue;
      if (last >= 0) worst_gap = std::max(worst_gap, std::abs(static_cast<double>(i - last) - 1.0 / p));
      last = i;
    }
  }
  const bool ok = worst_ratio <= kDelayFactorLimit && monotone && previous > 0 && worst_gap <= kGapDeviationLimit;
  return {ok, Fmt("max delay %.2fx target, drop@30fps %.3f, gap deviation %.3f", worst_ratio, previous, worst_gap)};
}

}  // namespace
}  // namespace cactus

int main() {
  using cactus::Outcome;
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  std::unique_ptr<cactus::Recording> rec;
  auto shared = [&]() -> cactus::Recording& {
    if (!rec) rec = std::make_unique<cactus::Recording>();
    return *rec;
  };
  const std::vector<Criterion> criteria = {
      {"lifespan table", cactus::LifespanTable},
      {"storage table", cactus::StorageTable},
      {"depth-3 deletion example", cactus::DeletionExample},
      {"oracle equivalence", cactus::OracleEquivalence},
      {"cover minimality", cactus::CoverMinimality},
      {"end-to-end mediation", [&] { return cactus::Mediation(shared()); }},
      {"tamper totality", [&] { return cactus::TamperTotality(shared()); }},
      {"pairing adversary suite", cactus::PairingAdversaries},
      {"deletion irrecoverability", cactus::DeletionIrrecoverable},
      {"performance", cactus::Performance},
      {"frame dropping", cactus::FrameDropping},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s [%2zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
