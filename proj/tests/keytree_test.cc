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

#include "cactus/keytree.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "support/tree_oracle.h"

namespace cactus::keytree {
namespace {

using testing::OracleAllLeaves;
using testing::OracleNodeKey;
using testing::RawKey;

RawKey ToRaw(const Key256& k) {
  RawKey out;
  std::copy(k.data(), k.data() + 32, out.begin());
  return out;
}

Key256 SeedFrom(std::uint64_t s) {
  std::mt19937_64 rng(s);
  std::array<std::uint8_t, 32> raw;
  for (auto& b : raw) b = static_cast<std::uint8_t>(rng());
  return Key256(raw);
}

TreeParams Params(int depth, std::uint32_t epoch_seconds = 10, std::int64_t origin = 1'000'000) {
  return TreeParams{depth, epoch_seconds, origin};
}

TEST(TreeParamsTest, RejectsOutOfRangeValues) {
  EXPECT_THROW(Params(0).Validate(), Error);
  EXPECT_THROW(Params(41).Validate(), Error);
  EXPECT_THROW(Params(3, 0).Validate(), Error);
  EXPECT_NO_THROW(Params(40, 1).Validate());
  // 2^40 epochs of ~49 days each overflows int64 milliseconds.
  EXPECT_THROW(Params(40, 1u << 22).Validate(), Error);
}

TEST(DeriveChildTest, DeterministicAndSidesDiffer) {
  NodeKey root(NodeId::Root(), SeedFrom(1));
  NodeKey a = DeriveChild(root, Side::kLeft, 3);
  NodeKey b = DeriveChild(root, Side::kLeft, 3);
  NodeKey c = DeriveChild(root, Side::kRight, 3);
  EXPECT_TRUE(a.key() == b.key());
  EXPECT_FALSE(a.key() == c.key());
  EXPECT_EQ(a.id(), (NodeId{1, 0}));
  EXPECT_EQ(c.id(), (NodeId{1, 1}));
}

TEST(DeriveChildTest, LeafHasNoChildren) {
  NodeKey leaf(NodeId{3, 5}, SeedFrom(2));
  try {
    DeriveChild(leaf, Side::kLeft, 3);
    FAIL() << "expected ParentIsLeaf";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParentIsLeaf);
  }
}

TEST(DeriveChildTest, DepthThreeLeavesMatchHandRolledPaths) {
  const Key256 seed = SeedFrom(3);
  const auto oracle = OracleAllLeaves(ToRaw(seed), 3);
  KeyStore store = KeyStore::FromSeed(Params(3), seed);
  for (Epoch e = 0; e < 8; ++e) {
    EXPECT_EQ(ToRaw(store.Extract(e).key()), oracle[e]) << "epoch " << e;
  }
}

TEST(EpochOfTest, HalfOpenIntervals) {
  const TreeParams p = Params(8, 10, 5'000);
  EXPECT_EQ(EpochOf(p, 5'000), 0u);
  EXPECT_EQ(EpochOf(p, 5'000 + 9'999), 0u);
  EXPECT_EQ(EpochOf(p, 5'000 + 10'000), 1u);
  EXPECT_EQ(EpochOf(p, 5'000 + 35'000), 3u);
  EXPECT_EQ(EpochOf(p, 5'000 + 255 * 10'000 + 9'999), 255u);
}

TEST(EpochOfTest, OutsideLifespan) {
  const TreeParams p = Params(2, 10, 5'000);
  try {
    EpochOf(p, 4'999);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBeforeOrigin);
  }
  try {
    EpochOf(p, 5'000 + 40'000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBeyondLifespan);
  }
}

TEST(ExtractTest, RootCoversEverythingAndDeletedEpochIsGone) {
  KeyStore store = KeyStore::FromSeed(Params(4), SeedFrom(4));
  for (Epoch e = 0; e < 16; ++e) EXPECT_NO_THROW(store.Extract(e));
  KeyStore after = store.DeleteRange({0, 0});
  try {
    after.Extract(0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoAccess);
  }
}

TEST(ExtractTest, MatchesFullTreeOracleUpToDepthTwelve) {
  for (int depth = 1; depth <= 12; ++depth) {
    const Key256 seed = SeedFrom(100 + depth);
    const auto oracle = OracleAllLeaves(ToRaw(seed), depth);
    KeyStore store = KeyStore::FromSeed(Params(depth), seed);
    // After a deletion the remaining leaves must still come out identical.
    const Epoch mid = store.params().leaf_count() / 3;
    KeyStore sparse = store.DeleteRange({mid, mid});
    const std::uint64_t step = depth <= 9 ? 1 : 7;
    for (Epoch e = 0; e < store.params().leaf_count(); e += step) {
      ASSERT_EQ(ToRaw(store.Extract(e).key()), oracle[e]) << depth << "/" << e;
      if (e != mid) ASSERT_EQ(ToRaw(sparse.Extract(e).key()), oracle[e]);
    }
  }
}

TEST(CoverSetTest, FullRangeIsRoot) {
  EXPECT_EQ(CoverSet(Params(5), {0, 31}), std::vector<NodeId>{NodeId::Root()});
}

TEST(CoverSetTest, DepthThreeExamples) {
  EXPECT_EQ(CoverSet(Params(3), {2, 3}), (std::vector<NodeId>{{2, 1}}));
  EXPECT_EQ(CoverSet(Params(3), {1, 6}),
            (std::vector<NodeId>{{3, 1}, {2, 1}, {2, 2}, {3, 6}}));
}

// Every subset of the 15 nodes of a depth-3 tree that partitions [a, b]: the
// cover set must be the unique smallest one.
TEST(CoverSetTest, DepthThreeAgreesWithExhaustiveAntichainSearch) {
  std::vector<NodeId> all;
  for (int level = 0; level <= 3; ++level) {
    for (std::uint64_t i = 0; i < (1u << level); ++i) all.push_back({level, i});
  }
  for (Epoch a = 0; a < 8; ++a) {
    for (Epoch b = a; b < 8; ++b) {
      std::size_t best = 99;
      int best_count = 0;
      std::set<NodeId> best_set;
      for (std::uint32_t mask = 1; mask < (1u << all.size()); ++mask) {
        int hits[8] = {0};
        std::set<NodeId> chosen;
        for (std::size_t k = 0; k < all.size(); ++k) {
          if (!(mask >> k & 1)) continue;
          chosen.insert(all[k]);
          for (Epoch e = all[k].first_epoch(3); e <= all[k].last_epoch(3); ++e) ++hits[e];
        }
        bool exact = true;
        for (Epoch e = 0; e < 8; ++e) exact &= hits[e] == ((e >= a && e <= b) ? 1 : 0);
        if (!exact) continue;
        if (chosen.size() < best) {
          best = chosen.size();
          best_count = 1;
          best_set = chosen;
        } else if (chosen.size() == best) {
          ++best_count;
        }
      }
      auto cover = CoverSet(Params(3), {a, b});
      EXPECT_EQ(best_count, 1);
      EXPECT_EQ(std::set<NodeId>(cover.begin(), cover.end()), best_set) << a << ".." << b;
    }
  }
}

TEST(CoverSetTest, MinimalAgainstDynamicProgramUpToDepthSix) {
  for (int depth = 1; depth <= 6; ++depth) {
    const std::uint64_t n = std::uint64_t{1} << depth;
    for (Epoch a = 0; a < n; ++a) {
      for (Epoch b = a; b < n; ++b) {
        auto cover = CoverSet(Params(depth), {a, b});
        ASSERT_EQ(static_cast<int>(cover.size()), testing::BruteMinCover(depth, a, b));
        ASSERT_LE(cover.size(), static_cast<std::size_t>(2 * depth));
        // Sorted by start and partitions the range.
        Epoch next = a;
        for (const auto& id : cover) {
          ASSERT_EQ(id.first_epoch(depth), next);
          next = id.last_epoch(depth) + 1;
        }
        ASSERT_EQ(next, b + 1);
      }
    }
  }
}

TEST(CoverSetTest, DeepTreeBound) {
  const TreeParams p = Params(40, 1);
  auto cover = CoverSet(p, {1, p.leaf_count() - 2});
  EXPECT_EQ(cover.size(), 78u);
}

TEST(CoverSetTest, InvalidRanges) {
  EXPECT_THROW(CoverSet(Params(3), {4, 3}), Error);
  EXPECT_THROW(CoverSet(Params(3), {0, 8}), Error);
}

TEST(DelegateTest, SingleEpochIsOneLeaf) {
  KeyStore owner = KeyStore::FromSeed(Params(5), SeedFrom(5));
  auto keys = owner.Delegate({9, 9});
  ASSERT_EQ(keys.size(), 1u);
  EXPECT_EQ(keys[0].id(), (NodeId{5, 9}));
}

TEST(DelegateTest, RecipientDerivesExactlyTheRange) {
  const Key256 seed = SeedFrom(6);
  KeyStore owner = KeyStore::FromSeed(Params(3), seed);
  auto keys = owner.Delegate({2, 3});
  ASSERT_EQ(keys.size(), 1u);
  EXPECT_EQ(ToRaw(keys[0].key()), OracleNodeKey(ToRaw(seed), 2, 1));
  KeyStore recipient = KeyStore::FromNodes(owner.params(), keys);
  const auto oracle = OracleAllLeaves(ToRaw(seed), 3);
  for (Epoch e = 0; e < 8; ++e) {
    if (e == 2 || e == 3) {
      EXPECT_EQ(ToRaw(recipient.Extract(e).key()), oracle[e]);
    } else {
      EXPECT_FALSE(recipient.CanDerive(e));
      EXPECT_THROW(recipient.Extract(e), Error);
    }
  }
}

TEST(DelegateTest, RedelegationNeedsFullCoverage) {
  KeyStore owner = KeyStore::FromSeed(Params(3), SeedFrom(7));
  KeyStore delegatee = KeyStore::FromNodes(owner.params(), owner.Delegate({2, 3}));
  EXPECT_EQ(delegatee.Delegate({2, 2}).size(), 1u);
  try {
    delegatee.Delegate({1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoAccess);
  }
}

TEST(DelegateTest, CoverNodeHeldInPieces) {
  // Holder owns (3,2) and (3,3) but not their parent (2,1).
  KeyStore owner = KeyStore::FromSeed(Params(3), SeedFrom(8));
  KeyStore pieces = KeyStore::FromNodes(owner.params(), owner.Delegate({2, 2}));
  auto more = owner.Delegate({3, 3});
  auto nodes = pieces.Delegate({2, 2});
  nodes.insert(nodes.end(), more.begin(), more.end());
  KeyStore split = KeyStore::FromNodes(owner.params(), nodes);
  auto keys = split.Delegate({2, 3});
  ASSERT_EQ(keys.size(), 2u);
  KeyStore recipient = KeyStore::FromNodes(owner.params(), keys);
  EXPECT_TRUE(recipient.Extract(3).key() == owner.Extract(3).key());
}

TEST(DeleteRangeTest, DeletingLeafAKeepsBCdEfgh) {
  const Key256 seed = SeedFrom(9);
  KeyStore store = KeyStore::FromSeed(Params(3), seed);
  KeyStore after = store.DeleteRange({0, 0});
  EXPECT_EQ(after.node_ids(), (std::vector<NodeId>{{3, 1}, {2, 1}, {1, 1}}));
  // The retained keys are the genuine k_B, k_CD, k_EFGH.
  const auto ids = after.node_ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    KeyStore single = KeyStore::FromNodes(after.params(), after.Delegate(
        {ids[i].first_epoch(3), ids[i].last_epoch(3)}));
    ASSERT_EQ(single.size(), 1u);
  }
  EXPECT_EQ(ToRaw(after.Delegate({2, 3})[0].key()), OracleNodeKey(ToRaw(seed), 2, 1));
  EXPECT_EQ(ToRaw(after.Delegate({4, 7})[0].key()), OracleNodeKey(ToRaw(seed), 1, 1));
}

TEST(DeleteRangeTest, FullRangeEmptiesStore) {
  KeyStore store = KeyStore::FromSeed(Params(6), SeedFrom(10));
  EXPECT_TRUE(store.DeleteRange({0, 63}).empty());
}

TEST(DeleteRangeTest, RandomRangesMatchLeafModel) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int depth = 1 + static_cast<int>(rng() % 12);
    const std::uint64_t n = std::uint64_t{1} << depth;
    KeyStore store = KeyStore::FromSeed(Params(depth), SeedFrom(trial));
    testing::LeafAccessModel model(depth, true);
    for (int op = 0; op < 4; ++op) {
      Epoch a = rng() % n, b = rng() % n;
      if (a > b) std::swap(a, b);
      const std::size_t before = store.size();
      store = store.DeleteRange({a, b});
      model.Delete(a, b);
      ASSERT_LE(store.size(), before + 2 * static_cast<std::size_t>(depth));
      ASSERT_EQ(store.DerivabilityBitmap(), model.bits());
    }
  }
}

TEST(AdvanceFrontierTest, AfterEpochZero) {
  KeyStore store = KeyStore::FromSeed(Params(3), SeedFrom(12));
  EXPECT_EQ(store.AdvanceFrontier(0).node_ids(),
            (std::vector<NodeId>{{3, 1}, {2, 1}, {1, 1}}));
  EXPECT_TRUE(store.AdvanceFrontier(7).empty());
}

TEST(AdvanceFrontierTest, ExhaustiveSweepKeepsAtMostDepthNodes) {
  for (int depth = 1; depth <= 12; ++depth) {
    KeyStore store = KeyStore::FromSeed(Params(depth), SeedFrom(200 + depth));
    const std::uint64_t n = std::uint64_t{1} << depth;
    for (Epoch j = 0; j < n; ++j) {
      store = store.AdvanceFrontier(j);
      ASSERT_LE(store.size(), static_cast<std::size_t>(depth));
      auto bits = store.DerivabilityBitmap();
      for (Epoch e = 0; e < n; ++e) ASSERT_EQ(bits[e], e > j) << depth << " " << j << " " << e;
    }
  }
}

TEST(AdvanceFrontierTest, RetiredKeysAreReleased) {
  const std::int64_t baseline = NodeKey::LiveCount();
  {
    KeyStore store = KeyStore::FromSeed(Params(10), SeedFrom(13));
    for (Epoch j = 0; j < 300; ++j) {
      store = store.AdvanceFrontier(j);
      ASSERT_LE(NodeKey::LiveCount() - baseline, 10);
    }
  }
  EXPECT_EQ(NodeKey::LiveCount(), baseline);
}

TEST(LifespanTest, TableValues) {
  EXPECT_EQ(Lifespan(Params(1, 1)).count(), 2);
  EXPECT_EQ(std::llround(LifespanYears(Params(32, 10))), 1362);
  EXPECT_EQ(std::llround(LifespanYears(Params(24, 60))), 32);
}

TEST(WorstCaseStorageTest, ClosedForm) {
  EXPECT_EQ(WorstCaseStorageBytes(Params(1)), 32u);
  EXPECT_EQ(WorstCaseStorageBytes(Params(24)), std::uint64_t{1} << 28);
  EXPECT_EQ(WorstCaseStorageBytes(Params(32)), std::uint64_t{1} << 36);
}

TEST(SerializeTest, RoundTripPreservesKeysAndParams) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const int depth = 1 + static_cast<int>(rng() % 20);
    KeyStore store = KeyStore::FromSeed(Params(depth, 1 + rng() % 100, rng() % 1'000'000'000), SeedFrom(trial));
    const std::uint64_t n = store.params().leaf_count();
    Epoch a = rng() % n, b = rng() % n;
    if (a > b) std::swap(a, b);
    store = store.DeleteRange({a, b});
    auto bytes = store.Serialize();
    KeyStore back = KeyStore::Deserialize(bytes, store.params());
    ASSERT_EQ(back.params(), store.params());
    ASSERT_EQ(back.node_ids(), store.node_ids());
    auto again = back.Serialize();
    ASSERT_TRUE(std::equal(bytes.begin(), bytes.end(), again.begin(), again.end()));
  }
}

TEST(SerializeTest, LayoutIsLittleEndian) {
  KeyStore store = KeyStore::FromSeed(TreeParams{3, 10, 0x0102}, SeedFrom(15));
  auto bytes = store.Serialize();
  ASSERT_EQ(bytes.size(), 4u + 1 + 4 + 8 + 4 + 1 + 8 + 32);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "CKT1");
  EXPECT_EQ(bytes[4], 3);
  EXPECT_EQ(bytes[5], 10);
  EXPECT_EQ(bytes[9], 0x02);
  EXPECT_EQ(bytes[10], 0x01);
  EXPECT_EQ(bytes[17], 1);  // node count
}

TEST(SerializeTest, RejectsBadInput) {
  KeyStore store = KeyStore::FromSeed(Params(3), SeedFrom(16));
  auto good = store.Serialize();
  auto expect_code = [](ByteView b, ErrorCode code) {
    try {
      KeyStore::Deserialize(b);
      FAIL() << "accepted malformed store";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), code) << e.what();
    }
  };
  Bytes v2(good.begin(), good.end());
  v2[3] = '2';
  expect_code(v2, ErrorCode::kVersionMismatch);
  Bytes bad_magic(good.begin(), good.end());
  bad_magic[0] = 'X';
  expect_code(bad_magic, ErrorCode::kMalformedStore);
  Bytes truncated(good.begin(), good.end() - 1);
  expect_code(truncated, ErrorCode::kMalformedStore);
  Bytes bad_level(good.begin(), good.end());
  bad_level[21] = 9;  // level beyond depth
  expect_code(bad_level, ErrorCode::kMalformedStore);
  EXPECT_THROW(KeyStore::Deserialize(good, Params(4)), Error);
}

TEST(KeyStoreTest, OverlappingNodesRejected) {
  KeyStore owner = KeyStore::FromSeed(Params(3), SeedFrom(17));
  auto a = owner.Delegate({0, 3});
  auto b = owner.Delegate({2, 2});
  a.insert(a.end(), b.begin(), b.end());
  EXPECT_THROW(KeyStore::FromNodes(owner.params(), a), Error);
}

}  // namespace
}  // namespace cactus::keytree
