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

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "cactus/crypto.h"

namespace cactus::keytree {
namespace {

constexpr std::array<std::uint8_t, 32> MakeSalt() {
  constexpr char kLabel[] = "cactus-keytree-v1";
  std::array<std::uint8_t, 32> salt{};
  for (std::size_t i = 0; i + 1 < sizeof(kLabel); ++i) {
    salt[i] = static_cast<std::uint8_t>(kLabel[i]);
  }
  return salt;
}

constexpr auto kKdfSalt = MakeSalt();
constexpr char kStoreMagic[4] = {'C', 'K', 'T', '1'};

}  // namespace

void TreeParams::Validate() const {
  if (depth < 1 || depth > kMaxDepth) {
    Fail(ErrorCode::kInvalidParams, "depth must be in [1, 40], got " + std::to_string(depth));
  }
  if (epoch_seconds < 1) Fail(ErrorCode::kInvalidParams, "epoch_seconds must be >= 1");
  if (origin_ms < 0) Fail(ErrorCode::kInvalidParams, "origin must be non-negative");
  // Whole lifespan in milliseconds, offset by the origin, must fit in int64.
  const std::uint64_t max_ms = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
  const std::uint64_t per_epoch = std::uint64_t{epoch_seconds} * 1000;
  if (leaf_count() > (max_ms - static_cast<std::uint64_t>(origin_ms)) / per_epoch) {
    Fail(ErrorCode::kInvalidParams, "lifespan overflows the millisecond clock");
  }
}

std::int64_t TreeParams::EpochStartMs(Epoch epoch) const {
  return origin_ms + static_cast<std::int64_t>(epoch) * epoch_ms();
}

void EpochRange::Validate(const TreeParams& params) const {
  if (first > last || last >= params.leaf_count()) {
    Fail(ErrorCode::kRangeInvalid, "[" + std::to_string(first) + ", " + std::to_string(last) +
                                       "] outside tree of " +
                                       std::to_string(params.leaf_count()) + " epochs");
  }
}

bool NodeId::IsAncestorOrSelf(const NodeId& other) const {
  if (other.level < level) return false;
  return (other.index >> (other.level - level)) == index;
}

bool NodeId::valid(int depth) const {
  return level >= 0 && level <= depth && index < (std::uint64_t{1} << level);
}

std::atomic<std::int64_t> NodeKey::live_{0};

NodeKey::NodeKey(NodeId id, const Key256& key) : id_(id), key_(key) { ++live_; }

NodeKey::NodeKey(const NodeKey& other) : id_(other.id_), key_(other.key_) { ++live_; }

NodeKey::~NodeKey() { --live_; }

std::int64_t NodeKey::LiveCount() { return live_.load(); }

NodeKey DeriveChild(const NodeKey& parent, Side side, int depth) {
  if (parent.id().level >= depth) {
    Fail(ErrorCode::kParentIsLeaf, "node at level " + std::to_string(parent.id().level));
  }
  Key256 input = parent.key();
  if (side == Side::kRight) input[kKeyBytes - 1] ^= 0x01;
  Key256 child;
  crypto::HkdfSha256(input.span(), kKdfSalt, {}, child.span());
  return NodeKey(parent.id().Child(side), child);
}

NodeKey DeriveDescendant(const NodeKey& ancestor, const NodeId& target, int depth) {
  if (!ancestor.id().IsAncestorOrSelf(target) || target.level > depth) {
    Fail(ErrorCode::kNoAccess, "target outside subtree");
  }
  NodeKey current = ancestor;
  for (int level = ancestor.id().level + 1; level <= target.level; ++level) {
    const bool right = (target.index >> (target.level - level)) & 1;
    current = DeriveChild(current, right ? Side::kRight : Side::kLeft, depth);
  }
  return current;
}

Epoch EpochOf(const TreeParams& params, std::int64_t t_ms) {
  if (t_ms < params.origin_ms) {
    Fail(ErrorCode::kBeforeOrigin, std::to_string(t_ms) + " < t_0 " + std::to_string(params.origin_ms));
  }
  const std::uint64_t offset = static_cast<std::uint64_t>(t_ms - params.origin_ms);
  const Epoch epoch = offset / static_cast<std::uint64_t>(params.epoch_ms());
  if (epoch >= params.leaf_count()) {
    Fail(ErrorCode::kBeyondLifespan, "timestamp " + std::to_string(t_ms) + " past end of tree");
  }
  return epoch;
}

namespace {

void CoverInto(const NodeId& node, int depth, const EpochRange& range, std::vector<NodeId>& out) {
  const Epoch start = node.first_epoch(depth);
  const Epoch end = node.last_epoch(depth);
  if (end < range.first || start > range.last) return;
  if (range.first <= start && end <= range.last) {
    out.push_back(node);
    return;
  }
  CoverInto(node.Child(Side::kLeft), depth, range, out);
  CoverInto(node.Child(Side::kRight), depth, range, out);
}

}  // namespace

std::vector<NodeId> CoverSet(const TreeParams& params, const EpochRange& range) {
  range.Validate(params);
  std::vector<NodeId> out;
  CoverInto(NodeId::Root(), params.depth, range, out);
  return out;
}

std::chrono::seconds Lifespan(const TreeParams& params) {
  params.Validate();
  return std::chrono::seconds(static_cast<std::int64_t>(params.leaf_count()) *
                              params.epoch_seconds);
}

double LifespanYears(const TreeParams& params) {
  return static_cast<double>(Lifespan(params).count()) / static_cast<double>(kSecondsPerYear);
}

std::uint64_t WorstCaseStorageBytes(const TreeParams& params) {
  params.Validate();
  return (params.leaf_count() / 2) * kKeyBytes;
}

// ---- KeyStore ----

KeyStore::KeyStore(const TreeParams& params, std::vector<NodePtr> nodes)
    : params_(params), nodes_(std::move(nodes)) {
  CheckAntichain();
}

KeyStore KeyStore::FromSeed(const TreeParams& params, const Key256& seed) {
  params.Validate();
  std::vector<NodePtr> nodes;
  nodes.push_back(std::make_shared<const NodeKey>(NodeId::Root(), seed));
  return KeyStore(params, std::move(nodes));
}

KeyStore KeyStore::FromNodes(const TreeParams& params, std::vector<NodeKey> nodes) {
  params.Validate();
  for (const auto& n : nodes) {
    if (!n.id().valid(params.depth)) Fail(ErrorCode::kMalformedStore, "node outside tree");
  }
  std::sort(nodes.begin(), nodes.end(), [&](const NodeKey& a, const NodeKey& b) {
    return a.id().first_epoch(params.depth) < b.id().first_epoch(params.depth);
  });
  std::vector<NodePtr> ptrs;
  ptrs.reserve(nodes.size());
  for (auto& n : nodes) ptrs.push_back(std::make_shared<const NodeKey>(std::move(n)));
  return KeyStore(params, std::move(ptrs));
}

KeyStore KeyStore::Empty(const TreeParams& params) {
  params.Validate();
  return KeyStore(params, {});
}

void KeyStore::CheckAntichain() const {
  // Sorted, non-overlapping leaf intervals <=> no node is an ancestor of another.
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (nodes_[i]->id().first_epoch(params_.depth) <= nodes_[i - 1]->id().last_epoch(params_.depth)) {
      Fail(ErrorCode::kMalformedStore, "overlapping nodes in key store");
    }
  }
}

const NodeKey* KeyStore::FindCovering(Epoch epoch) const {
  // Last node whose first epoch is <= epoch.
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), epoch,
                             [&](Epoch e, const NodePtr& n) { return e < n->id().first_epoch(params_.depth); });
  if (it == nodes_.begin()) return nullptr;
  const NodeKey* candidate = std::prev(it)->get();
  return candidate->id().covers(params_.depth, epoch) ? candidate : nullptr;
}

const NodeKey* KeyStore::FindAncestorOf(const NodeId& id) const {
  const NodeKey* n = FindCovering(id.first_epoch(params_.depth));
  return (n != nullptr && n->id().IsAncestorOrSelf(id)) ? n : nullptr;
}

bool KeyStore::CanDerive(Epoch epoch) const {
  return epoch < params_.leaf_count() && FindCovering(epoch) != nullptr;
}

NodeKey KeyStore::Extract(Epoch epoch) const {
  if (epoch >= params_.leaf_count()) Fail(ErrorCode::kRangeInvalid, "epoch outside tree");
  const NodeKey* holder = FindCovering(epoch);
  if (holder == nullptr) Fail(ErrorCode::kNoAccess, "epoch " + std::to_string(epoch));
  return DeriveDescendant(*holder, NodeId::Leaf(params_.depth, epoch), params_.depth);
}

std::vector<NodeId> KeyStore::node_ids() const {
  std::vector<NodeId> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back(n->id());
  return out;
}

std::vector<bool> KeyStore::DerivabilityBitmap() const {
  if (params_.depth > 24) Fail(ErrorCode::kInvalidArgument, "bitmap only for depth <= 24");
  std::vector<bool> bits(params_.leaf_count(), false);
  for (const auto& n : nodes_) {
    for (Epoch e = n->id().first_epoch(params_.depth); e <= n->id().last_epoch(params_.depth); ++e) {
      bits[e] = true;
    }
  }
  return bits;
}

void KeyStore::CollectDelegation(const NodeId& id, std::vector<NodeKey>& out) const {
  if (const NodeKey* holder = FindAncestorOf(id)) {
    out.push_back(DeriveDescendant(*holder, id, params_.depth));
    return;
  }
  if (id.level == params_.depth) Fail(ErrorCode::kNoAccess, "epoch " + std::to_string(id.index));
  // The store may hold this subtree only in pieces.
  CollectDelegation(id.Child(Side::kLeft), out);
  CollectDelegation(id.Child(Side::kRight), out);
}

std::vector<NodeKey> KeyStore::Delegate(const EpochRange& range) const {
  std::vector<NodeKey> out;
  for (const NodeId& id : CoverSet(params_, range)) CollectDelegation(id, out);
  return out;
}

KeyStore KeyStore::DeleteRange(const EpochRange& range) const {
  range.Validate(params_);
  const int depth = params_.depth;
  std::vector<NodePtr> kept;
  for (const auto& node : nodes_) {
    const Epoch start = node->id().first_epoch(depth);
    const Epoch end = node->id().last_epoch(depth);
    if (end < range.first || start > range.last) {
      kept.push_back(node);
      continue;
    }
    // Replace the overlapping node by the cover of what survives around the
    // deleted range; the node itself is released here.
    std::array<std::optional<EpochRange>, 2> pieces;
    if (start < range.first) pieces[0] = EpochRange{start, range.first - 1};
    if (end > range.last) pieces[1] = EpochRange{range.last + 1, end};
    for (const auto& piece : pieces) {
      if (!piece) continue;
      for (const NodeId& id : CoverSet(params_, *piece)) {
        kept.push_back(std::make_shared<const NodeKey>(DeriveDescendant(*node, id, depth)));
      }
    }
  }
  return KeyStore(params_, std::move(kept));
}

KeyStore KeyStore::AdvanceFrontier(Epoch last_finished) const {
  if (last_finished >= params_.leaf_count() - 1) return Empty(params_);
  return DeleteRange({0, last_finished});
}

SecureBytes KeyStore::Serialize() const {
  ByteWriter w;
  w.Raw(ByteView(reinterpret_cast<const std::uint8_t*>(kStoreMagic), 4))
      .U8(static_cast<std::uint8_t>(params_.depth))
      .U32(params_.epoch_seconds)
      .U64(static_cast<std::uint64_t>(params_.origin_ms))
      .U32(static_cast<std::uint32_t>(nodes_.size()));
  for (const auto& n : nodes_) {
    w.U8(static_cast<std::uint8_t>(n->id().level)).U64(n->id().index).Raw(n->key().span());
  }
  Bytes plain = std::move(w).bytes();
  SecureBytes out(plain.begin(), plain.end());
  SecureZero(plain.data(), plain.size());
  return out;
}

KeyStore KeyStore::Deserialize(ByteView bytes, const std::optional<TreeParams>& expected) {
  ByteReader r(bytes, ErrorCode::kMalformedStore);
  auto magic = r.Raw(4);
  if (!std::equal(magic.begin(), magic.begin() + 3, kStoreMagic)) {
    Fail(ErrorCode::kMalformedStore, "bad magic");
  }
  if (magic[3] != static_cast<std::uint8_t>(kStoreMagic[3])) {
    Fail(ErrorCode::kVersionMismatch, std::string("key store version ") + static_cast<char>(magic[3]));
  }
  TreeParams params;
  params.depth = r.U8();
  params.epoch_seconds = r.U32();
  params.origin_ms = static_cast<std::int64_t>(r.U64());
  try {
    params.Validate();
  } catch (const Error& e) {
    Fail(ErrorCode::kMalformedStore, e.what());
  }
  if (expected && !(*expected == params)) Fail(ErrorCode::kMalformedStore, "tree parameters differ");
  const std::uint32_t count = r.U32();
  if (count > r.remaining() / (1 + 8 + kKeyBytes)) r.Malformed("node count exceeds payload");
  std::vector<NodeKey> nodes;
  nodes.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NodeId id;
    id.level = r.U8();
    id.index = r.U64();
    Key256 key(r.Raw(kKeyBytes));
    nodes.emplace_back(id, key);
  }
  r.ExpectEnd();
  return FromNodes(params, std::move(nodes));
}

}  // namespace cactus::keytree
