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

#ifndef CACTUS_KEYTREE_H_
#define CACTUS_KEYTREE_H_

// Binary key-rotation tree. Leaves are per-epoch AES-256 keys; every node key
// is derived one-way from its parent, so holding a node grants exactly the
// epochs underneath it.
//
// Node addressing: node (level, index) sits `level` edges below the root and
// covers leaves [index * 2^(depth-level), (index+1) * 2^(depth-level)). The
// leaf for epoch j is reached from the root by reading the `depth` bits of j
// from most significant to least significant, 0 = left, 1 = right.

#include <atomic>
#include <chrono>
#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "cactus/bytes.h"

namespace cactus::keytree {

inline constexpr int kMaxDepth = 40;
inline constexpr std::size_t kKeyBytes = 32;
inline constexpr std::int64_t kSecondsPerYear = 365LL * 24 * 3600;

using Epoch = std::uint64_t;

struct TreeParams {
  int depth = 32;
  std::uint32_t epoch_seconds = 10;
  std::int64_t origin_ms = 0;  // t_0, milliseconds since the Unix epoch (UTC)

  // Throws kInvalidParams.
  void Validate() const;

  std::uint64_t leaf_count() const { return std::uint64_t{1} << depth; }
  std::int64_t epoch_ms() const { return std::int64_t{epoch_seconds} * 1000; }
  // t_j, the start of epoch j.
  std::int64_t EpochStartMs(Epoch epoch) const;

  friend bool operator==(const TreeParams&, const TreeParams&) = default;
};

// Inclusive range of epochs [first, last].
struct EpochRange {
  Epoch first = 0;
  Epoch last = 0;

  // Throws kRangeInvalid unless first <= last < leaf_count.
  void Validate(const TreeParams& params) const;
  std::uint64_t size() const { return last - first + 1; }
  bool Contains(Epoch e) const { return e >= first && e <= last; }

  friend bool operator==(const EpochRange&, const EpochRange&) = default;
};

enum class Side { kLeft, kRight };

struct NodeId {
  int level = 0;
  std::uint64_t index = 0;

  static NodeId Root() { return {0, 0}; }
  static NodeId Leaf(int depth, Epoch epoch) { return {depth, epoch}; }

  Epoch first_epoch(int depth) const { return index << (depth - level); }
  Epoch last_epoch(int depth) const {
    return first_epoch(depth) + (std::uint64_t{1} << (depth - level)) - 1;
  }
  bool covers(int depth, Epoch e) const {
    return e >= first_epoch(depth) && e <= last_epoch(depth);
  }
  NodeId Child(Side side) const {
    return {level + 1, 2 * index + (side == Side::kRight ? 1 : 0)};
  }
  // True when `other` is this node or lies in its subtree.
  bool IsAncestorOrSelf(const NodeId& other) const;
  bool valid(int depth) const;

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

// A tree position together with its 256-bit key. Key bytes are wiped when the
// object is destroyed; LiveCount() exposes how many exist for erase audits.
class NodeKey {
 public:
  NodeKey(NodeId id, const Key256& key);
  NodeKey(const NodeKey& other);
  NodeKey& operator=(const NodeKey& other) = default;
  ~NodeKey();

  const NodeId& id() const { return id_; }
  const Key256& key() const { return key_; }

  static std::int64_t LiveCount();

 private:
  NodeId id_;
  Key256 key_;
  static std::atomic<std::int64_t> live_;
};

// k_left = HKDF(k_parent), k_right = HKDF(k_parent with its last byte ^ 0x01).
// HKDF-SHA-256, salt "cactus-keytree-v1" zero-padded to 32 bytes, empty info.
// Throws kParentIsLeaf when parent is at `depth`.
NodeKey DeriveChild(const NodeKey& parent, Side side, int depth);

// Walks DeriveChild from `ancestor` down to `target`. Throws kNoAccess if
// target is not in ancestor's subtree.
NodeKey DeriveDescendant(const NodeKey& ancestor, const NodeId& target, int depth);

// floor((t - t_0) / epoch length). Throws kBeforeOrigin / kBeyondLifespan.
Epoch EpochOf(const TreeParams& params, std::int64_t t_ms);

// Minimal set of nodes whose leaf intervals partition `range` exactly, sorted
// by first covered epoch. At most 2 * depth entries.
std::vector<NodeId> CoverSet(const TreeParams& params, const EpochRange& range);

std::chrono::seconds Lifespan(const TreeParams& params);
double LifespanYears(const TreeParams& params);  // 365-day years

// Bytes needed when every other epoch has been deleted: 2^(depth-1) leaves of
// 32 bytes each.
std::uint64_t WorstCaseStorageBytes(const TreeParams& params);

// Source of per-epoch leaf keys. KeyStore is the only production
// implementation; tests wrap it to observe extraction.
class KeyProvider {
 public:
  virtual ~KeyProvider() = default;
  virtual const TreeParams& params() const = 0;
  // Throws kNoAccess when the epoch is not derivable.
  virtual NodeKey Extract(Epoch epoch) const = 0;
};

// A party's view of the tree: a sparse antichain of node keys. Values are
// immutable; every mutation returns a new store. Copies share node keys, which
// are wiped when the last holder goes away.
class KeyStore : public KeyProvider {
 public:
  // Empty store over default parameters.
  KeyStore() = default;

  static KeyStore FromSeed(const TreeParams& params, const Key256& seed);
  // Throws kMalformedStore if the nodes overlap or fall outside the tree.
  static KeyStore FromNodes(const TreeParams& params, std::vector<NodeKey> nodes);
  static KeyStore Empty(const TreeParams& params);

  const TreeParams& params() const override { return params_; }
  NodeKey Extract(Epoch epoch) const override;

  bool CanDerive(Epoch epoch) const;
  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }
  std::vector<NodeId> node_ids() const;

  // One flag per leaf. Only for depth <= 24.
  std::vector<bool> DerivabilityBitmap() const;

  // Keys a recipient needs to derive exactly `range`. Normally the nodes of
  // CoverSet(range); if this store holds a cover node only in pieces, those
  // pieces are returned instead. Throws kNoAccess on any uncovered epoch.
  std::vector<NodeKey> Delegate(const EpochRange& range) const;

  // Store that derives nothing in `range` and everything else it could
  // derive before.
  KeyStore DeleteRange(const EpochRange& range) const;

  // Drops every epoch up to and including `last_finished`.
  KeyStore AdvanceFrontier(Epoch last_finished) const;

  // Key-store file format, see README.
  SecureBytes Serialize() const;
  // Throws kMalformedStore or kVersionMismatch; if `expected` is given the
  // embedded parameters must match it.
  static KeyStore Deserialize(ByteView bytes,
                              const std::optional<TreeParams>& expected = std::nullopt);

 private:
  using NodePtr = std::shared_ptr<const NodeKey>;

  KeyStore(const TreeParams& params, std::vector<NodePtr> nodes);
  const NodeKey* FindCovering(Epoch epoch) const;
  const NodeKey* FindAncestorOf(const NodeId& id) const;
  void CollectDelegation(const NodeId& id, std::vector<NodeKey>& out) const;
  void CheckAntichain() const;

  TreeParams params_;
  std::vector<NodePtr> nodes_;  // sorted by first covered epoch
};

}  // namespace cactus::keytree

#endif  // CACTUS_KEYTREE_H_
