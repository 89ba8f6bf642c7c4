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

#ifndef CACTUS_CAMERA_H_
#define CACTUS_CAMERA_H_

// The recording node: synthetic frames flow through a capture/encrypt, sign
// and upload pipeline, rotating the camera's key frontier at each epoch
// boundary.

#include <atomic>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cactus/config.h"
#include "cactus/contexts.h"
#include "cactus/stats.h"
#include "cactus/storage.h"
#include "cactus/streamcrypto.h"

namespace cactus::camera {

using protocols::CameraContext;

struct CameraConfig {
  int frame_rate = 10;
  std::size_t frame_bytes = 4096;
  int depth = 32;          // tree shape used at initialization
  int epoch_seconds = 10;  // tree shape used at initialization
  std::size_t block_size = stream::kDefaultBlockSize;
  std::string storage_url = "memory:";
  std::string data_dir = "cactus-state";
  std::uint64_t seed = 1;  // payload filler

  // Close blocks at epoch boundaries as well as every block_size frames.
  // When false a block may straddle two epochs.
  bool align_blocks_to_epochs = true;
  // Sleep so frames are produced at frame_rate instead of as fast as possible.
  bool realtime = false;

  int upload_attempts = 5;
  int retry_base_ms = 50;  // doubled after each failed attempt
  std::size_t buffer_blocks = 1000;
  std::size_t queue_depth = 64;

  // Throws kInvalidArgument.
  void Validate() const;
  // Non-fatal advice, e.g. blocks longer than an epoch.
  std::vector<std::string> Warnings() const;

  std::int64_t frame_interval_ms() const { return 1000 / frame_rate; }

  // Recognised keys: frame_rate, frame_bytes, depth, epoch_seconds,
  // block_size, storage_url, data_dir, seed. Unknown keys are rejected.
  static CameraConfig FromKeyValues(const KeyValues& kv, CameraConfig base);
  static CameraConfig FromKeyValues(const KeyValues& kv) { return FromKeyValues(kv, CameraConfig()); }
};

inline constexpr std::size_t kPayloadPrefixBytes = 32;

// camera_id | u64 counter | i64 timestamp, then seeded filler.
struct PayloadHeader {
  stream::CameraId camera_id{};
  std::uint64_t counter = 0;
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const PayloadHeader&, const PayloadHeader&) = default;
};

Bytes MakePayload(const PayloadHeader& header, std::size_t size, std::uint64_t seed);
// Throws kInvalidArgument if the payload is shorter than the prefix.
PayloadHeader ParsePayload(ByteView payload);
// True if the filler after the prefix is what MakePayload would write.
bool PayloadIntact(ByteView payload, std::uint64_t seed);

struct PipelineCounters {
  std::uint64_t frames_captured = 0;
  std::uint64_t blocks_signed = 0;
  std::uint64_t blocks_uploaded = 0;
  std::uint64_t upload_failures = 0;  // failed attempts, not blocks
  std::uint64_t blocks_dropped = 0;   // evicted from a full buffer
  std::uint64_t rotations = 0;
  std::size_t blocks_pending = 0;     // buffered, not yet uploaded
};

// Stage names: key_extraction, frame_encryption, signature, upload.
StageStats MakePipelineStats();

class CameraNode {
 public:
  // `camera` and `store` must outlive the node.
  CameraNode(CameraConfig config, CameraContext& camera, storage::BlobStore& store);

  // Records `frames` frames stamped start_ms + i * 1000 / frame_rate. The
  // payload counter continues across calls. Blocks until every block is
  // signed and either uploaded or buffered. Throws kNotInitialized,
  // kBeyondLifespan, kBeforeOrigin or kNoAccess when the pipeline halts;
  // blocks finished before the halt are still uploaded.
  PipelineCounters Record(std::int64_t start_ms, std::uint64_t frames);

  // Retries buffered uploads once. Returns how many remain.
  std::size_t Flush();

  // Admin control path. Holds the camera state lock, so a concurrent Record
  // pauses between frames while the request is applied.
  Bytes HandleAdmin(ByteView wire, std::int64_t now_ms);

  PipelineCounters counters() const;
  const StageStats& stats() const { return stats_; }
  // Payload counter the next captured frame will carry.
  std::uint64_t next_counter() const { return counter_; }
  // Continues numbering from an earlier process.
  void set_next_counter(std::uint64_t counter) { counter_ = counter; }
  // Leaf keys cached outside the key store (0 or 1).
  int cached_keys() const;

 private:
  struct CapturedFrame;
  struct PendingBlock {
    storage::BlockLocator locator;
    std::int64_t end_ms;
    Bytes bytes;
  };

  stream::EncryptedFrame EncryptLocked(const stream::Frame& frame);
  bool Upload(const PendingBlock& block);
  void EnqueueAndFlush(PendingBlock block);

  CameraConfig config_;
  CameraContext& camera_;
  storage::BlobStore& store_;

  mutable std::mutex state_mu_;  // camera_, leaf_, current_epoch_
  std::optional<keytree::NodeKey> leaf_;
  std::optional<keytree::Epoch> current_epoch_;

  mutable std::mutex upload_mu_;
  std::deque<PendingBlock> buffer_;

  mutable std::mutex stats_mu_;
  StageStats stats_ = MakePipelineStats();
  PipelineCounters counters_;
  std::uint64_t counter_ = 0;
};

}  // namespace cactus::camera

#endif  // CACTUS_CAMERA_H_
