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

#ifndef CACTUS_CLIENT_H_
#define CACTUS_CLIENT_H_

// Viewer side: fetch blocks from untrusted storage, verify, decrypt and
// schedule frames for playback, dropping frames uniformly when a live
// stream falls behind its target delay.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cactus/contexts.h"
#include "cactus/stats.h"
#include "cactus/storage.h"
#include "cactus/streamcrypto.h"

namespace cactus::client {

using protocols::ViewerCredentials;

inline constexpr std::int64_t kDefaultTargetDelayMs = 2000;
inline constexpr double kMaxDropFraction = 0.9;

// p = min(0.9, (D - L) / D) when D > L, else 0.
double DropFraction(double delay_ms, double target_ms);

// Stateless form for a constant delay: frame i is dropped iff
// floor((i + 1) p) > floor(i p), which spaces drops evenly.
bool DropDecision(std::uint64_t frame_index, std::int64_t delay_ms, std::int64_t target_ms);

// Accumulator form for a delay that changes from frame to frame.
class DropScheduler {
 public:
  // True to render, false to drop.
  bool Decide(double delay_ms, double target_ms);
  std::uint64_t rendered() const { return rendered_; }
  std::uint64_t dropped() const { return dropped_; }

 private:
  double acc_ = 0;
  std::uint64_t rendered_ = 0;
  std::uint64_t dropped_ = 0;
};

enum class EventKind {
  kRendered,
  kDropped,
  kNoAccess,       // frame outside the viewer's keys
  kUndecryptable,  // verified block, frame failed to open
  kQuarantined,    // block failed verification; skipped, left in storage
};
std::string_view EventKindName(EventKind kind);

struct StreamEvent {
  EventKind kind = EventKind::kRendered;
  storage::BlockLocator block;
  std::int64_t timestamp_ms = 0;  // frame timestamp; block start for kQuarantined
  std::optional<stream::Frame> frame;  // kRendered only
  std::optional<ErrorCode> error;
  double delay_ms = 0;  // live playback only
};

using FrameSink = std::function<void(const StreamEvent&)>;

enum class TracePoint { kVerified, kRejected, kKeyExtracted, kDecrypted };
// Called from the verify/decrypt stage with the block start.
using TraceHook = std::function<void(TracePoint, std::int64_t block_start_ms)>;

struct DelaySample {
  std::uint64_t index = 0;
  std::int64_t timestamp_ms = 0;
  double delay_ms = 0;
  bool rendered = false;
};

// Stage names: download, signature_verification, key_extraction,
// frame_decryption.
StageStats MakeLatencyStats();

struct LatencyReport {
  StageStats stages = MakeLatencyStats();
  std::vector<DelaySample> delays;

  std::string ToCsv() const { return stages.ToCsv(); }
  // One {"index", "timestamp_ms", "delay_ms", "rendered"} object per line.
  std::string DelaysJsonl() const;
};

struct StreamSummary {
  std::uint64_t received = 0;  // frames that verified and decrypted
  std::uint64_t rendered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t no_access = 0;
  std::uint64_t undecryptable = 0;
  std::vector<storage::BlockLocator> quarantined;
  LatencyReport report;
};

enum class StreamMode { kRange, kLive };

struct StreamOptions {
  StreamMode mode = StreamMode::kRange;
  std::int64_t from_ms = INT64_MIN;
  std::int64_t to_ms = INT64_MAX;
  std::int64_t target_delay_ms = kDefaultTargetDelayMs;
  // Live mode: stop after this much wall time.
  std::int64_t live_duration_ms = 10'000;
  // StorageUnavailable handling.
  int max_retries = 5;
  int retry_base_ms = 50;
  std::size_t queue_depth = 8;
  TraceHook trace;
  // Wall clock in milliseconds since the Unix epoch.
  std::function<std::int64_t()> now_ms;
};

// Downloads, verifies, decrypts and schedules frames for blocks intersecting
// [from_ms, to_ms] (kRange), or polls for new blocks and plays them with the
// drop policy (kLive). Frames outside [from_ms, to_ms] are not reported.
// Throws kStorageUnavailable once retries are exhausted.
StreamSummary Stream(const ViewerCredentials& viewer, storage::BlobStore& store,
                     const StreamOptions& options, const FrameSink& sink = {});

// Discrete-event replay of a live session over already stored blocks. Block
// processing is real; time is simulated from the cost model below so runs
// are reproducible.
struct LiveSimOptions {
  std::int64_t target_delay_ms = kDefaultTargetDelayMs;
  double download_ms = 500;        // per block, requests overlap
  double verify_ms = 10;           // per block
  double key_extraction_ms = 0.05;  // per frame
  double decrypt_ms = 4;           // per frame
  double render_ms = 51;           // per rendered frame
  // 0 means min(block duration, 500 ms).
  std::int64_t poll_interval_ms = 0;
  bool drop_frames = true;
};

struct FrameTiming {
  std::int64_t timestamp_ms = 0;
  double discovered_wait_ms = 0;  // capture to poll that sees the block
  double download_ms = 0;
  double verify_ms = 0;
  double key_extraction_ms = 0;
  double decrypt_ms = 0;
  double queue_wait_ms = 0;
  double delay_ms = 0;  // capture to presentation
  bool rendered = false;
};

struct LiveSimResult {
  StreamSummary summary;
  std::vector<FrameTiming> frames;

  double drop_proportion() const;
  // Over the second half of the frames.
  double steady_state_max_delay_ms() const;
  double steady_state_drop_proportion() const;
};

LiveSimResult SimulateLive(const ViewerCredentials& viewer, storage::BlobStore& store,
                           const LiveSimOptions& options, const FrameSink& sink = {});

}  // namespace cactus::client

#endif  // CACTUS_CLIENT_H_
