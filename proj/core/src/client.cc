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

#include "cactus/client.h"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "bounded_queue.h"
#include "cactus/error.h"

namespace cactus::client {
namespace {

using internal::BoundedQueue;

std::int64_t SystemNowMs() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

struct FrameResult {
  std::int64_t timestamp_ms = 0;
  std::optional<stream::Frame> frame;
  std::optional<ErrorCode> error;
};

struct OpenedBlock {
  storage::BlockLocator locator;
  bool verified = false;
  std::vector<FrameResult> frames;
};

// Verification strictly precedes key extraction; a block that fails it never
// reaches the key store.
class BlockOpener {
 public:
  BlockOpener(const ViewerCredentials& viewer, std::int64_t from_ms, std::int64_t to_ms, TraceHook trace)
      : viewer_(viewer), from_ms_(from_ms), to_ms_(to_ms), trace_(std::move(trace)) {
    if (viewer_.store == nullptr) Fail(ErrorCode::kInvalidArgument, "viewer has no key store");
  }

  struct Timing {
    double verify_ms = 0;
    std::vector<double> extract_ms;
    std::vector<double> decrypt_ms;
  };

  OpenedBlock Open(const storage::BlockLocator& locator, ByteView bytes, Timing& timing) const {
    OpenedBlock out{locator, false, {}};
    Stopwatch verify_timer;
    std::optional<stream::SignedBlock> block;
    try {
      block = stream::SignedBlock::Decode(bytes);
    } catch (const Error&) {
    }
    out.verified = block && block->camera_id == viewer_.camera_id && block->start_ms == locator.start_ms &&
                   stream::VerifyBlock(viewer_.camera_key, *block);
    timing.verify_ms = verify_timer.ElapsedMs();
    if (trace_) trace_(out.verified ? TracePoint::kVerified : TracePoint::kRejected, locator.start_ms);
    if (!out.verified) return out;

    const auto& params = viewer_.store->params();
    for (const auto& ef : block->frames) {
      if (ef.timestamp_ms < from_ms_ || ef.timestamp_ms > to_ms_) continue;
      FrameResult r;
      r.timestamp_ms = ef.timestamp_ms;
      Stopwatch extract_timer;
      std::optional<keytree::NodeKey> key;
      try {
        key.emplace(viewer_.store->Extract(keytree::EpochOf(params, ef.timestamp_ms)));
      } catch (const Error& e) {
        r.error = e.code();
      }
      timing.extract_ms.push_back(extract_timer.ElapsedMs());
      if (trace_) trace_(TracePoint::kKeyExtracted, locator.start_ms);
      if (key) {
        Stopwatch decrypt_timer;
        try {
          r.frame = stream::DecryptFrame(*key, ef);
        } catch (const Error& e) {
          r.error = e.code();
        }
        timing.decrypt_ms.push_back(decrypt_timer.ElapsedMs());
        if (trace_) trace_(TracePoint::kDecrypted, locator.start_ms);
      }
      out.frames.push_back(std::move(r));
    }
    return out;
  }

 private:
  const ViewerCredentials& viewer_;
  std::int64_t from_ms_;
  std::int64_t to_ms_;
  TraceHook trace_;
};

template <typename F>
auto WithRetry(const StreamOptions& options, F&& f) {
  for (int attempt = 0;; ++attempt) {
    try {
      return f();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kStorageUnavailable || attempt >= options.max_retries) throw;
      if (options.retry_base_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(options.retry_base_ms << attempt));
      }
    }
  }
}

struct Downloaded {
  storage::BlockLocator locator;
  Bytes bytes;
};

// Classifies one frame result into a summary counter and event.
StreamEvent EventFor(const OpenedBlock& block, FrameResult& r, StreamSummary& summary) {
  StreamEvent ev;
  ev.block = block.locator;
  ev.timestamp_ms = r.timestamp_ms;
  ev.error = r.error;
  if (r.error == ErrorCode::kNoAccess) {
    ev.kind = EventKind::kNoAccess;
    ++summary.no_access;
  } else if (r.error) {
    ev.kind = EventKind::kUndecryptable;
    ++summary.undecryptable;
  } else {
    ev.kind = EventKind::kRendered;
    ev.frame = std::move(r.frame);
    ++summary.received;
  }
  return ev;
}

StreamEvent QuarantineEvent(const OpenedBlock& block, StreamSummary& summary) {
  summary.quarantined.push_back(block.locator);
  StreamEvent ev;
  ev.kind = EventKind::kQuarantined;
  ev.block = block.locator;
  ev.timestamp_ms = block.locator.start_ms;
  ev.error = ErrorCode::kSignatureInvalid;
  return ev;
}

}  // namespace

double DropFraction(double delay_ms, double target_ms) {
  if (delay_ms <= target_ms || delay_ms <= 0) return 0.0;
  return std::min(kMaxDropFraction, (delay_ms - target_ms) / delay_ms);
}

bool DropDecision(std::uint64_t frame_index, std::int64_t delay_ms, std::int64_t target_ms) {
  if (delay_ms <= target_ms || delay_ms <= 0) return true;
  // p = num / den in exact integers.
  std::uint64_t num = static_cast<std::uint64_t>(delay_ms - target_ms);
  std::uint64_t den = static_cast<std::uint64_t>(delay_ms);
  if (10 * num > 9 * den) {
    num = 9;
    den = 10;
  }
  const bool drop = (frame_index + 1) * num / den > frame_index * num / den;
  return !drop;
}

bool DropScheduler::Decide(double delay_ms, double target_ms) {
  acc_ += DropFraction(delay_ms, target_ms);
  // Tolerate rounding so p = 1/k drops exactly every k-th frame.
  if (acc_ >= 1.0 - 1e-9) {
    acc_ -= 1.0;
    ++dropped_;
    return false;
  }
  ++rendered_;
  return true;
}

std::string_view EventKindName(EventKind kind) {
  switch (kind) {
    case EventKind::kRendered: return "rendered";
    case EventKind::kDropped: return "dropped";
    case EventKind::kNoAccess: return "no_access";
    case EventKind::kUndecryptable: return "undecryptable";
    case EventKind::kQuarantined: return "quarantined";
  }
  return "unknown";
}

StageStats MakeLatencyStats() {
  return StageStats({"download", "signature_verification", "key_extraction", "frame_decryption"});
}

std::string LatencyReport::DelaysJsonl() const {
  std::string out;
  for (const auto& d : delays) {
    out += nlohmann::ordered_json{{"index", d.index},
                                  {"timestamp_ms", d.timestamp_ms},
                                  {"delay_ms", d.delay_ms},
                                  {"rendered", d.rendered}}
               .dump();
    out += '\n';
  }
  return out;
}

StreamSummary Stream(const ViewerCredentials& viewer, storage::BlobStore& store, const StreamOptions& options,
                     const FrameSink& sink) {
  const auto now = options.now_ms ? options.now_ms : SystemNowMs;
  const bool live = options.mode == StreamMode::kLive;
  std::int64_t from_ms = options.from_ms;
  if (live && from_ms == INT64_MIN) from_ms = now() - options.target_delay_ms;
  const BlockOpener opener(viewer, from_ms, options.to_ms, options.trace);

  StreamSummary summary;
  std::mutex stats_mu;
  auto record = [&](const std::string& stage, double ms) {
    std::lock_guard lock(stats_mu);
    summary.report.stages[stage].Add(ms);
  };

  BoundedQueue<Downloaded> downloaded(options.queue_depth);
  BoundedQueue<OpenedBlock> opened(options.queue_depth);
  std::mutex error_mu;
  std::exception_ptr error;
  std::atomic<bool> halted{false};
  auto halt = [&](std::exception_ptr e) {
    std::lock_guard lock(error_mu);
    if (!error) error = e;
    halted = true;
  };

  std::thread downloader([&] {
    auto fetch = [&](const storage::BlockMeta& meta) {
      Stopwatch timer;
      Bytes bytes;
      try {
        bytes = WithRetry(options, [&] { return store.Get(meta.locator); });
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kNotFound) return true;  // vanished since listing
        throw;
      }
      record("download", timer.ElapsedMs());
      return downloaded.Push({meta.locator, std::move(bytes)});
    };
    try {
      if (!live) {
        const auto metas = WithRetry(options, [&] { return store.List(viewer.camera_id, from_ms, options.to_ms); });
        for (const auto& meta : metas) {
          if (halted || !fetch(meta)) break;
        }
      } else {
        const std::int64_t deadline = now() + options.live_duration_ms;
        std::int64_t seen_through = INT64_MIN;
        std::int64_t poll_ms = 500;
        while (!halted && now() < deadline) {
          const auto metas = WithRetry(options, [&] { return store.List(viewer.camera_id, from_ms, options.to_ms); });
          for (const auto& meta : metas) {
            if (meta.locator.start_ms <= seen_through) continue;
            seen_through = meta.locator.start_ms;
            poll_ms = std::clamp<std::int64_t>(meta.end_ms - meta.locator.start_ms, 1, 500);
            if (!fetch(meta)) break;
          }
          std::this_thread::sleep_for(std::chrono::milliseconds(std::min(poll_ms, std::max<std::int64_t>(deadline - now(), 0))));
        }
      }
    } catch (...) {
      halt(std::current_exception());
    }
    downloaded.Close();
  });

  std::thread processor([&] {
    try {
      while (auto item = downloaded.Pop()) {
        BlockOpener::Timing timing;
        OpenedBlock block = opener.Open(item->locator, item->bytes, timing);
        {
          std::lock_guard lock(stats_mu);
          summary.report.stages["signature_verification"].Add(timing.verify_ms);
          for (double ms : timing.extract_ms) summary.report.stages["key_extraction"].Add(ms);
          for (double ms : timing.decrypt_ms) summary.report.stages["frame_decryption"].Add(ms);
        }
        if (!opened.Push(std::move(block))) break;
      }
    } catch (...) {
      halt(std::current_exception());
    }
    opened.Close();
  });

  // Playback scheduling. Drop decisions are made here only.
  DropScheduler dropper;
  std::uint64_t index = 0;
  std::optional<std::int64_t> next_slot;
  std::optional<std::int64_t> last_ts;
  bool last_rendered = false;
  std::int64_t last_present = 0;
  while (auto block = opened.Pop()) {
    if (!block->verified) {
      const StreamEvent ev = QuarantineEvent(*block, summary);
      if (sink) sink(ev);
      continue;
    }
    for (auto& r : block->frames) {
      StreamEvent ev = EventFor(*block, r, summary);
      if (ev.kind == EventKind::kRendered) {
        if (live) {
          if (last_ts && last_rendered) next_slot = last_present + (r.timestamp_ms - *last_ts);
          const std::int64_t present = std::max(now(), next_slot.value_or(INT64_MIN));
          if (present > now()) std::this_thread::sleep_for(std::chrono::milliseconds(present - now()));
          ev.delay_ms = static_cast<double>(present - r.timestamp_ms);
          const bool render = dropper.Decide(ev.delay_ms, static_cast<double>(options.target_delay_ms));
          if (!render) ev.kind = EventKind::kDropped;
          last_ts = r.timestamp_ms;
          last_rendered = render;
          last_present = present;
          next_slot = present;
          summary.report.delays.push_back({index, r.timestamp_ms, ev.delay_ms, render});
        }
        ++index;
        if (ev.kind == EventKind::kRendered) {
          ++summary.rendered;
        } else {
          ++summary.dropped;
          ev.frame.reset();
        }
      }
      if (sink) sink(ev);
    }
  }
  downloader.join();
  processor.join();
  if (error) std::rethrow_exception(error);
  return summary;
}

double LiveSimResult::drop_proportion() const {
  const auto total = summary.rendered + summary.dropped;
  return total == 0 ? 0.0 : static_cast<double>(summary.dropped) / static_cast<double>(total);
}

double LiveSimResult::steady_state_max_delay_ms() const {
  double worst = 0;
  for (std::size_t i = frames.size() / 2; i < frames.size(); ++i) {
    if (frames[i].rendered) worst = std::max(worst, frames[i].delay_ms);
  }
  return worst;
}

double LiveSimResult::steady_state_drop_proportion() const {
  const std::size_t half = frames.size() / 2;
  if (frames.size() - half == 0) return 0.0;
  std::size_t dropped = 0;
  for (std::size_t i = half; i < frames.size(); ++i) dropped += frames[i].rendered ? 0 : 1;
  return static_cast<double>(dropped) / static_cast<double>(frames.size() - half);
}

LiveSimResult SimulateLive(const ViewerCredentials& viewer, storage::BlobStore& store,
                           const LiveSimOptions& options, const FrameSink& sink) {
  LiveSimResult result;
  auto& summary = result.summary;
  auto& stages = summary.report.stages;
  const BlockOpener opener(viewer, INT64_MIN, INT64_MAX, {});

  const auto metas = store.List(viewer.camera_id, INT64_MIN, INT64_MAX);
  if (metas.empty()) return result;
  const std::int64_t poll_origin = metas.front().locator.start_ms;
  std::int64_t poll_ms = options.poll_interval_ms;
  if (poll_ms <= 0) {
    poll_ms = std::clamp<std::int64_t>(metas.front().end_ms - metas.front().locator.start_ms, 1, 500);
  }

  const double target = static_cast<double>(options.target_delay_ms);
  DropScheduler dropper;
  double verify_free = 0, decrypt_free = 0, next_slot = -1e300;
  double last_ts = 0;
  bool have_last = false, last_rendered = false;
  double last_present = 0;

  for (const auto& meta : metas) {
    // A block becomes visible when its last frame is captured.
    const std::int64_t ticks = (meta.end_ms - poll_origin + poll_ms - 1) / poll_ms;
    const double discovered = static_cast<double>(poll_origin + ticks * poll_ms);
    const double downloaded = discovered + options.download_ms;
    const double verify_start = std::max(downloaded, verify_free);
    const double verified = verify_start + options.verify_ms;
    verify_free = verified;
    stages["download"].Add(options.download_ms);
    stages["signature_verification"].Add(options.verify_ms);

    BlockOpener::Timing timing;
    OpenedBlock block = opener.Open(meta.locator, store.Get(meta.locator), timing);
    if (!block.verified) {
      const StreamEvent ev = QuarantineEvent(block, summary);
      if (sink) sink(ev);
      continue;
    }
    for (auto& r : block.frames) {
      const double ts = static_cast<double>(r.timestamp_ms);
      const double decrypt_start = std::max(verified, decrypt_free);
      const double decrypted = decrypt_start + options.key_extraction_ms + options.decrypt_ms;
      decrypt_free = decrypted;
      stages["key_extraction"].Add(options.key_extraction_ms);
      stages["frame_decryption"].Add(options.decrypt_ms);

      StreamEvent ev = EventFor(block, r, summary);
      if (ev.kind != EventKind::kRendered) {
        if (sink) sink(ev);
        continue;
      }
      if (have_last && last_rendered) next_slot = last_present + std::max(options.render_ms, ts - last_ts);
      const double present = std::max(next_slot, decrypted);
      const double delay = present - ts;
      const bool render = !options.drop_frames || dropper.Decide(delay, target);

      FrameTiming t;
      t.timestamp_ms = r.timestamp_ms;
      t.discovered_wait_ms = discovered - ts;
      t.download_ms = options.download_ms;
      t.verify_ms = options.verify_ms;
      t.key_extraction_ms = options.key_extraction_ms;
      t.decrypt_ms = options.decrypt_ms;
      t.queue_wait_ms = (verify_start - downloaded) + (decrypt_start - verified) + (present - decrypted);
      t.delay_ms = delay;
      t.rendered = render;
      result.frames.push_back(t);
      summary.report.delays.push_back({result.frames.size() - 1, r.timestamp_ms, delay, render});

      have_last = true;
      last_ts = ts;
      last_rendered = render;
      last_present = present;
      next_slot = present;

      ev.delay_ms = delay;
      if (render) {
        ++summary.rendered;
      } else {
        ev.kind = EventKind::kDropped;
        ev.frame.reset();
        ++summary.dropped;
      }
      if (sink) sink(ev);
    }
  }
  return result;
}

}  // namespace cactus::client
