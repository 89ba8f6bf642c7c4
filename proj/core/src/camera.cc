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

#include "cactus/camera.h"

#include <exception>
#include <random>
#include <thread>

#include "bounded_queue.h"
#include "cactus/admin.h"
#include "cactus/error.h"

namespace cactus::camera {
namespace {

using internal::BoundedQueue;
using keytree::Epoch;

void WriteLe(std::uint8_t* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint64_t ReadLe(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{in[i]} << (8 * i);
  return v;
}

void Fill(std::uint8_t* out, std::size_t n, std::uint64_t seed, std::uint64_t counter) {
  std::mt19937_64 rng(seed ^ (counter * 0x9e3779b97f4a7c15ull));
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) WriteLe(out + i, rng());
  if (i < n) {
    std::uint8_t tail[8];
    WriteLe(tail, rng());
    std::copy(tail, tail + (n - i), out + i);
  }
}

}  // namespace

void CameraConfig::Validate() const {
  if (frame_rate < 1 || frame_rate > 1000) Fail(ErrorCode::kInvalidArgument, "frame_rate must be in [1, 1000]");
  if (frame_bytes < kPayloadPrefixBytes) {
    Fail(ErrorCode::kInvalidArgument, "frame_bytes must be at least " + std::to_string(kPayloadPrefixBytes));
  }
  if (block_size < 1) Fail(ErrorCode::kInvalidArgument, "block_size must be positive");
  if (upload_attempts < 1) Fail(ErrorCode::kInvalidArgument, "upload_attempts must be positive");
  if (retry_base_ms < 0) Fail(ErrorCode::kInvalidArgument, "retry_base_ms must not be negative");
  if (buffer_blocks < 1 || queue_depth < 1) Fail(ErrorCode::kInvalidArgument, "buffer sizes must be positive");
  if (epoch_seconds < 1) Fail(ErrorCode::kInvalidArgument, "epoch_seconds must be positive");
  keytree::TreeParams{depth, static_cast<std::uint32_t>(epoch_seconds), 0}.Validate();
}

std::vector<std::string> CameraConfig::Warnings() const {
  std::vector<std::string> out;
  const double block_seconds = static_cast<double>(block_size) / frame_rate;
  if (block_seconds > epoch_seconds) {
    out.push_back("block of " + std::to_string(block_size) + " frames lasts longer than one " +
                  std::to_string(epoch_seconds) + " s epoch");
  }
  return out;
}

CameraConfig CameraConfig::FromKeyValues(const KeyValues& kv, CameraConfig base) {
  static const char* kKnown[] = {"frame_rate", "frame_bytes", "depth",    "epoch_seconds",
                                 "block_size", "storage_url", "data_dir", "seed"};
  for (const auto& [key, value] : kv) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
      Fail(ErrorCode::kInvalidArgument, "unknown camera config key '" + key + "'");
    }
  }
  base.frame_rate = static_cast<int>(GetInt(kv, "frame_rate", base.frame_rate));
  base.frame_bytes = static_cast<std::size_t>(GetInt(kv, "frame_bytes", static_cast<std::int64_t>(base.frame_bytes)));
  base.depth = static_cast<int>(GetInt(kv, "depth", base.depth));
  base.epoch_seconds = static_cast<int>(GetInt(kv, "epoch_seconds", base.epoch_seconds));
  base.block_size = static_cast<std::size_t>(GetInt(kv, "block_size", static_cast<std::int64_t>(base.block_size)));
  base.storage_url = GetString(kv, "storage_url", base.storage_url);
  base.data_dir = GetString(kv, "data_dir", base.data_dir);
  base.seed = static_cast<std::uint64_t>(GetInt(kv, "seed", static_cast<std::int64_t>(base.seed)));
  base.Validate();
  return base;
}

Bytes MakePayload(const PayloadHeader& header, std::size_t size, std::uint64_t seed) {
  if (size < kPayloadPrefixBytes) Fail(ErrorCode::kInvalidArgument, "payload shorter than its prefix");
  Bytes out(size);
  std::copy(header.camera_id.begin(), header.camera_id.end(), out.begin());
  WriteLe(out.data() + 16, header.counter);
  WriteLe(out.data() + 24, static_cast<std::uint64_t>(header.timestamp_ms));
  Fill(out.data() + kPayloadPrefixBytes, size - kPayloadPrefixBytes, seed, header.counter);
  return out;
}

PayloadHeader ParsePayload(ByteView payload) {
  if (payload.size() < kPayloadPrefixBytes) Fail(ErrorCode::kInvalidArgument, "payload shorter than its prefix");
  PayloadHeader h;
  std::copy_n(payload.begin(), 16, h.camera_id.begin());
  h.counter = ReadLe(payload.data() + 16);
  h.timestamp_ms = static_cast<std::int64_t>(ReadLe(payload.data() + 24));
  return h;
}

bool PayloadIntact(ByteView payload, std::uint64_t seed) {
  const PayloadHeader h = ParsePayload(payload);
  return MakePayload(h, payload.size(), seed) == Bytes(payload.begin(), payload.end());
}

StageStats MakePipelineStats() {
  return StageStats({"key_extraction", "frame_encryption", "signature", "upload"});
}

struct CameraNode::CapturedFrame {
  stream::EncryptedFrame frame;
  Epoch epoch;
};

CameraNode::CameraNode(CameraConfig config, CameraContext& camera, storage::BlobStore& store)
    : config_(std::move(config)), camera_(camera), store_(store) {
  config_.Validate();
}

stream::EncryptedFrame CameraNode::EncryptLocked(const stream::Frame& frame) {
  auto& installed = camera_.require();
  const auto& params = installed.store.params();

  Stopwatch extract_timer;
  const Epoch epoch = keytree::EpochOf(params, frame.timestamp_ms);
  if (current_epoch_ != epoch) {
    leaf_.reset();
    if (epoch > 0 && (!current_epoch_ || epoch > *current_epoch_)) {
      // Retire every epoch before this one; the old nodes are wiped as the
      // previous store is destroyed.
      installed.store = installed.store.AdvanceFrontier(epoch - 1);
      if (current_epoch_) {
        std::lock_guard lock(stats_mu_);
        ++counters_.rotations;
      }
    }
    current_epoch_ = epoch;
  }
  if (!leaf_) leaf_.emplace(installed.store.Extract(epoch));
  const double extract_ms = extract_timer.ElapsedMs();

  Stopwatch encrypt_timer;
  auto encrypted = stream::EncryptFrame(*leaf_, params, frame);
  const double encrypt_ms = encrypt_timer.ElapsedMs();

  std::lock_guard lock(stats_mu_);
  stats_["key_extraction"].Add(extract_ms);
  stats_["frame_encryption"].Add(encrypt_ms);
  ++counters_.frames_captured;
  return encrypted;
}

bool CameraNode::Upload(const PendingBlock& block) {
  for (int attempt = 0; attempt < config_.upload_attempts; ++attempt) {
    try {
      Stopwatch timer;
      store_.Put(block.locator, block.end_ms, block.bytes);
      std::lock_guard lock(stats_mu_);
      stats_["upload"].Add(timer.ElapsedMs());
      ++counters_.blocks_uploaded;
      return true;
    } catch (const Error&) {
      {
        std::lock_guard lock(stats_mu_);
        ++counters_.upload_failures;
      }
      if (attempt + 1 < config_.upload_attempts && config_.retry_base_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(config_.retry_base_ms << attempt));
      }
    }
  }
  return false;
}

void CameraNode::EnqueueAndFlush(PendingBlock block) {
  std::lock_guard lock(upload_mu_);
  if (buffer_.size() >= config_.buffer_blocks) {
    buffer_.pop_front();
    std::lock_guard stats_lock(stats_mu_);
    ++counters_.blocks_dropped;
  }
  buffer_.push_back(std::move(block));
  while (!buffer_.empty() && Upload(buffer_.front())) buffer_.pop_front();
}

std::size_t CameraNode::Flush() {
  std::lock_guard lock(upload_mu_);
  while (!buffer_.empty() && Upload(buffer_.front())) buffer_.pop_front();
  return buffer_.size();
}

PipelineCounters CameraNode::Record(std::int64_t start_ms, std::uint64_t frames) {
  BoundedQueue<CapturedFrame> encrypted(config_.queue_depth);
  BoundedQueue<PendingBlock> signed_blocks(config_.queue_depth);

  std::mutex error_mu;
  std::exception_ptr error;
  std::atomic<bool> halted{false};
  auto halt = [&](std::exception_ptr e) {
    std::lock_guard lock(error_mu);
    if (!error) error = e;
    halted = true;
  };

  std::thread capture([&] {
    const auto wall_start = std::chrono::steady_clock::now();
    try {
      for (std::uint64_t i = 0; i < frames && !halted; ++i) {
        const std::int64_t offset = static_cast<std::int64_t>(i) * 1000 / config_.frame_rate;
        if (config_.realtime) std::this_thread::sleep_until(wall_start + std::chrono::milliseconds(offset));
        stream::Frame frame;
        frame.timestamp_ms = start_ms + offset;
        std::optional<CapturedFrame> captured;
        {
          std::lock_guard lock(state_mu_);
          frame.payload = MakePayload({camera_.camera_id, counter_, frame.timestamp_ms}, config_.frame_bytes,
                                      config_.seed);
          captured.emplace(CapturedFrame{EncryptLocked(frame), *current_epoch_});
          ++counter_;
        }
        if (!encrypted.Push(std::move(*captured))) break;
      }
    } catch (...) {
      halt(std::current_exception());
    }
    encrypted.Close();
  });

  std::thread sign([&] {
    std::vector<stream::EncryptedFrame> pending;
    std::optional<Epoch> pending_epoch;
    auto cut = [&] {
      if (pending.empty()) return;
      std::optional<stream::SignedBlock> block;
      double sign_ms = 0;
      try {
        std::lock_guard lock(state_mu_);
        const auto signer = camera_.signer();
        Stopwatch timer;
        block = stream::SignBlock(signer, camera_.camera_id, std::move(pending));
        sign_ms = timer.ElapsedMs();
      } catch (...) {
        halt(std::current_exception());
      }
      pending.clear();
      if (!block) return;
      {
        std::lock_guard lock(stats_mu_);
        stats_["signature"].Add(sign_ms);
        ++counters_.blocks_signed;
      }
      signed_blocks.Push({{block->camera_id, block->start_ms}, block->end_ms, block->Encode()});
    };
    while (auto captured = encrypted.Pop()) {
      if (config_.align_blocks_to_epochs && pending_epoch && captured->epoch != *pending_epoch) cut();
      pending.push_back(std::move(captured->frame));
      pending_epoch = captured->epoch;
      if (pending.size() >= config_.block_size) cut();
    }
    cut();
    signed_blocks.Close();
  });

  while (auto block = signed_blocks.Pop()) EnqueueAndFlush(std::move(*block));
  capture.join();
  sign.join();

  if (error) std::rethrow_exception(error);
  return counters();
}

Bytes CameraNode::HandleAdmin(ByteView wire, std::int64_t now_ms) {
  std::lock_guard lock(state_mu_);
  Bytes ack = protocols::HandleAdmin(camera_, wire, now_ms);
  // The store may have lost the cached epoch or been wiped; derive afresh.
  leaf_.reset();
  if (!camera_.initialized()) current_epoch_.reset();
  return ack;
}

PipelineCounters CameraNode::counters() const {
  PipelineCounters out;
  {
    std::lock_guard lock(stats_mu_);
    out = counters_;
  }
  std::lock_guard lock(upload_mu_);
  out.blocks_pending = buffer_.size();
  return out;
}

int CameraNode::cached_keys() const {
  std::lock_guard lock(state_mu_);
  return leaf_ ? 1 : 0;
}

}  // namespace cactus::camera
