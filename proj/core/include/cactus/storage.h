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

#ifndef CACTUS_STORAGE_H_
#define CACTUS_STORAGE_H_

// The untrusted cloud: a contentless blob store indexed by camera and time.
// It performs no access control and never sees a key.

#include <atomic>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "cactus/bytes.h"

namespace cactus::storage {

using CameraId = std::array<std::uint8_t, 16>;

struct BlockLocator {
  CameraId camera_id{};
  std::int64_t start_ms = 0;

  friend auto operator<=>(const BlockLocator&, const BlockLocator&) = default;
};

struct BlockMeta {
  BlockLocator locator;
  std::int64_t end_ms = 0;
  std::uint64_t size = 0;
  std::string etag;

  friend bool operator==(const BlockMeta&, const BlockMeta&) = default;
};

// Hex of the first 16 bytes of SHA-256(bytes).
std::string Etag(ByteView bytes);

class BlobStore {
 public:
  virtual ~BlobStore() = default;

  // Overwrites any block at the same locator. Returns the etag. Throws
  // kStorageFull, kIoError or kStorageUnavailable.
  virtual std::string Put(const BlockLocator& locator, std::int64_t end_ms, ByteView bytes) = 0;
  // Throws kNotFound.
  virtual Bytes Get(const BlockLocator& locator) = 0;
  // Blocks of `camera` whose [start_ms, end_ms] intersects [from_ms, to_ms],
  // ordered by start_ms.
  virtual std::vector<BlockMeta> List(const CameraId& camera, std::int64_t from_ms, std::int64_t to_ms) = 0;
};

// XORs `xor_mask` into byte `offset` of a stored block, keeping its metadata.
// Attack tooling for tests and the CLI.
void Tamper(BlobStore& store, const BlockLocator& locator, std::size_t offset, std::uint8_t xor_mask);

// In-memory store, also the index behind FileBlobStore.
class MemoryBlobStore : public BlobStore {
 public:
  explicit MemoryBlobStore(std::optional<std::uint64_t> capacity_bytes = std::nullopt)
      : capacity_(capacity_bytes) {}

  std::string Put(const BlockLocator& locator, std::int64_t end_ms, ByteView bytes) override;
  Bytes Get(const BlockLocator& locator) override;
  std::vector<BlockMeta> List(const CameraId& camera, std::int64_t from_ms, std::int64_t to_ms) override;

  std::uint64_t total_bytes() const;
  std::size_t block_count() const;

 private:
  struct Entry {
    BlockMeta meta;
    std::shared_ptr<const Bytes> blob;  // immutable once stored
  };

  std::optional<std::uint64_t> capacity_;
  mutable std::shared_mutex mu_;
  std::map<BlockLocator, Entry> blocks_;
  std::uint64_t total_ = 0;
};

// One file per block under {data_dir}/{camera hex}/{start_ms}.cbk plus an
// append-only journal {data_dir}/index.journal with one line per put:
//   put <camera hex> <start_ms> <end_ms> <size> <etag>
// The index is rebuilt from the journal on open; the last line for a
// locator wins.
class FileBlobStore : public BlobStore {
 public:
  explicit FileBlobStore(std::filesystem::path data_dir,
                         std::optional<std::uint64_t> capacity_bytes = std::nullopt);

  std::string Put(const BlockLocator& locator, std::int64_t end_ms, ByteView bytes) override;
  Bytes Get(const BlockLocator& locator) override;
  std::vector<BlockMeta> List(const CameraId& camera, std::int64_t from_ms, std::int64_t to_ms) override;

  std::filesystem::path BlockPath(const BlockLocator& locator) const;

 private:
  void LoadJournal();

  std::filesystem::path dir_;
  std::optional<std::uint64_t> capacity_;
  std::mutex write_mu_;
  std::shared_mutex index_mu_;
  std::map<BlockLocator, BlockMeta> index_;
  std::uint64_t total_ = 0;
};

// Wraps a store and fails on demand.
class FaultyBlobStore : public BlobStore {
 public:
  explicit FaultyBlobStore(BlobStore& inner) : inner_(inner) {}

  void set_available(bool up) { available_ = up; }
  void FailNextPuts(int n) { failing_puts_ = n; }
  int put_attempts() const { return put_attempts_; }

  std::string Put(const BlockLocator& locator, std::int64_t end_ms, ByteView bytes) override;
  Bytes Get(const BlockLocator& locator) override;
  std::vector<BlockMeta> List(const CameraId& camera, std::int64_t from_ms, std::int64_t to_ms) override;

 private:
  void Check();

  BlobStore& inner_;
  std::atomic<bool> available_{true};
  std::atomic<int> failing_puts_{0};
  std::atomic<int> put_attempts_{0};
};

// ---- REST ----
//
// PUT  /v1/cameras/{hex id}/blocks/{start_ms}?end={end_ms}   body: block bytes
// GET  /v1/cameras/{hex id}/blocks/{start_ms}
// GET  /v1/cameras/{hex id}/blocks?from={ms}&to={ms}
//        -> [{"start_ms":..,"end_ms":..,"size":..,"etag":".."}]
// POST /v1/cameras/{hex id}/blocks/{start_ms}/tamper?offset={n}&xor={m}
//        (only when started with allow_tamper)
//
// Status codes: 404 NotFound, 400 bad request, 507 StorageFull, 500 IoError.

class StorageServer {
 public:
  StorageServer(BlobStore& backend, bool allow_tamper = false);
  ~StorageServer();
  StorageServer(const StorageServer&) = delete;
  StorageServer& operator=(const StorageServer&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port.
  // Returns the bound port. Throws kIoError.
  int Start(const std::string& host = "127.0.0.1", int port = 0);
  // Serves on the calling thread until Stop().
  void Run(const std::string& host, int port);
  void Stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

class HttpBlobStore : public BlobStore {
 public:
  // `base_url` like "http://127.0.0.1:8080". Connection failures throw
  // kStorageUnavailable.
  explicit HttpBlobStore(const std::string& base_url);
  ~HttpBlobStore() override;

  std::string Put(const BlockLocator& locator, std::int64_t end_ms, ByteView bytes) override;
  Bytes Get(const BlockLocator& locator) override;
  std::vector<BlockMeta> List(const CameraId& camera, std::int64_t from_ms, std::int64_t to_ms) override;
  void RemoteTamper(const BlockLocator& locator, std::size_t offset, std::uint8_t xor_mask);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Picks a backend from a URL: "http://..." is HttpBlobStore, "file:DIR" or a
// plain path is FileBlobStore, "memory:" is a fresh MemoryBlobStore.
std::unique_ptr<BlobStore> OpenStore(const std::string& url);

}  // namespace cactus::storage

#endif  // CACTUS_STORAGE_H_
