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

#include "cactus/storage.h"

#include <httplib.h>
#include <json.hpp>

#include <fstream>
#include <sstream>
#include <thread>

#include "cactus/crypto.h"
#include "cactus/error.h"

namespace cactus::storage {
namespace {

namespace fs = std::filesystem;

std::string CameraHex(const CameraId& id) { return ToHex(ByteView(id)); }

CameraId ParseCameraHex(const std::string& hex) {
  Bytes raw = FromHex(hex);
  if (raw.size() != 16) Fail(ErrorCode::kInvalidArgument, "camera id must be 16 bytes");
  CameraId id;
  std::copy(raw.begin(), raw.end(), id.begin());
  return id;
}

bool Intersects(const BlockMeta& m, std::int64_t from_ms, std::int64_t to_ms) {
  return m.locator.start_ms <= to_ms && m.end_ms >= from_ms;
}

void CheckCapacity(const std::optional<std::uint64_t>& capacity, std::uint64_t total,
                   std::uint64_t replaced, std::uint64_t incoming) {
  if (capacity && total - replaced + incoming > *capacity) {
    Fail(ErrorCode::kStorageFull, std::to_string(total - replaced + incoming) + " bytes > capacity " +
                                      std::to_string(*capacity));
  }
}

}  // namespace

std::string Etag(ByteView bytes) {
  const auto d = crypto::Sha256(bytes);
  return ToHex(ByteView(d).first(16));
}

void Tamper(BlobStore& store, const BlockLocator& locator, std::size_t offset, std::uint8_t xor_mask) {
  Bytes blob = store.Get(locator);
  if (offset >= blob.size()) Fail(ErrorCode::kInvalidArgument, "tamper offset past end of block");
  std::int64_t end_ms = locator.start_ms;
  for (const auto& m : store.List(locator.camera_id, locator.start_ms, locator.start_ms)) {
    if (m.locator == locator) end_ms = m.end_ms;
  }
  blob[offset] ^= xor_mask;
  store.Put(locator, end_ms, blob);
}

// ---- MemoryBlobStore ----

std::string MemoryBlobStore::Put(const BlockLocator& locator, std::int64_t end_ms, ByteView bytes) {
  if (end_ms < locator.start_ms) Fail(ErrorCode::kInvalidArgument, "end before start");
  auto blob = std::make_shared<const Bytes>(bytes.begin(), bytes.end());
  BlockMeta meta{locator, end_ms, bytes.size(), Etag(bytes)};
  std::unique_lock lock(mu_);
  auto it = blocks_.find(locator);
  const std::uint64_t replaced = it == blocks_.end() ? 0 : it->second.meta.size;
  CheckCapacity(capacity_, total_, replaced, bytes.size());
  total_ = total_ - replaced + bytes.size();
  blocks_[locator] = Entry{meta, std::move(blob)};
  return meta.etag;
}

Bytes MemoryBlobStore::Get(const BlockLocator& locator) {
  std::shared_ptr<const Bytes> blob;
  {
    std::shared_lock lock(mu_);
    auto it = blocks_.find(locator);
    if (it == blocks_.end()) {
      Fail(ErrorCode::kNotFound, CameraHex(locator.camera_id) + "/" + std::to_string(locator.start_ms));
    }
    blob = it->second.blob;
  }
  return *blob;
}

std::vector<BlockMeta> MemoryBlobStore::List(const CameraId& camera, std::int64_t from_ms, std::int64_t to_ms) {
  std::vector<BlockMeta> out;
  std::shared_lock lock(mu_);
  auto it = blocks_.lower_bound(BlockLocator{camera, INT64_MIN});
  for (; it != blocks_.end() && it->first.camera_id == camera && it->first.start_ms <= to_ms; ++it) {
    if (Intersects(it->second.meta, from_ms, to_ms)) out.push_back(it->second.meta);
  }
  return out;
}

std::uint64_t MemoryBlobStore::total_bytes() const {
  std::shared_lock lock(mu_);
  return total_;
}

std::size_t MemoryBlobStore::block_count() const {
  std::shared_lock lock(mu_);
  return blocks_.size();
}

// ---- FileBlobStore ----

FileBlobStore::FileBlobStore(fs::path data_dir, std::optional<std::uint64_t> capacity_bytes)
    : dir_(std::move(data_dir)), capacity_(capacity_bytes) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) Fail(ErrorCode::kIoError, "cannot create " + dir_.string() + ": " + ec.message());
  LoadJournal();
}

fs::path FileBlobStore::BlockPath(const BlockLocator& locator) const {
  return dir_ / CameraHex(locator.camera_id) / (std::to_string(locator.start_ms) + ".cbk");
}

void FileBlobStore::LoadJournal() {
  std::ifstream in(dir_ / "index.journal");
  if (!in) return;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string op, cam;
    BlockMeta m;
    fields >> op >> cam >> m.locator.start_ms >> m.end_ms >> m.size >> m.etag;
    if (!fields || op != "put") {
      // A torn final line after a crash is dropped; anything else is damage.
      if (in.peek() == EOF) break;
      Fail(ErrorCode::kIoError, "bad journal line " + std::to_string(line_no));
    }
    m.locator.camera_id = ParseCameraHex(cam);
    auto it = index_.find(m.locator);
    if (it != index_.end()) total_ -= it->second.size;
    index_[m.locator] = m;
    total_ += m.size;
  }
}

std::string FileBlobStore::Put(const BlockLocator& locator, std::int64_t end_ms, ByteView bytes) {
  if (end_ms < locator.start_ms) Fail(ErrorCode::kInvalidArgument, "end before start");
  BlockMeta meta{locator, end_ms, bytes.size(), Etag(bytes)};
  std::lock_guard write_lock(write_mu_);
  std::uint64_t replaced = 0;
  {
    std::shared_lock lock(index_mu_);
    auto it = index_.find(locator);
    if (it != index_.end()) replaced = it->second.size;
  }
  CheckCapacity(capacity_, total_, replaced, bytes.size());

  const fs::path path = BlockPath(locator);
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) Fail(ErrorCode::kIoError, ec.message());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) Fail(ErrorCode::kIoError, "write " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) Fail(ErrorCode::kIoError, "rename " + path.string() + ": " + ec.message());
  {
    std::ofstream journal(dir_ / "index.journal", std::ios::app);
    journal << "put " << CameraHex(locator.camera_id) << ' ' << locator.start_ms << ' ' << end_ms << ' '
            << bytes.size() << ' ' << meta.etag << '\n';
    journal.flush();
    if (!journal) Fail(ErrorCode::kIoError, "journal append");
  }
  std::unique_lock lock(index_mu_);
  total_ = total_ - replaced + bytes.size();
  index_[locator] = meta;
  return meta.etag;
}

Bytes FileBlobStore::Get(const BlockLocator& locator) {
  {
    std::shared_lock lock(index_mu_);
    if (!index_.contains(locator)) {
      Fail(ErrorCode::kNotFound, CameraHex(locator.camera_id) + "/" + std::to_string(locator.start_ms));
    }
  }
  std::ifstream in(BlockPath(locator), std::ios::binary);
  if (!in) Fail(ErrorCode::kIoError, "read " + BlockPath(locator).string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::vector<BlockMeta> FileBlobStore::List(const CameraId& camera, std::int64_t from_ms, std::int64_t to_ms) {
  std::vector<BlockMeta> out;
  std::shared_lock lock(index_mu_);
  auto it = index_.lower_bound(BlockLocator{camera, INT64_MIN});
  for (; it != index_.end() && it->first.camera_id == camera && it->first.start_ms <= to_ms; ++it) {
    if (Intersects(it->second, from_ms, to_ms)) out.push_back(it->second);
  }
  return out;
}

// ---- FaultyBlobStore ----

void FaultyBlobStore::Check() {
  if (!available_) Fail(ErrorCode::kStorageUnavailable, "storage is down");
}

std::string FaultyBlobStore::Put(const BlockLocator& locator, std::int64_t end_ms, ByteView bytes) {
  ++put_attempts_;
  Check();
  if (failing_puts_ > 0) {
    --failing_puts_;
    Fail(ErrorCode::kStorageUnavailable, "injected put failure");
  }
  return inner_.Put(locator, end_ms, bytes);
}

Bytes FaultyBlobStore::Get(const BlockLocator& locator) {
  Check();
  return inner_.Get(locator);
}

std::vector<BlockMeta> FaultyBlobStore::List(const CameraId& camera, std::int64_t from_ms, std::int64_t to_ms) {
  Check();
  return inner_.List(camera, from_ms, to_ms);
}

// ---- StorageServer ----

struct StorageServer::Impl {
  BlobStore& backend;
  bool allow_tamper;
  httplib::Server server;
  std::thread thread;

  Impl(BlobStore& b, bool tamper) : backend(b), allow_tamper(tamper) { Routes(); }

  static void ReportError(httplib::Response& res, const Error& e) {
    switch (e.code()) {
      case ErrorCode::kNotFound: res.status = 404; break;
      case ErrorCode::kStorageFull: res.status = 507; break;
      case ErrorCode::kInvalidArgument: res.status = 400; break;
      default: res.status = 500; break;
    }
    res.set_content(std::string(ErrorCodeName(e.code())) + ": " + e.what(), "text/plain");
  }

  template <typename F>
  static auto Guard(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        ReportError(res, e);
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(e.what(), "text/plain");
      }
    };
  }

  static BlockLocator Locator(const httplib::Request& req) {
    return {ParseCameraHex(req.matches[1]), std::stoll(req.matches[2])};
  }

  void Routes() {
    server.Put(R"(/v1/cameras/([0-9a-fA-F]{32})/blocks/(-?\d+))", Guard([this](const auto& req, auto& res) {
      const BlockLocator loc = Locator(req);
      if (!req.has_param("end")) Fail(ErrorCode::kInvalidArgument, "missing end parameter");
      const std::int64_t end = std::stoll(req.get_param_value("end"));
      const std::string etag = backend.Put(loc, end, AsBytes(req.body));
      res.set_header("ETag", etag);
      res.set_content(nlohmann::json{{"etag", etag}}.dump(), "application/json");
    }));
    server.Get(R"(/v1/cameras/([0-9a-fA-F]{32})/blocks/(-?\d+))", Guard([this](const auto& req, auto& res) {
      const Bytes blob = backend.Get(Locator(req));
      res.set_content(std::string(blob.begin(), blob.end()), "application/octet-stream");
    }));
    server.Get(R"(/v1/cameras/([0-9a-fA-F]{32})/blocks)", Guard([this](const auto& req, auto& res) {
      const CameraId cam = ParseCameraHex(req.matches[1]);
      const std::int64_t from = req.has_param("from") ? std::stoll(req.get_param_value("from")) : INT64_MIN;
      const std::int64_t to = req.has_param("to") ? std::stoll(req.get_param_value("to")) : INT64_MAX;
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& m : backend.List(cam, from, to)) {
        arr.push_back({{"start_ms", m.locator.start_ms}, {"end_ms", m.end_ms}, {"size", m.size}, {"etag", m.etag}});
      }
      res.set_content(arr.dump(), "application/json");
    }));
    server.Post(R"(/v1/cameras/([0-9a-fA-F]{32})/blocks/(-?\d+)/tamper)",
                Guard([this](const auto& req, auto& res) {
                  if (!allow_tamper) {
                    res.status = 403;
                    return;
                  }
                  const auto offset = std::stoull(req.get_param_value("offset"));
                  const auto mask = req.has_param("xor") ? std::stoul(req.get_param_value("xor")) : 1ul;
                  Tamper(backend, Locator(req), offset, static_cast<std::uint8_t>(mask));
                  res.status = 204;
                }));
  }
};

StorageServer::StorageServer(BlobStore& backend, bool allow_tamper)
    : impl_(std::make_unique<Impl>(backend, allow_tamper)) {}

StorageServer::~StorageServer() { Stop(); }

int StorageServer::Start(const std::string& host, int port) {
  port_ = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (port_ <= 0) Fail(ErrorCode::kIoError, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void StorageServer::Run(const std::string& host, int port) {
  port_ = port;
  if (!impl_->server.listen(host, port)) Fail(ErrorCode::kIoError, "cannot listen on " + host + ":" + std::to_string(port));
}

void StorageServer::Stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

// ---- HttpBlobStore ----

struct HttpBlobStore::Impl {
  explicit Impl(const std::string& url) : client(url) {
    client.set_connection_timeout(2, 0);
    client.set_read_timeout(10, 0);
  }
  httplib::Client client;
  std::mutex mu;  // httplib::Client is not safe for concurrent use

  static std::string BlockPath(const BlockLocator& loc) {
    return "/v1/cameras/" + CameraHex(loc.camera_id) + "/blocks/" + std::to_string(loc.start_ms);
  }

  static void Check(const httplib::Result& res, const std::string& what) {
    if (!res) Fail(ErrorCode::kStorageUnavailable, what + ": " + httplib::to_string(res.error()));
    switch (res->status) {
      case 200:
      case 204: return;
      case 404: Fail(ErrorCode::kNotFound, what);
      case 507: Fail(ErrorCode::kStorageFull, what);
      case 400: Fail(ErrorCode::kInvalidArgument, what + ": " + res->body);
      default:
        if (res->status >= 500) Fail(ErrorCode::kIoError, what + ": HTTP " + std::to_string(res->status));
        Fail(ErrorCode::kStorageUnavailable, what + ": HTTP " + std::to_string(res->status));
    }
  }
};

HttpBlobStore::HttpBlobStore(const std::string& base_url) : impl_(std::make_unique<Impl>(base_url)) {
  if (!impl_->client.is_valid()) Fail(ErrorCode::kInvalidArgument, "bad storage url " + base_url);
}

HttpBlobStore::~HttpBlobStore() = default;

std::string HttpBlobStore::Put(const BlockLocator& locator, std::int64_t end_ms, ByteView bytes) {
  std::lock_guard lock(impl_->mu);
  const std::string path = Impl::BlockPath(locator) + "?end=" + std::to_string(end_ms);
  auto res = impl_->client.Put(path, reinterpret_cast<const char*>(bytes.data()), bytes.size(),
                               "application/octet-stream");
  Impl::Check(res, "PUT " + path);
  return nlohmann::json::parse(res->body).at("etag").get<std::string>();
}

Bytes HttpBlobStore::Get(const BlockLocator& locator) {
  std::lock_guard lock(impl_->mu);
  const std::string path = Impl::BlockPath(locator);
  auto res = impl_->client.Get(path);
  Impl::Check(res, "GET " + path);
  return Bytes(res->body.begin(), res->body.end());
}

std::vector<BlockMeta> HttpBlobStore::List(const CameraId& camera, std::int64_t from_ms, std::int64_t to_ms) {
  std::lock_guard lock(impl_->mu);
  const std::string path = "/v1/cameras/" + CameraHex(camera) + "/blocks?from=" + std::to_string(from_ms) +
                           "&to=" + std::to_string(to_ms);
  auto res = impl_->client.Get(path);
  Impl::Check(res, "GET " + path);
  std::vector<BlockMeta> out;
  try {
    for (const auto& j : nlohmann::json::parse(res->body)) {
      out.push_back({{camera, j.at("start_ms").get<std::int64_t>()},
                     j.at("end_ms").get<std::int64_t>(),
                     j.at("size").get<std::uint64_t>(),
                     j.at("etag").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kStorageUnavailable, std::string("bad listing: ") + e.what());
  }
  return out;
}

void HttpBlobStore::RemoteTamper(const BlockLocator& locator, std::size_t offset, std::uint8_t xor_mask) {
  std::lock_guard lock(impl_->mu);
  const std::string path = Impl::BlockPath(locator) + "/tamper?offset=" + std::to_string(offset) +
                           "&xor=" + std::to_string(xor_mask);
  auto res = impl_->client.Post(path);
  Impl::Check(res, "POST " + path);
}

std::unique_ptr<BlobStore> OpenStore(const std::string& url) {
  if (url.rfind("http://", 0) == 0) return std::make_unique<HttpBlobStore>(url);
  if (url == "memory:") return std::make_unique<MemoryBlobStore>();
  if (url.rfind("file:", 0) == 0) return std::make_unique<FileBlobStore>(url.substr(5));
  return std::make_unique<FileBlobStore>(url);
}

}  // namespace cactus::storage
