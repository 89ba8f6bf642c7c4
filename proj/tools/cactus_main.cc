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

// cactus: command line driver for the storage service, camera, owner and
// delegatee nodes, scripted attacks and the benchmark harness.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "cactus/admin.h"
#include "cactus/camera.h"
#include "cactus/client.h"
#include "cactus/config.h"
#include "cactus/error.h"
#include "cactus/keytree.h"
#include "cactus/pairing.h"
#include "cactus/storage.h"

namespace cactus::cli {
namespace {

namespace fs = std::filesystem;
using protocols::CameraContext;
using protocols::DelegateeContext;
using protocols::OwnerContext;

constexpr int kUsageExit = 2;

std::atomic<bool> g_stop{false};
extern "C" void OnSignal(int) { g_stop = true; }

std::int64_t WallNowMs() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Bytes ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIoError, "cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string ReadText(const fs::path& path) {
  const Bytes raw = ReadFile(path);
  return std::string(raw.begin(), raw.end());
}

template <typename Container>
void WriteFileAtomic(const fs::path& path, const Container& bytes) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) Fail(ErrorCode::kIoError, "cannot write " + tmp.string());
  }
  fs::permissions(tmp, fs::perms::owner_read | fs::perms::owner_write, ec);
  fs::rename(tmp, path, ec);
  if (ec) Fail(ErrorCode::kIoError, "cannot replace " + path.string() + ": " + ec.message());
}

// Files under --state-dir.
struct StateDir {
  fs::path root;

  fs::path camera() const { return root / "camera.state"; }
  fs::path owner() const { return root / "owner.state"; }
  fs::path cursor() const { return root / "record.cursor"; }

  CameraContext LoadCamera() const { return CameraContext::Deserialize(ReadFile(camera())); }
  OwnerContext LoadOwner() const { return OwnerContext::Deserialize(ReadFile(owner())); }
  void Save(const CameraContext& c) const { WriteFileAtomic(camera(), c.Serialize()); }
  void Save(const OwnerContext& o) const { WriteFileAtomic(owner(), o.Serialize()); }
};

enum class Output { kText, kJson, kCsv };

void AddOutputOption(CLI::App* cmd, Output& output) {
  cmd->add_option("--output", output, "Output format")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, Output>{{"text", Output::kText}, {"json", Output::kJson}, {"csv", Output::kCsv}},
          CLI::ignore_case));
}

std::string FormatBytes(std::uint64_t bytes) {
  static const char* kUnits[] = {"B", "KiB", "MiB", "GiB", "TiB", "PiB"};
  int unit = 0;
  std::uint64_t whole = bytes;
  while (whole >= 1024 && whole % 1024 == 0 && unit < 5) {
    whole /= 1024;
    ++unit;
  }
  return std::to_string(whole) + " " + kUnits[unit];
}

// ---- serve-storage ----

struct ServeArgs {
  std::string listen = "127.0.0.1:8080";
  std::string data_dir;
  std::uint64_t capacity = 0;
  bool allow_tamper = false;
};

int ServeStorage(const ServeArgs& args) {
  const auto colon = args.listen.rfind(':');
  if (colon == std::string::npos) Fail(ErrorCode::kInvalidArgument, "--listen expects HOST:PORT");
  const std::string host = args.listen.substr(0, colon);
  const int port = std::stoi(args.listen.substr(colon + 1));
  const std::optional<std::uint64_t> capacity = args.capacity ? std::optional(args.capacity) : std::nullopt;

  std::unique_ptr<storage::BlobStore> backend;
  if (args.data_dir.empty()) {
    backend = std::make_unique<storage::MemoryBlobStore>(capacity);
  } else {
    backend = std::make_unique<storage::FileBlobStore>(args.data_dir, capacity);
  }
  storage::StorageServer server(*backend, args.allow_tamper);
  const int bound = server.Start(host, port);
  std::printf("listening on http://%s:%d\n", host.c_str(), bound);
  std::fflush(stdout);
  std::signal(SIGINT, OnSignal);
  std::signal(SIGTERM, OnSignal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.Stop();
  return 0;
}

// ---- init ----

struct InitArgs {
  int depth = 32;
  std::uint32_t epoch_seconds = 10;
  std::optional<std::int64_t> origin_ms;
  std::string wifi = "cactus-wifi";
};

int Init(const StateDir& state, const InitArgs& args) {
  CameraContext camera =
      fs::exists(state.camera()) ? state.LoadCamera() : CameraContext::Manufacture();
  if (camera.initialized()) Fail(ErrorCode::kAlreadyInitialized, state.camera().string());

  protocols::OwnerInitOptions options;
  options.wifi_credentials = Bytes(args.wifi.begin(), args.wifi.end());
  options.depth = args.depth;
  options.epoch_seconds = args.epoch_seconds;
  options.now_ms = args.origin_ms.value_or(WallNowMs());
  transport::Link link;
  auto result = protocols::InitPairing(camera, options, link);

  state.Save(result.camera);
  state.Save(result.owner);
  std::error_code ec;
  fs::remove(state.cursor(), ec);
  std::printf("camera %s initialized (depth %d, %u s epochs, origin %lld)\n",
              ToHex(ByteView(result.camera.camera_id)).c_str(), args.depth, args.epoch_seconds,
              static_cast<long long>(options.now_ms));
  std::printf("passphrase: %s\n", result.passphrase.ToString().c_str());
  return 0;
}

// ---- record ----

struct RecordArgs {
  std::uint64_t frames = 100;
  std::string config_file;
  std::optional<std::string> storage;
  std::optional<int> frame_rate;
  std::optional<std::size_t> frame_bytes;
  std::optional<std::size_t> block_size;
  std::optional<std::int64_t> start_ms;
  bool realtime = false;
  Output output = Output::kText;
};

camera::CameraConfig LoadCameraConfig(const std::string& file) {
  return file.empty() ? camera::CameraConfig{} : camera::CameraConfig::FromKeyValues(LoadKeyValues(file));
}

int Record(const StateDir& state, const RecordArgs& args) {
  camera::CameraConfig config = LoadCameraConfig(args.config_file);
  if (args.storage) config.storage_url = *args.storage;
  if (args.frame_rate) config.frame_rate = *args.frame_rate;
  if (args.frame_bytes) config.frame_bytes = *args.frame_bytes;
  if (args.block_size) config.block_size = *args.block_size;
  config.realtime = args.realtime;
  config.Validate();
  for (const auto& w : config.Warnings()) std::fprintf(stderr, "warning: %s\n", w.c_str());

  CameraContext cam = state.LoadCamera();
  const auto& params = cam.require().store.params();
  KeyValues cursor = fs::exists(state.cursor()) ? LoadKeyValues(state.cursor()) : KeyValues{};
  std::int64_t start = args.realtime ? WallNowMs() : GetInt(cursor, "next_start_ms", params.origin_ms);
  if (args.start_ms) start = *args.start_ms;

  auto store = storage::OpenStore(config.storage_url);
  camera::CameraNode node(config, cam, *store);
  node.set_next_counter(static_cast<std::uint64_t>(GetInt(cursor, "next_counter", 0)));

  std::optional<Error> halt;
  try {
    node.Record(start, args.frames);
  } catch (const Error& e) {
    halt = e;
  }
  const auto c = node.counters();
  const std::int64_t next_start = start + static_cast<std::int64_t>(c.frames_captured) * 1000 / config.frame_rate;
  state.Save(cam);
  const std::string cursor_text = "next_start_ms = " + std::to_string(next_start) +
                                  "\nnext_counter = " + std::to_string(node.next_counter()) + "\n";
  WriteFileAtomic(state.cursor(), cursor_text);

  switch (args.output) {
    case Output::kCsv: std::fputs(node.stats().ToCsv().c_str(), stdout); break;
    case Output::kJson: {
      nlohmann::ordered_json j;
      j["frames_captured"] = c.frames_captured;
      j["blocks_signed"] = c.blocks_signed;
      j["blocks_uploaded"] = c.blocks_uploaded;
      j["blocks_pending"] = c.blocks_pending;
      j["blocks_dropped"] = c.blocks_dropped;
      j["upload_failures"] = c.upload_failures;
      j["rotations"] = c.rotations;
      j["stages"] = nlohmann::ordered_json::parse(node.stats().ToJson());
      std::puts(j.dump().c_str());
      break;
    }
    case Output::kText:
      std::printf("recorded %llu frames from %lld: %llu blocks signed, %llu uploaded, %zu pending, %llu dropped\n",
                  static_cast<unsigned long long>(c.frames_captured), static_cast<long long>(start),
                  static_cast<unsigned long long>(c.blocks_signed), static_cast<unsigned long long>(c.blocks_uploaded),
                  c.blocks_pending, static_cast<unsigned long long>(c.blocks_dropped));
      break;
  }
  if (halt) throw *halt;
  if (c.blocks_pending > 0) Fail(ErrorCode::kStorageUnavailable, std::to_string(c.blocks_pending) + " blocks not uploaded");
  return 0;
}

// ---- stream ----

struct StreamArgs {
  std::string storage = "memory:";
  std::string as;  // delegatee state file; owner when empty
  std::optional<std::int64_t> from_ms;
  std::optional<std::int64_t> to_ms;
  bool live = false;
  std::int64_t duration_ms = 10'000;
  std::int64_t target_delay_ms = client::kDefaultTargetDelayMs;
  std::string delays_file;
  bool strict = false;
  Output output = Output::kText;
};

int StreamCmd(const StateDir& state, const StreamArgs& args) {
  std::optional<OwnerContext> owner;
  std::optional<DelegateeContext> delegatee;
  protocols::ViewerCredentials viewer;
  if (args.as.empty()) {
    owner = state.LoadOwner();
    viewer = owner->viewer();
  } else {
    delegatee = DelegateeContext::Deserialize(ReadFile(args.as));
    viewer = delegatee->viewer();
  }
  client::StreamOptions o;
  o.mode = args.live ? client::StreamMode::kLive : client::StreamMode::kRange;
  if (args.from_ms) o.from_ms = *args.from_ms;
  if (args.to_ms) o.to_ms = *args.to_ms;
  o.live_duration_ms = args.duration_ms;
  o.target_delay_ms = args.target_delay_ms;

  auto store = storage::OpenStore(args.storage);
  const auto summary = client::Stream(viewer, *store, o, [](const client::StreamEvent& ev) {
    if (ev.kind == client::EventKind::kQuarantined) {
      std::fprintf(stderr, "alert: block %lld failed verification, quarantined\n",
                   static_cast<long long>(ev.block.start_ms));
    } else if (ev.kind == client::EventKind::kUndecryptable) {
      std::fprintf(stderr, "alert: frame %lld: %s\n", static_cast<long long>(ev.timestamp_ms),
                   std::string(ErrorCodeName(*ev.error)).c_str());
    }
  });
  if (!args.delays_file.empty()) WriteFileAtomic(args.delays_file, summary.report.DelaysJsonl());

  switch (args.output) {
    case Output::kCsv: std::fputs(summary.report.ToCsv().c_str(), stdout); break;
    case Output::kJson: {
      nlohmann::ordered_json j;
      j["received"] = summary.received;
      j["rendered"] = summary.rendered;
      j["dropped"] = summary.dropped;
      j["no_access"] = summary.no_access;
      j["undecryptable"] = summary.undecryptable;
      j["quarantined"] = summary.quarantined.size();
      j["stages"] = nlohmann::ordered_json::parse(summary.report.stages.ToJson());
      std::puts(j.dump().c_str());
      break;
    }
    case Output::kText:
      std::printf("rendered %llu, dropped %llu, no access %llu, undecryptable %llu, quarantined blocks %zu\n",
                  static_cast<unsigned long long>(summary.rendered), static_cast<unsigned long long>(summary.dropped),
                  static_cast<unsigned long long>(summary.no_access),
                  static_cast<unsigned long long>(summary.undecryptable), summary.quarantined.size());
      break;
  }
  if (args.strict) {
    if (!summary.quarantined.empty()) Fail(ErrorCode::kSignatureInvalid, "tampered blocks in storage");
    if (summary.undecryptable > 0) Fail(ErrorCode::kTagMismatch, "tampered frames in storage");
  }
  return 0;
}

// ---- delegate / delete / reset / recover ----

struct RangeArgs {
  keytree::Epoch from = 0;
  keytree::Epoch to = 0;
  std::string out;
  std::optional<std::int64_t> now_ms;
};

int Delegate(const StateDir& state, const RangeArgs& args) {
  const OwnerContext owner = state.LoadOwner();
  transport::Link link;
  const auto result = protocols::DelegatePairing(owner, {args.from, args.to}, link);
  WriteFileAtomic(args.out, result.delegatee.Serialize());
  std::printf("delegated epochs [%llu, %llu] as %zu key nodes to %s\n", static_cast<unsigned long long>(args.from),
              static_cast<unsigned long long>(args.to), result.nodes_sent, args.out.c_str());
  return 0;
}

int Delete(const StateDir& state, const RangeArgs& args) {
  OwnerContext owner = state.LoadOwner();
  CameraContext cam = state.LoadCamera();
  transport::Link link;
  protocols::RunAdmin(owner, cam, protocols::AdminOp::kDeleteRange, keytree::EpochRange{args.from, args.to}, link,
                      args.now_ms.value_or(WallNowMs()));
  state.Save(cam);
  state.Save(owner);
  std::printf("deleted epochs [%llu, %llu]; owner keeps %zu nodes\n", static_cast<unsigned long long>(args.from),
              static_cast<unsigned long long>(args.to), owner.store.size());
  return 0;
}

int Reset(const StateDir& state, std::optional<std::int64_t> now_ms) {
  OwnerContext owner = state.LoadOwner();
  CameraContext cam = state.LoadCamera();
  transport::Link link;
  protocols::RunAdmin(owner, cam, protocols::AdminOp::kFactoryReset, std::nullopt, link,
                      now_ms.value_or(WallNowMs()));
  state.Save(cam);
  state.Save(owner);
  std::puts("camera reset to factory state");
  return 0;
}

int Recover(const StateDir& state, const std::string& words) {
  CameraContext cam = state.LoadCamera();
  transport::Link link;
  const OwnerContext owner = protocols::RecoverOverRadio(cam, link, Passphrase::Parse(words));
  state.Save(owner);
  std::printf("recovered owner access to camera %s (%zu key nodes)\n", ToHex(ByteView(owner.camera_id)).c_str(),
              owner.store.size());
  return 0;
}

// ---- attack ----

// {"scenario": "init" | "delegate", "seed": n, "rules": [...], "sessions": n,
//  "range": [a, b]}
int Attack(const std::string& script_file) {
  const std::string text = ReadText(script_file);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("attack script: ") + e.what());
  }
  const std::string scenario = doc.value("scenario", std::string("init"));
  protocols::RegisterMessageNames();
  auto adversary = std::make_shared<transport::AdversaryScript>(transport::AdversaryScript::FromJson(text));
  transport::Link link(adversary);

  auto report = [&](const protocols::SessionRun& run) {
    for (const auto& e : adversary->events()) {
      std::printf("adversary %s on %s msg %d (%zu bytes)\n", std::string(transport::ActionName(e.action)).c_str(),
                  std::string(transport::ChannelKindName(e.channel)).c_str(), e.msg_type ? int(*e.msg_type) : -1,
                  e.size);
    }
    for (const auto& entry : run.emitted) {
      std::printf("party %d sent %s over %s (%zu bytes)\n", entry.from,
                  std::string(protocols::MsgTypeName(static_cast<protocols::MsgType>(entry.msg_type))).c_str(),
                  std::string(transport::ChannelKindName(entry.channel)).c_str(), entry.size);
    }
  };

  const std::int64_t now = WallNowMs();
  protocols::OwnerInitOptions options;
  options.wifi_credentials = {'w', 'i', 'f', 'i'};
  options.depth = doc.value("depth", 16);
  options.epoch_seconds = doc.value("epoch_seconds", 10u);
  options.now_ms = now;

  if (scenario == "init") {
    // Earlier sessions let a replay rule capture traffic; the last one decides.
    const int sessions = doc.value("sessions", 1);
    if (sessions < 1) Fail(ErrorCode::kInvalidArgument, "sessions must be positive");
    for (int i = 1; i < sessions; ++i) {
      protocols::CameraInitSession cam(CameraContext::Manufacture());
      protocols::OwnerInitSession owner(options);
      protocols::RunOverLink(cam, owner, link);
      std::printf("session %d: %s\n", i, cam.secrets_accepted() ? "completed" : "aborted");
    }
    protocols::CameraInitSession cam(CameraContext::Manufacture());
    protocols::OwnerInitSession owner(options);
    const auto run = protocols::RunOverLink(cam, owner, link);
    report(run);
    if (cam.secrets_accepted()) {
      std::puts("result: initialization completed");
      return 0;
    }
    std::printf("result: aborted with %s\n",
                std::string(ErrorCodeName(run.first_failure.value_or(ErrorCode::kTimeout))).c_str());
    Fail(run.first_failure.value_or(ErrorCode::kTimeout), run.failure_detail);
  }
  if (scenario == "delegate") {
    transport::Link honest;
    const auto init = protocols::InitPairing(CameraContext::Manufacture(), options, honest);
    const auto range = doc.value("range", std::vector<keytree::Epoch>{0, 0});
    if (range.size() != 2) Fail(ErrorCode::kInvalidArgument, "range must be [first, last]");
    protocols::DelegatorSession delegator(init.owner, {range[0], range[1]});
    protocols::DelegateeSession delegatee;
    const auto run = protocols::RunOverLink(delegator, delegatee, link);
    report(run);
    if (delegatee.keys_accepted()) {
      std::puts("result: delegation completed");
      return 0;
    }
    std::printf("result: aborted with %s\n",
                std::string(ErrorCodeName(run.first_failure.value_or(ErrorCode::kTimeout))).c_str());
    Fail(run.first_failure.value_or(ErrorCode::kTimeout), run.failure_detail);
  }
  Fail(ErrorCode::kInvalidArgument, "unknown scenario '" + scenario + "'");
}

// ---- bench ----

struct BenchArgs {
  std::uint64_t frames = 1000;
  std::size_t frame_bytes = 100 * 1024;
  int frame_rate = 10;
  std::size_t block_size = 10;
  bool table_only = false;
  Output output = Output::kText;
};

struct TableRow {
  int depth;
  std::uint32_t epoch_seconds;
  double years;
  std::uint64_t storage;
};

std::vector<TableRow> LifespanTable() {
  std::vector<TableRow> rows;
  for (std::uint32_t delta : {10u, 60u}) {
    for (int depth = 24; depth <= 32; depth += 2) {
      const keytree::TreeParams p{depth, delta, 0};
      rows.push_back({depth, delta, keytree::LifespanYears(p), keytree::WorstCaseStorageBytes(p)});
    }
  }
  return rows;
}

int Bench(const BenchArgs& args) {
  const auto rows = LifespanTable();
  nlohmann::ordered_json json;
  if (args.output == Output::kText) {
    std::puts("depth  epoch   lifespan      worst-case key storage");
    for (const auto& r : rows) {
      std::printf("%5d  %3us   %6.0f years  %s\n", r.depth, r.epoch_seconds, std::round(r.years),
                  FormatBytes(r.storage).c_str());
    }
  } else if (args.output == Output::kCsv) {
    std::puts("depth,epoch_seconds,lifespan_years,worst_case_storage_bytes");
    for (const auto& r : rows) {
      std::printf("%d,%u,%.0f,%llu\n", r.depth, r.epoch_seconds, std::round(r.years),
                  static_cast<unsigned long long>(r.storage));
    }
  } else {
    for (const auto& r : rows) {
      json["lifespan"].push_back({{"depth", r.depth},
                                  {"epoch_seconds", r.epoch_seconds},
                                  {"lifespan_years", std::llround(r.years)},
                                  {"worst_case_storage_bytes", r.storage}});
    }
  }
  if (args.table_only) {
    if (args.output == Output::kJson) std::puts(json.dump().c_str());
    return 0;
  }

  // Record and play back `frames` frames against in-process storage so only
  // the cryptographic stages are measured.
  protocols::OwnerInitOptions options;
  options.wifi_credentials = {'b'};
  options.depth = 32;
  options.epoch_seconds = 10;
  options.now_ms = 0;
  transport::Link link;
  auto init = protocols::InitPairing(CameraContext::Manufacture(), options, link);

  camera::CameraConfig config;
  config.frame_rate = args.frame_rate;
  config.frame_bytes = args.frame_bytes;
  config.block_size = args.block_size;
  storage::MemoryBlobStore store;
  camera::CameraNode node(config, init.camera, store);
  node.Record(0, args.frames);
  const auto summary = client::Stream(init.owner.viewer(), store, {});

  if (args.output == Output::kText) {
    std::printf("\ncamera pipeline, %llu frames of %zu bytes, blocks of %zu\n",
                static_cast<unsigned long long>(args.frames), args.frame_bytes, args.block_size);
    std::fputs(node.stats().ToCsv().c_str(), stdout);
    std::puts("\nviewer pipeline");
    std::fputs(summary.report.ToCsv().c_str(), stdout);
  } else if (args.output == Output::kCsv) {
    std::puts("");
    std::fputs(node.stats().ToCsv().c_str(), stdout);
    const std::string viewer_csv = summary.report.ToCsv();
    std::fputs(viewer_csv.substr(viewer_csv.find('\n') + 1).c_str(), stdout);
  } else {
    json["camera"] = nlohmann::ordered_json::parse(node.stats().ToJson());
    json["viewer"] = nlohmann::ordered_json::parse(summary.report.stages.ToJson());
    std::puts(json.dump().c_str());
  }
  return 0;
}

int Main(int argc, char** argv) {
  CLI::App app{"Cactus camera, viewer and storage simulator"};
  app.require_subcommand(1);
  std::string state_dir = "cactus-state";
  app.add_option("--state-dir", state_dir, "Directory holding camera/owner state files")->capture_default_str();

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve-storage", "Run the untrusted blob store over HTTP");
  serve_cmd->add_option("--listen", serve.listen, "HOST:PORT; port 0 picks a free one")->capture_default_str();
  serve_cmd->add_option("--data-dir", serve.data_dir, "Persist blocks here (in memory when omitted)");
  serve_cmd->add_option("--capacity-bytes", serve.capacity, "Reject writes beyond this many bytes");
  serve_cmd->add_flag("--allow-tamper", serve.allow_tamper, "Enable the block tamper endpoint");

  InitArgs init;
  auto* init_cmd = app.add_subcommand("init", "Pair a new owner with the camera and print the passphrase");
  init_cmd->add_option("--depth", init.depth, "Key tree depth")->capture_default_str();
  init_cmd->add_option("--epoch-seconds", init.epoch_seconds, "Seconds per epoch")->capture_default_str();
  init_cmd->add_option("--origin-ms", init.origin_ms, "Tree origin (default: now)");
  init_cmd->add_option("--wifi", init.wifi, "Opaque wifi credentials handed to the camera");

  RecordArgs rec;
  auto* record_cmd = app.add_subcommand("record", "Record, encrypt, sign and upload synthetic frames");
  record_cmd->add_option("--frames", rec.frames, "Number of frames")->capture_default_str();
  record_cmd->add_option("--config", rec.config_file, "key=value camera config file");
  record_cmd->add_option("--storage", rec.storage, "Store URL (http://, file:, memory:)");
  record_cmd->add_option("--frame-rate", rec.frame_rate, "Frames per second");
  record_cmd->add_option("--frame-bytes", rec.frame_bytes, "Payload size");
  record_cmd->add_option("--block-size", rec.block_size, "Frames per signed block");
  record_cmd->add_option("--start-ms", rec.start_ms, "Timestamp of the first frame");
  record_cmd->add_flag("--realtime", rec.realtime, "Pace frames at the frame rate, stamped with wall time");
  AddOutputOption(record_cmd, rec.output);

  StreamArgs st;
  auto* stream_cmd = app.add_subcommand("stream", "Download, verify and decrypt recorded frames");
  stream_cmd->add_option("--storage", st.storage, "Store URL")->capture_default_str();
  stream_cmd->add_option("--as", st.as, "Stream with a delegatee state file instead of the owner");
  stream_cmd->add_option("--from-ms", st.from_ms, "First timestamp");
  stream_cmd->add_option("--to-ms", st.to_ms, "Last timestamp");
  stream_cmd->add_flag("--live", st.live, "Poll for new blocks and play them with frame dropping");
  stream_cmd->add_option("--duration-ms", st.duration_ms, "Live mode running time")->capture_default_str();
  stream_cmd->add_option("--target-delay-ms", st.target_delay_ms, "Live playback target")->capture_default_str();
  stream_cmd->add_option("--delays", st.delays_file, "Write the per-frame delay series as JSONL");
  stream_cmd->add_flag("--strict", st.strict, "Exit nonzero when any block or frame fails verification");
  AddOutputOption(stream_cmd, st.output);

  RangeArgs delegate;
  auto* delegate_cmd = app.add_subcommand("delegate", "Grant a new delegatee access to an epoch range");
  delegate_cmd->add_option("--from", delegate.from, "First epoch")->required();
  delegate_cmd->add_option("--to", delegate.to, "Last epoch")->required();
  delegate_cmd->add_option("--out", delegate.out, "Delegatee state file")->required();

  RangeArgs del;
  auto* delete_cmd = app.add_subcommand("delete", "Cryptographically delete an epoch range");
  delete_cmd->add_option("--from", del.from, "First epoch")->required();
  delete_cmd->add_option("--to", del.to, "Last epoch")->required();
  delete_cmd->add_option("--now-ms", del.now_ms, "Request timestamp (default: now)");

  std::optional<std::int64_t> reset_now;
  auto* reset_cmd = app.add_subcommand("reset", "Factory-reset the camera");
  reset_cmd->add_option("--now-ms", reset_now, "Request timestamp (default: now)");

  std::string passphrase;
  auto* recover_cmd = app.add_subcommand("recover", "Restore owner access from the camera's escrow");
  recover_cmd->add_option("--passphrase", passphrase, "Recovery words")->required();

  std::string script;
  auto* attack_cmd = app.add_subcommand("attack", "Run a pairing protocol under a scripted adversary");
  attack_cmd->add_option("--script", script, "Adversary script (JSON)")->required()->check(CLI::ExistingFile);

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Lifespan/storage table and per-stage delays");
  bench_cmd->add_option("--frames", bench.frames, "Frames to time")->capture_default_str();
  bench_cmd->add_option("--frame-bytes", bench.frame_bytes, "Payload size")->capture_default_str();
  bench_cmd->add_option("--frame-rate", bench.frame_rate, "Frames per second")->capture_default_str();
  bench_cmd->add_option("--block-size", bench.block_size, "Frames per block")->capture_default_str();
  bench_cmd->add_flag("--table-only", bench.table_only, "Only print the lifespan/storage table");
  AddOutputOption(bench_cmd, bench.output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageExit;
  }

  const StateDir state{state_dir};
  try {
    if (*serve_cmd) return ServeStorage(serve);
    if (*init_cmd) return Init(state, init);
    if (*record_cmd) return Record(state, rec);
    if (*stream_cmd) return StreamCmd(state, st);
    if (*delegate_cmd) return Delegate(state, delegate);
    if (*delete_cmd) return Delete(state, del);
    if (*reset_cmd) return Reset(state, reset_now);
    if (*recover_cmd) return Recover(state, passphrase);
    if (*attack_cmd) return Attack(script);
    if (*bench_cmd) return Bench(bench);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kUsageExit;
}

}  // namespace
}  // namespace cactus::cli

int main(int argc, char** argv) { return cactus::cli::Main(argc, argv); }
