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

#include <benchmark/benchmark.h>

#include <random>

#include "cactus/client.h"
#include "cactus/keytree.h"
#include "cactus/storage.h"
#include "cactus/streamcrypto.h"

namespace cactus {
namespace {

using keytree::KeyStore;
using keytree::TreeParams;

Key256 Seed() {
  std::array<std::uint8_t, 32> raw{};
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<std::uint8_t>(i * 7 + 1);
  return Key256(raw);
}

const stream::SigningKeypair& Signer() {
  static const auto key = stream::SigningKeypair::Generate();
  return key;
}

Bytes Payload(std::size_t n) {
  std::mt19937_64 rng(n);
  Bytes b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return b;
}

// Leaf derivation from the root: one HKDF step per level.
void BM_ExtractFromRoot(benchmark::State& state) {
  const TreeParams params{static_cast<int>(state.range(0)), 10, 0};
  const KeyStore store = KeyStore::FromSeed(params, Seed());
  keytree::Epoch e = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(store.Extract(e));
    e = (e + 7919) % params.leaf_count();
  }
}
BENCHMARK(BM_ExtractFromRoot)->Arg(16)->Arg(24)->Arg(32);

// What the camera pays after rotation: derive from its frontier.
void BM_ExtractFromFrontier(benchmark::State& state) {
  const TreeParams params{32, 10, 0};
  const KeyStore store = KeyStore::FromSeed(params, Seed()).AdvanceFrontier(123'456);
  keytree::Epoch e = 123'457;
  for (auto _ : state) benchmark::DoNotOptimize(store.Extract(e++));
}
BENCHMARK(BM_ExtractFromFrontier);

void BM_AdvanceFrontier(benchmark::State& state) {
  const TreeParams params{32, 10, 0};
  KeyStore store = KeyStore::FromSeed(params, Seed());
  keytree::Epoch e = 0;
  for (auto _ : state) store = store.AdvanceFrontier(e++);
}
BENCHMARK(BM_AdvanceFrontier);

void BM_CoverSet(benchmark::State& state) {
  const TreeParams params{32, 10, 0};
  std::mt19937_64 rng(1);
  for (auto _ : state) {
    const keytree::Epoch a = rng() % params.leaf_count();
    const keytree::Epoch b = a + rng() % (params.leaf_count() - a);
    benchmark::DoNotOptimize(keytree::CoverSet(params, {a, b}));
  }
}
BENCHMARK(BM_CoverSet);

void BM_EncryptFrame(benchmark::State& state) {
  const TreeParams params{32, 10, 0};
  const auto key = KeyStore::FromSeed(params, Seed()).Extract(0);
  const stream::Frame frame{Payload(static_cast<std::size_t>(state.range(0))), 100};
  for (auto _ : state) benchmark::DoNotOptimize(stream::EncryptFrame(key, params, frame));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_EncryptFrame)->Arg(1024)->Arg(100 * 1024);

void BM_DecryptFrame(benchmark::State& state) {
  const TreeParams params{32, 10, 0};
  const auto key = KeyStore::FromSeed(params, Seed()).Extract(0);
  const auto encrypted =
      stream::EncryptFrame(key, params, {Payload(static_cast<std::size_t>(state.range(0))), 100});
  for (auto _ : state) benchmark::DoNotOptimize(stream::DecryptFrame(key, encrypted));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_DecryptFrame)->Arg(1024)->Arg(100 * 1024);

std::vector<stream::EncryptedFrame> BlockFrames(std::size_t n) {
  const TreeParams params{32, 10, 0};
  const auto key = KeyStore::FromSeed(params, Seed()).Extract(0);
  std::vector<stream::EncryptedFrame> frames;
  for (std::size_t i = 0; i < n; ++i) {
    frames.push_back(stream::EncryptFrame(key, params, {Payload(256), static_cast<std::int64_t>(i * 100)}));
  }
  return frames;
}

void BM_SignBlock(benchmark::State& state) {
  const auto frames = BlockFrames(static_cast<std::size_t>(state.range(0)));
  const stream::CameraId cam{};
  Signer();  // key generation stays out of the timed loop
  for (auto _ : state) benchmark::DoNotOptimize(stream::SignBlock(Signer(), cam, frames));
}
BENCHMARK(BM_SignBlock)->Arg(10)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_VerifyBlock(benchmark::State& state) {
  const auto block = stream::SignBlock(Signer(), {}, BlockFrames(static_cast<std::size_t>(state.range(0))));
  const auto pk = Signer().verifying_key();
  for (auto _ : state) benchmark::DoNotOptimize(stream::VerifyBlock(pk, block));
}
BENCHMARK(BM_VerifyBlock)->Arg(10)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_MemoryStoreList(benchmark::State& state) {
  storage::MemoryBlobStore store;
  const storage::CameraId cam{1};
  for (int i = 0; i < state.range(0); ++i) store.Put({cam, i * 1000}, i * 1000 + 999, Bytes(64));
  std::int64_t from = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(store.List(cam, from, from + 60'000));
    from = (from + 17'000) % (state.range(0) * 1000);
  }
}
BENCHMARK(BM_MemoryStoreList)->Arg(1000)->Arg(100'000);

void BM_DropScheduler(benchmark::State& state) {
  client::DropScheduler s;
  double d = 2000;
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.Decide(d, 2000));
    d = d > 6000 ? 2000 : d + 1.5;
  }
}
BENCHMARK(BM_DropScheduler);

}  // namespace
}  // namespace cactus

BENCHMARK_MAIN();
