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

#include "cactus/streamcrypto.h"

#include <string>

namespace cactus::stream {
namespace {

constexpr char kBlockMagic[] = "CBK1";

// The whole 16-byte IV feeds GCM so that every stored IV bit is authenticated.
ByteView NonceOf(const Iv& iv) { return ByteView(iv.data(), iv.size()); }

}  // namespace

std::array<std::uint8_t, 8> TimestampAad(std::int64_t timestamp_ms) {
  std::array<std::uint8_t, 8> out;
  const auto v = static_cast<std::uint64_t>(timestamp_ms);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * (7 - i)));
  return out;
}

EncryptedFrame EncryptFrame(const keytree::NodeKey& key, const keytree::TreeParams& params,
                            const Frame& frame) {
  if (frame.payload.empty()) Fail(ErrorCode::kInvalidArgument, "empty frame payload");
  const keytree::Epoch epoch = keytree::EpochOf(params, frame.timestamp_ms);
  if (key.id() != keytree::NodeId::Leaf(params.depth, epoch)) {
    Fail(ErrorCode::kEpochMismatch, "frame at " + std::to_string(frame.timestamp_ms) +
                                        " belongs to epoch " + std::to_string(epoch));
  }
  EncryptedFrame out;
  out.timestamp_ms = frame.timestamp_ms;
  crypto::RandomBytes(out.iv);
  out.ciphertext.resize(frame.payload.size());
  const auto aad = TimestampAad(frame.timestamp_ms);
  out.tag = crypto::AesGcmSeal(key.key().span(), NonceOf(out.iv), aad, frame.payload, out.ciphertext);
  return out;
}

Frame DecryptFrame(const keytree::NodeKey& key, const EncryptedFrame& frame) {
  Frame out;
  out.timestamp_ms = frame.timestamp_ms;
  out.payload.resize(frame.ciphertext.size());
  const auto aad = TimestampAad(frame.timestamp_ms);
  if (!crypto::AesGcmOpen(key.key().span(), NonceOf(frame.iv), aad, frame.ciphertext, frame.tag,
                          out.payload)) {
    Fail(ErrorCode::kTagMismatch, "frame at " + std::to_string(frame.timestamp_ms));
  }
  return out;
}

Bytes SignedBlock::TagConcatenation() const {
  Bytes out;
  out.reserve(frames.size() * 16);
  for (const auto& f : frames) out.insert(out.end(), f.tag.begin(), f.tag.end());
  return out;
}

Bytes SignedBlock::Encode() const {
  if (frames.size() > UINT16_MAX) Fail(ErrorCode::kInvalidArgument, "too many frames in block");
  if (signature.size() > UINT16_MAX) Fail(ErrorCode::kInvalidArgument, "signature too long");
  ByteWriter w;
  w.Raw(std::string_view(kBlockMagic, 4))
      .Raw(camera_id)
      .U64(static_cast<std::uint64_t>(start_ms))
      .U64(static_cast<std::uint64_t>(end_ms))
      .U16(static_cast<std::uint16_t>(frames.size()));
  for (const auto& f : frames) {
    w.U64(static_cast<std::uint64_t>(f.timestamp_ms)).Raw(f.iv).Raw(f.tag).Blob(f.ciphertext);
  }
  w.U16(static_cast<std::uint16_t>(signature.size())).Raw(signature);
  return std::move(w).bytes();
}

SignedBlock SignedBlock::Decode(ByteView bytes) {
  ByteReader r(bytes, ErrorCode::kMalformedBlock);
  auto magic = r.Raw(4);
  if (!std::equal(magic.begin(), magic.end(), kBlockMagic)) r.Malformed("bad block magic");
  SignedBlock b;
  b.camera_id = r.Array<16>();
  b.start_ms = static_cast<std::int64_t>(r.U64());
  b.end_ms = static_cast<std::int64_t>(r.U64());
  const std::uint16_t count = r.U16();
  if (count == 0) r.Malformed("empty block");
  b.frames.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) {
    EncryptedFrame f;
    f.timestamp_ms = static_cast<std::int64_t>(r.U64());
    f.iv = r.Array<16>();
    f.tag = r.Array<16>();
    auto c = r.Blob();
    f.ciphertext.assign(c.begin(), c.end());
    b.frames.push_back(std::move(f));
  }
  auto sig = r.Raw(r.U16());
  b.signature.assign(sig.begin(), sig.end());
  r.ExpectEnd();
  return b;
}

SignedBlock SignBlock(const SigningKeypair& signer, const CameraId& camera_id,
                      std::vector<EncryptedFrame> frames) {
  if (frames.empty()) Fail(ErrorCode::kEmptyBlock);
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].timestamp_ms <= frames[i - 1].timestamp_ms) {
      Fail(ErrorCode::kNonMonotonicTimestamps, "frame " + std::to_string(i));
    }
  }
  SignedBlock b;
  b.camera_id = camera_id;
  b.start_ms = frames.front().timestamp_ms;
  b.end_ms = frames.back().timestamp_ms;
  b.frames = std::move(frames);
  b.signature = signer.Sign(b.TagConcatenation());
  return b;
}

bool VerifyBlock(const VerifyingKey& key, const SignedBlock& block) {
  if (block.frames.empty()) return false;
  if (block.start_ms != block.frames.front().timestamp_ms ||
      block.end_ms != block.frames.back().timestamp_ms) {
    return false;
  }
  for (std::size_t i = 1; i < block.frames.size(); ++i) {
    if (block.frames[i].timestamp_ms <= block.frames[i - 1].timestamp_ms) return false;
  }
  return key.Verify(block.TagConcatenation(), block.signature);
}

std::vector<FrameOutcome> DecryptBlock(const keytree::KeyProvider& keys, const VerifyingKey& key,
                                       const SignedBlock& block) {
  if (!VerifyBlock(key, block)) Fail(ErrorCode::kSignatureInvalid, "block at " + std::to_string(block.start_ms));
  std::vector<FrameOutcome> out;
  out.reserve(block.frames.size());
  // One key per epoch; consecutive frames usually share it.
  std::optional<keytree::Epoch> cached_epoch;
  std::optional<keytree::NodeKey> cached_key;
  std::optional<ErrorCode> cached_error;
  for (std::size_t i = 0; i < block.frames.size(); ++i) {
    const EncryptedFrame& ef = block.frames[i];
    FrameOutcome outcome;
    outcome.index = i;
    outcome.timestamp_ms = ef.timestamp_ms;
    try {
      const keytree::Epoch epoch = keytree::EpochOf(keys.params(), ef.timestamp_ms);
      if (cached_epoch != epoch) {
        cached_epoch = epoch;
        cached_key.reset();
        cached_error.reset();
        try {
          cached_key.emplace(keys.Extract(epoch));
        } catch (const Error& e) {
          cached_error = e.code();
        }
      }
      if (cached_error) {
        outcome.error = cached_error;
      } else {
        outcome.frame = DecryptFrame(*cached_key, ef);
      }
    } catch (const Error& e) {
      outcome.error = e.code();
    }
    out.push_back(std::move(outcome));
  }
  return out;
}

std::vector<FrameOutcome> DecryptEncodedBlock(const keytree::KeyProvider& keys,
                                              const VerifyingKey& key, ByteView encoded,
                                              const CameraId& expected_camera) {
  SignedBlock block;
  try {
    block = SignedBlock::Decode(encoded);
  } catch (const Error& e) {
    Fail(ErrorCode::kSignatureInvalid, std::string("undecodable block: ") + e.what());
  }
  if (block.camera_id != expected_camera) Fail(ErrorCode::kSignatureInvalid, "block from another camera");
  return DecryptBlock(keys, key, block);
}

}  // namespace cactus::stream
