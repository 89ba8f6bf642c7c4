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

#include "cactus/contexts.h"

#include <algorithm>

namespace cactus::protocols {
namespace {

constexpr std::uint8_t kStateVersion = 1;

void WriteHeader(ByteWriter& w, std::string_view magic) { w.Raw(magic).U8(kStateVersion); }

void ReadHeader(ByteReader& r, std::string_view magic) {
  auto m = r.Raw(4);
  if (!std::equal(m.begin(), m.end(), magic.begin())) r.Malformed("bad state magic");
  if (r.U8() != kStateVersion) r.Malformed("unsupported state version");
}

SecureBytes Finish(ByteWriter& w) {
  Bytes plain = std::move(w).bytes();
  SecureBytes out(plain.begin(), plain.end());
  SecureZero(plain.data(), plain.size());
  return out;
}

void WriteStore(ByteWriter& w, const keytree::KeyStore& store) {
  const SecureBytes s = store.Serialize();
  w.Blob(ByteView(s));
}

keytree::KeyStore ReadStore(ByteReader& r) {
  try {
    return keytree::KeyStore::Deserialize(r.Blob());
  } catch (const Error& e) {
    r.Malformed(std::string("key store: ") + e.what());
  }
}

stream::VerifyingKey ReadVerifyingKey(ByteReader& r) {
  auto der = r.Blob();
  try {
    return stream::VerifyingKey::FromDer(der);
  } catch (const Error&) {
    r.Malformed("bad camera key");
  }
}

IdentityKeypair ReadIdentity(ByteReader& r) { return IdentityKeypair::Deserialize(r.Blob()); }

void WriteIdentity(ByteWriter& w, const IdentityKeypair& id) {
  const SecureBytes s = id.Serialize();
  w.Blob(ByteView(s));
}

}  // namespace

// ---- OwnerContext ----

SecureBytes OwnerContext::Serialize() const {
  ByteWriter w;
  WriteHeader(w, "COWN");
  WriteIdentity(w, identity);
  w.Raw(ByteView(camera_id)).Blob(camera_key.ToDer());
  WriteStore(w, store);
  w.Blob(escrow.Encode()).Blob(wifi_credentials);
  return Finish(w);
}

OwnerContext OwnerContext::Deserialize(ByteView bytes) {
  ByteReader r(bytes, ErrorCode::kMalformedMessage);
  ReadHeader(r, "COWN");
  OwnerContext c;
  c.identity = ReadIdentity(r);
  c.camera_id = r.Array<16>();
  c.camera_key = ReadVerifyingKey(r);
  c.store = ReadStore(r);
  c.escrow = EscrowMaterial::Decode(r.Blob());
  auto wifi = r.Blob();
  c.wifi_credentials.assign(wifi.begin(), wifi.end());
  r.ExpectEnd();
  return c;
}

// ---- DelegateeContext ----

SecureBytes DelegateeContext::Serialize() const {
  ByteWriter w;
  WriteHeader(w, "CDLG");
  WriteIdentity(w, identity);
  w.Raw(ByteView(camera_id)).Blob(camera_key.ToDer());
  WriteStore(w, store);
  w.U64(range.first).U64(range.last);
  return Finish(w);
}

DelegateeContext DelegateeContext::Deserialize(ByteView bytes) {
  ByteReader r(bytes, ErrorCode::kMalformedMessage);
  ReadHeader(r, "CDLG");
  DelegateeContext c;
  c.identity = ReadIdentity(r);
  c.camera_id = r.Array<16>();
  c.camera_key = ReadVerifyingKey(r);
  c.store = ReadStore(r);
  c.range.first = r.U64();
  c.range.last = r.U64();
  r.ExpectEnd();
  return c;
}

// ---- CameraContext ----

CameraContext CameraContext::Manufacture(const std::optional<stream::CameraId>& id) {
  CameraContext c;
  c.camera_id = id ? *id : crypto::RandomArray<16>();
  c.factory = IdentityKeypair::Generate(Role::kFactory);
  return c;
}

CameraContext::Installed& CameraContext::require() {
  if (!installed) Fail(ErrorCode::kNotInitialized);
  return *installed;
}

const CameraContext::Installed& CameraContext::require() const {
  if (!installed) Fail(ErrorCode::kNotInitialized);
  return *installed;
}

void CameraContext::FactoryReset() {
  if (!installed) return;
  SecureZero(installed->escrow.data(), installed->escrow.size());
  // KeyStore nodes and SecureBytes wipe themselves; OpenSSL clears the RSA
  // and X25519 private components when the last reference goes.
  installed.reset();
}

SecureBytes CameraContext::Serialize() const {
  ByteWriter w;
  WriteHeader(w, "CCAM");
  w.Raw(ByteView(camera_id));
  WriteIdentity(w, factory);
  w.U8(installed ? 1 : 0);
  if (installed) {
    WriteIdentity(w, installed->identity);
    w.Blob(installed->owner_key.ToDer());
    WriteStore(w, installed->store);
    w.Blob(installed->escrow).Blob(ByteView(installed->wifi_credentials));
    w.U64(static_cast<std::uint64_t>(installed->last_admin_issued_ms));
  }
  return Finish(w);
}

CameraContext CameraContext::Deserialize(ByteView bytes) {
  ByteReader r(bytes, ErrorCode::kMalformedMessage);
  ReadHeader(r, "CCAM");
  CameraContext c;
  c.camera_id = r.Array<16>();
  c.factory = ReadIdentity(r);
  const std::uint8_t has = r.U8();
  if (has > 1) r.Malformed("bad flag");
  if (has) {
    Installed in;
    in.identity = ReadIdentity(r);
    auto owner = r.Blob();
    try {
      in.owner_key = crypto::RsaPublicKey::FromDer(owner);
    } catch (const Error&) {
      r.Malformed("bad owner key");
    }
    in.store = ReadStore(r);
    auto escrow = r.Blob();
    in.escrow.assign(escrow.begin(), escrow.end());
    auto wifi = r.Blob();
    in.wifi_credentials.assign(wifi.begin(), wifi.end());
    in.last_admin_issued_ms = static_cast<std::int64_t>(r.U64());
    c.installed = std::move(in);
  }
  r.ExpectEnd();
  return c;
}

}  // namespace cactus::protocols
