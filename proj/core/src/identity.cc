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

#include "cactus/identity.h"

namespace cactus::protocols {

std::string_view RoleName(Role role) {
  switch (role) {
    case Role::kFactory: return "factory";
    case Role::kOwner: return "owner";
    case Role::kCamera: return "camera";
    case Role::kDelegatee: return "delegatee";
  }
  return "?";
}

Bytes PublicIdentity::Encode() const {
  ByteWriter w;
  w.Blob(rsa.ToDer()).Raw(ByteView(dh));
  return std::move(w).bytes();
}

PublicIdentity PublicIdentity::Decode(ByteView bytes, ErrorCode on_error) {
  ByteReader r(bytes, on_error);
  PublicIdentity out;
  auto der = r.Blob();
  try {
    out.rsa = crypto::RsaPublicKey::FromDer(der);
  } catch (const Error&) {
    r.Malformed("bad RSA public key");
  }
  out.dh = r.Array<32>();
  r.ExpectEnd();
  return out;
}

VisualToken PublicIdentity::Token() const { return crypto::Sha256(Encode()); }

IdentityKeypair IdentityKeypair::Generate(Role role) {
  IdentityKeypair kp;
  kp.role = role;
  kp.rsa = crypto::RsaPrivateKey::Generate(2048);
  kp.dh = crypto::X25519PrivateKey::Generate();
  return kp;
}

PublicIdentity IdentityKeypair::Public() const {
  PublicIdentity p;
  p.rsa = rsa.PublicKey();
  p.dh = dh.PublicRaw();
  return p;
}

SecureBytes IdentityKeypair::Serialize() const {
  const SecureBytes der = rsa.ToDer();
  const Key256 raw = dh.Raw();
  ByteWriter w;
  w.U8(static_cast<std::uint8_t>(role)).Blob(ByteView(der)).Raw(raw.span());
  Bytes plain = std::move(w).bytes();
  SecureBytes out(plain.begin(), plain.end());
  SecureZero(plain.data(), plain.size());
  return out;
}

IdentityKeypair IdentityKeypair::Deserialize(ByteView bytes) {
  ByteReader r(bytes, ErrorCode::kMalformedMessage);
  IdentityKeypair kp;
  const std::uint8_t role = r.U8();
  if (role < 1 || role > 4) r.Malformed("bad role");
  kp.role = static_cast<Role>(role);
  auto der = r.Blob();
  auto raw = r.Raw(32);
  r.ExpectEnd();
  try {
    kp.rsa = crypto::RsaPrivateKey::FromDer(der);
    kp.dh = crypto::X25519PrivateKey::FromRaw(raw);
  } catch (const Error&) {
    r.Malformed("bad identity key");
  }
  return kp;
}

Bytes Seal(const crypto::RsaPublicKey& recipient, ByteView aad, ByteView plaintext) {
  Key256 session_key;
  crypto::RandomBytes(session_key.span());
  const auto nonce = crypto::RandomArray<12>();
  Bytes ct(plaintext.size());
  const auto tag = crypto::AesGcmSeal(session_key.span(), nonce, aad, plaintext, ct);
  ByteWriter w;
  w.Blob(recipient.WrapOaep(session_key.span())).Raw(ByteView(nonce)).Blob(ct).Raw(ByteView(tag));
  return std::move(w).bytes();
}

std::optional<SecureBytes> Unseal(const crypto::RsaPrivateKey& recipient, ByteView aad,
                                  ByteView sealed) {
  try {
    ByteReader r(sealed, ErrorCode::kChannelTampered);
    auto wrapped = r.Blob();
    auto nonce = r.Raw(12);
    auto ct = r.Blob();
    auto tag = r.Raw(16);
    r.ExpectEnd();
    auto key = recipient.UnwrapOaep(wrapped);
    if (!key || key->size() != 32) return std::nullopt;
    SecureBytes out(ct.size());
    if (!crypto::AesGcmOpen(ByteView(*key), nonce, aad, ct, tag, out)) return std::nullopt;
    return out;
  } catch (const Error&) {
    return std::nullopt;
  }
}

Bytes SignedMessage::Encode() const {
  ByteWriter w;
  w.Blob(payload).Blob(signature);
  return std::move(w).bytes();
}

SignedMessage SignedMessage::Decode(ByteView bytes) {
  ByteReader r(bytes, ErrorCode::kChannelTampered);
  SignedMessage m;
  auto p = r.Blob();
  auto s = r.Blob();
  r.ExpectEnd();
  m.payload.assign(p.begin(), p.end());
  m.signature.assign(s.begin(), s.end());
  return m;
}

Bytes SignatureInput(std::string_view label, ByteView binding, std::uint8_t msg_type,
                     ByteView payload) {
  ByteWriter w;
  w.Raw(label).U8(0).Blob(binding).U8(msg_type).Raw(payload);
  return std::move(w).bytes();
}

SignedMessage SignMessage(const crypto::RsaPrivateKey& key, std::string_view label,
                          ByteView binding, std::uint8_t msg_type, Bytes payload) {
  SignedMessage m;
  m.signature = key.SignPss(SignatureInput(label, binding, msg_type, payload));
  m.payload = std::move(payload);
  return m;
}

void VerifyMessage(const crypto::RsaPublicKey& key, std::string_view label, ByteView binding,
                   std::uint8_t msg_type, const SignedMessage& message) {
  if (!key.VerifyPss(SignatureInput(label, binding, msg_type, message.payload), message.signature)) {
    Fail(ErrorCode::kBadSignature, std::string(label));
  }
}

}  // namespace cactus::protocols
