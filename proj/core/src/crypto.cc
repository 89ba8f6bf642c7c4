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

#include "cactus/crypto.h"

#include <openssl/core_names.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/kdf.h>
#include <openssl/rand.h>
#include <openssl/rsa.h>
#include <openssl/x509.h>

#include <string>

namespace cactus::crypto {
namespace {

[[noreturn]] void OpenSslFail(const char* what) {
  unsigned long err = ERR_get_error();
  char buf[256] = {0};
  if (err != 0) ERR_error_string_n(err, buf, sizeof(buf));
  ERR_clear_error();
  Fail(ErrorCode::kCryptoFailure, std::string(what) + (err ? std::string(" (") + buf + ")" : ""));
}

struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
struct PkeyCtxDeleter {
  void operator()(EVP_PKEY_CTX* c) const { EVP_PKEY_CTX_free(c); }
};
struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
struct KdfCtxDeleter {
  void operator()(EVP_KDF_CTX* c) const { EVP_KDF_CTX_free(c); }
};

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;
using PkeyCtx = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter>;
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;
using KdfCtx = std::unique_ptr<EVP_KDF_CTX, KdfCtxDeleter>;

std::shared_ptr<EVP_PKEY> WrapPkey(EVP_PKEY* p) {
  return std::shared_ptr<EVP_PKEY>(p, EVP_PKEY_free);
}

// Fetched once; EVP_KDF objects are immutable and shareable across threads.
EVP_KDF* HkdfAlgorithm() {
  static EVP_KDF* kdf = EVP_KDF_fetch(nullptr, "HKDF", nullptr);
  return kdf;
}

const EVP_CIPHER* GcmCipher(std::size_t key_size) {
  static EVP_CIPHER* aes128 = EVP_CIPHER_fetch(nullptr, "AES-128-GCM", nullptr);
  static EVP_CIPHER* aes256 = EVP_CIPHER_fetch(nullptr, "AES-256-GCM", nullptr);
  if (key_size == 16) return aes128;
  if (key_size == 32) return aes256;
  Fail(ErrorCode::kInvalidArgument, "AES-GCM key must be 16 or 32 bytes");
}

int ToInt(std::size_t n) {
  if (n > static_cast<std::size_t>(INT32_MAX)) Fail(ErrorCode::kInvalidArgument, "buffer too large");
  return static_cast<int>(n);
}

void ConfigurePss(EVP_PKEY_CTX* pctx) {
  if (EVP_PKEY_CTX_set_rsa_padding(pctx, RSA_PKCS1_PSS_PADDING) <= 0 ||
      EVP_PKEY_CTX_set_rsa_pss_saltlen(pctx, 32) <= 0 ||
      EVP_PKEY_CTX_set_rsa_mgf1_md(pctx, EVP_sha256()) <= 0) {
    OpenSslFail("configure PSS");
  }
}

void ConfigureOaep(EVP_PKEY_CTX* pctx) {
  if (EVP_PKEY_CTX_set_rsa_padding(pctx, RSA_PKCS1_OAEP_PADDING) <= 0 ||
      EVP_PKEY_CTX_set_rsa_oaep_md(pctx, EVP_sha256()) <= 0 ||
      EVP_PKEY_CTX_set_rsa_mgf1_md(pctx, EVP_sha256()) <= 0) {
    OpenSslFail("configure OAEP");
  }
}

}  // namespace

void RandomBytes(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), ToInt(out.size())) != 1) OpenSslFail("RAND_bytes");
}

Digest Sha256(ByteView data) {
  Digest out;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    OpenSslFail("SHA-256");
  }
  return out;
}

void HkdfSha256(ByteView ikm, ByteView salt, ByteView info,
                std::span<std::uint8_t> out) {
  KdfCtx ctx(EVP_KDF_CTX_new(HkdfAlgorithm()));
  if (!ctx) OpenSslFail("HKDF context");
  char digest[] = "SHA256";
  OSSL_PARAM params[5];
  int n = 0;
  params[n++] = OSSL_PARAM_construct_utf8_string(OSSL_KDF_PARAM_DIGEST, digest, 0);
  params[n++] = OSSL_PARAM_construct_octet_string(
      OSSL_KDF_PARAM_KEY, const_cast<std::uint8_t*>(ikm.data()), ikm.size());
  if (!salt.empty()) {
    params[n++] = OSSL_PARAM_construct_octet_string(
        OSSL_KDF_PARAM_SALT, const_cast<std::uint8_t*>(salt.data()), salt.size());
  }
  params[n++] = OSSL_PARAM_construct_octet_string(
      OSSL_KDF_PARAM_INFO, const_cast<std::uint8_t*>(info.data()), info.size());
  params[n] = OSSL_PARAM_construct_end();
  if (EVP_KDF_derive(ctx.get(), out.data(), out.size(), params) != 1) OpenSslFail("HKDF derive");
}

GcmTag AesGcmSeal(ByteView key, ByteView nonce, ByteView aad,
                  ByteView plaintext, std::span<std::uint8_t> out) {
  if (nonce.size() != 12 && nonce.size() != 16) Fail(ErrorCode::kInvalidArgument, "GCM nonce length");
  if (out.size() != plaintext.size()) Fail(ErrorCode::kInvalidArgument, "GCM output length");
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) OpenSslFail("cipher context");
  int len = 0;
  GcmTag tag;
  if (EVP_EncryptInit_ex(ctx.get(), GcmCipher(key.size()), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, ToInt(nonce.size()), nullptr) != 1 ||
      EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1 ||
      (!aad.empty() &&
       EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), ToInt(aad.size())) != 1) ||
      (!plaintext.empty() && EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                                               ToInt(plaintext.size())) != 1) ||
      EVP_EncryptFinal_ex(ctx.get(), out.data() + plaintext.size(), &len) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, 16, tag.data()) != 1) {
    OpenSslFail("AES-GCM seal");
  }
  return tag;
}

bool AesGcmOpen(ByteView key, ByteView nonce, ByteView aad, ByteView ciphertext,
                ByteView tag, std::span<std::uint8_t> out) {
  if ((nonce.size() != 12 && nonce.size() != 16) || tag.size() != 16 ||
      out.size() != ciphertext.size()) {
    return false;
  }
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) OpenSslFail("cipher context");
  int len = 0;
  bool ok =
      EVP_DecryptInit_ex(ctx.get(), GcmCipher(key.size()), nullptr, nullptr, nullptr) == 1 &&
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, ToInt(nonce.size()), nullptr) == 1 &&
      EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) == 1 &&
      (aad.empty() ||
       EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), ToInt(aad.size())) == 1) &&
      (ciphertext.empty() || EVP_DecryptUpdate(ctx.get(), out.data(), &len, ciphertext.data(),
                                               ToInt(ciphertext.size())) == 1) &&
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, 16,
                          const_cast<std::uint8_t*>(tag.data())) == 1 &&
      EVP_DecryptFinal_ex(ctx.get(), out.data() + ciphertext.size(), &len) == 1;
  if (!ok) {
    SecureZero(out.data(), out.size());
    ERR_clear_error();
  }
  return ok;
}

// ---- RSA ----

RsaPublicKey RsaPublicKey::FromDer(ByteView der) {
  const unsigned char* p = der.data();
  EVP_PKEY* pkey = d2i_PUBKEY(nullptr, &p, static_cast<long>(der.size()));
  if (pkey == nullptr || p != der.data() + der.size() || EVP_PKEY_get_base_id(pkey) != EVP_PKEY_RSA) {
    EVP_PKEY_free(pkey);
    ERR_clear_error();
    Fail(ErrorCode::kMalformedMessage, "not an RSA SubjectPublicKeyInfo");
  }
  return RsaPublicKey(WrapPkey(pkey));
}

Bytes RsaPublicKey::ToDer() const {
  if (!pkey_) Fail(ErrorCode::kInvalidArgument, "empty public key");
  int len = i2d_PUBKEY(pkey_.get(), nullptr);
  if (len <= 0) OpenSslFail("encode public key");
  Bytes out(static_cast<std::size_t>(len));
  unsigned char* p = out.data();
  i2d_PUBKEY(pkey_.get(), &p);
  return out;
}

bool RsaPublicKey::VerifyPss(ByteView message, ByteView signature) const {
  if (!pkey_) return false;
  MdCtx md(EVP_MD_CTX_new());
  EVP_PKEY_CTX* pctx = nullptr;
  bool ok = md && EVP_DigestVerifyInit(md.get(), &pctx, EVP_sha256(), nullptr, pkey_.get()) == 1;
  if (ok) {
    ConfigurePss(pctx);
    ok = EVP_DigestVerify(md.get(), signature.data(), signature.size(), message.data(),
                          message.size()) == 1;
  }
  ERR_clear_error();
  return ok;
}

Bytes RsaPublicKey::WrapOaep(ByteView secret) const {
  if (!pkey_) Fail(ErrorCode::kInvalidArgument, "empty public key");
  PkeyCtx pctx(EVP_PKEY_CTX_new(pkey_.get(), nullptr));
  if (!pctx || EVP_PKEY_encrypt_init(pctx.get()) <= 0) OpenSslFail("OAEP init");
  ConfigureOaep(pctx.get());
  std::size_t len = 0;
  if (EVP_PKEY_encrypt(pctx.get(), nullptr, &len, secret.data(), secret.size()) <= 0) {
    OpenSslFail("OAEP size");
  }
  Bytes out(len);
  if (EVP_PKEY_encrypt(pctx.get(), out.data(), &len, secret.data(), secret.size()) <= 0) {
    OpenSslFail("OAEP encrypt");
  }
  out.resize(len);
  return out;
}

bool operator==(const RsaPublicKey& a, const RsaPublicKey& b) {
  if (!a.pkey_ || !b.pkey_) return a.pkey_ == b.pkey_;
  return EVP_PKEY_eq(a.pkey_.get(), b.pkey_.get()) == 1;
}

RsaPrivateKey RsaPrivateKey::Generate(int bits) {
  EVP_PKEY* pkey = EVP_RSA_gen(static_cast<unsigned int>(bits));
  if (pkey == nullptr) OpenSslFail("RSA keygen");
  return RsaPrivateKey(WrapPkey(pkey));
}

RsaPrivateKey RsaPrivateKey::FromDer(ByteView der) {
  const unsigned char* p = der.data();
  EVP_PKEY* pkey = d2i_AutoPrivateKey(nullptr, &p, static_cast<long>(der.size()));
  if (pkey == nullptr || EVP_PKEY_get_base_id(pkey) != EVP_PKEY_RSA) {
    EVP_PKEY_free(pkey);
    ERR_clear_error();
    Fail(ErrorCode::kMalformedMessage, "not an RSA private key");
  }
  return RsaPrivateKey(WrapPkey(pkey));
}

SecureBytes RsaPrivateKey::ToDer() const {
  if (!pkey_) Fail(ErrorCode::kInvalidArgument, "empty private key");
  PKCS8_PRIV_KEY_INFO* info = EVP_PKEY2PKCS8(pkey_.get());
  if (info == nullptr) OpenSslFail("encode private key");
  int len = i2d_PKCS8_PRIV_KEY_INFO(info, nullptr);
  SecureBytes out(static_cast<std::size_t>(len));
  unsigned char* p = out.data();
  i2d_PKCS8_PRIV_KEY_INFO(info, &p);
  PKCS8_PRIV_KEY_INFO_free(info);
  return out;
}

RsaPublicKey RsaPrivateKey::PublicKey() const {
  if (!pkey_) Fail(ErrorCode::kInvalidArgument, "empty private key");
  // Round-trip through SPKI so the public handle carries no private material.
  int len = i2d_PUBKEY(pkey_.get(), nullptr);
  Bytes der(static_cast<std::size_t>(len));
  unsigned char* p = der.data();
  i2d_PUBKEY(pkey_.get(), &p);
  return RsaPublicKey::FromDer(der);
}

Bytes RsaPrivateKey::SignPss(ByteView message) const {
  if (!pkey_) Fail(ErrorCode::kInvalidArgument, "empty private key");
  MdCtx md(EVP_MD_CTX_new());
  EVP_PKEY_CTX* pctx = nullptr;
  if (!md || EVP_DigestSignInit(md.get(), &pctx, EVP_sha256(), nullptr, pkey_.get()) != 1) {
    OpenSslFail("sign init");
  }
  ConfigurePss(pctx);
  std::size_t len = 0;
  if (EVP_DigestSign(md.get(), nullptr, &len, message.data(), message.size()) != 1) {
    OpenSslFail("sign size");
  }
  Bytes sig(len);
  if (EVP_DigestSign(md.get(), sig.data(), &len, message.data(), message.size()) != 1) {
    OpenSslFail("sign");
  }
  sig.resize(len);
  return sig;
}

std::optional<SecureBytes> RsaPrivateKey::UnwrapOaep(ByteView wrapped) const {
  if (!pkey_) Fail(ErrorCode::kInvalidArgument, "empty private key");
  PkeyCtx pctx(EVP_PKEY_CTX_new(pkey_.get(), nullptr));
  if (!pctx || EVP_PKEY_decrypt_init(pctx.get()) <= 0) OpenSslFail("OAEP init");
  ConfigureOaep(pctx.get());
  std::size_t len = 0;
  if (EVP_PKEY_decrypt(pctx.get(), nullptr, &len, wrapped.data(), wrapped.size()) <= 0) {
    ERR_clear_error();
    return std::nullopt;
  }
  SecureBytes out(len);
  if (EVP_PKEY_decrypt(pctx.get(), out.data(), &len, wrapped.data(), wrapped.size()) <= 0) {
    ERR_clear_error();
    return std::nullopt;
  }
  out.resize(len);
  return out;
}

// ---- X25519 ----

X25519PrivateKey X25519PrivateKey::Generate() {
  EVP_PKEY* pkey = EVP_PKEY_Q_keygen(nullptr, nullptr, "X25519");
  if (pkey == nullptr) OpenSslFail("X25519 keygen");
  return X25519PrivateKey(WrapPkey(pkey));
}

X25519PrivateKey X25519PrivateKey::FromRaw(ByteView raw) {
  if (raw.size() != 32) Fail(ErrorCode::kMalformedMessage, "X25519 private key length");
  EVP_PKEY* pkey = EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, raw.data(), raw.size());
  if (pkey == nullptr) OpenSslFail("X25519 import");
  return X25519PrivateKey(WrapPkey(pkey));
}

Key256 X25519PrivateKey::Raw() const {
  Key256 out;
  std::size_t len = out.size();
  if (EVP_PKEY_get_raw_private_key(pkey_.get(), out.data(), &len) != 1 || len != 32) {
    OpenSslFail("X25519 export");
  }
  return out;
}

X25519Public X25519PrivateKey::PublicRaw() const {
  X25519Public out;
  std::size_t len = out.size();
  if (EVP_PKEY_get_raw_public_key(pkey_.get(), out.data(), &len) != 1 || len != 32) {
    OpenSslFail("X25519 public export");
  }
  return out;
}

Key256 X25519PrivateKey::Agree(const X25519Public& peer) const {
  EVP_PKEY* peer_key =
      EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, peer.data(), peer.size());
  if (peer_key == nullptr) OpenSslFail("X25519 peer import");
  auto peer_holder = WrapPkey(peer_key);
  PkeyCtx pctx(EVP_PKEY_CTX_new(pkey_.get(), nullptr));
  Key256 out;
  std::size_t len = out.size();
  if (!pctx || EVP_PKEY_derive_init(pctx.get()) <= 0 ||
      EVP_PKEY_derive_set_peer(pctx.get(), peer_key) <= 0 ||
      EVP_PKEY_derive(pctx.get(), out.data(), &len) <= 0 || len != 32) {
    OpenSslFail("X25519 derive");
  }
  return out;
}

}  // namespace cactus::crypto
