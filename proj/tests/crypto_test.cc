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

#include <gtest/gtest.h>

namespace cactus::crypto {
namespace {

TEST(HkdfTest, Rfc5869CaseOne) {
  Bytes ikm(22, 0x0b);
  Bytes salt = FromHex("000102030405060708090a0b0c");
  Bytes info = FromHex("f0f1f2f3f4f5f6f7f8f9");
  Bytes okm(42);
  HkdfSha256(ikm, salt, info, okm);
  EXPECT_EQ(ToHex(okm),
            "3cb25f25faacd57a90434f64d0362f2a2d2d0a90cf1a5a4c5db02d56ecc4c5bf34007208d5b887185865");
}

TEST(HkdfTest, Rfc5869CaseThreeEmptySaltAndInfo) {
  Bytes ikm(22, 0x0b);
  Bytes okm(42);
  HkdfSha256(ikm, {}, {}, okm);
  EXPECT_EQ(ToHex(okm),
            "8da4e775a563c18f715f802a063c5a31b8a11f5c5ee1879ec3454e5f3c738d2d9d201395faa4b61a96c8");
}

TEST(Sha256Test, Abc) {
  EXPECT_EQ(ToHex(Sha256(AsBytes("abc"))),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(AesGcmTest, RoundTripAndTamper) {
  for (std::size_t key_size : {16u, 32u}) {
    Bytes key(key_size, 0x11), nonce(12, 0x22);
    Bytes msg = {1, 2, 3, 4, 5};
    Bytes aad = {9, 9};
    Bytes ct(msg.size()), pt(msg.size());
    GcmTag tag = AesGcmSeal(key, nonce, aad, msg, ct);
    EXPECT_TRUE(AesGcmOpen(key, nonce, aad, ct, tag, pt));
    EXPECT_EQ(pt, msg);
    Bytes bad_aad = {9, 8};
    EXPECT_FALSE(AesGcmOpen(key, nonce, bad_aad, ct, tag, pt));
    EXPECT_EQ(pt, Bytes(msg.size(), 0));
  }
}

// NIST GCM test vector (AES-256, 96-bit IV, no AAD).
TEST(AesGcmTest, KnownAnswer) {
  Bytes key = FromHex("feffe9928665731c6d6a8f9467308308feffe9928665731c6d6a8f9467308308");
  Bytes nonce = FromHex("cafebabefacedbaddecaf888");
  Bytes pt = FromHex(
      "d9313225f88406e5a55909c5aff5269a86a7a9531534f7da2e4c303d8a318a721c3c0c95956809532fcf0e2449a6b525"
      "b16aedf5aa0de657ba637b391aafd255");
  Bytes ct(pt.size());
  GcmTag tag = AesGcmSeal(key, nonce, {}, pt, ct);
  EXPECT_EQ(ToHex(ct),
            "522dc1f099567d07f47f37a32a84427d643a8cdcbfe5c0c97598a2bd2555d1aa8cb08e48590dbb3da7b08b1056828838"
            "c5f61e6393ba7a0abcc9f662898015ad");
  EXPECT_EQ(ToHex(tag), "b094dac5d93471bdec1a502270e3cc6c");
}

TEST(RsaTest, SignVerifyWrapUnwrapAndDer) {
  RsaPrivateKey sk = RsaPrivateKey::Generate();
  RsaPublicKey pk = sk.PublicKey();
  Bytes msg = {1, 2, 3};
  Bytes sig = sk.SignPss(msg);
  EXPECT_EQ(sig.size(), 256u);
  EXPECT_TRUE(pk.VerifyPss(msg, sig));
  msg[0] ^= 1;
  EXPECT_FALSE(pk.VerifyPss(msg, sig));

  Bytes secret(32, 0x44);
  Bytes wrapped = pk.WrapOaep(secret);
  auto back = sk.UnwrapOaep(wrapped);
  ASSERT_TRUE(back.has_value());
  EXPECT_TRUE(std::equal(back->begin(), back->end(), secret.begin(), secret.end()));
  wrapped[10] ^= 1;
  EXPECT_FALSE(sk.UnwrapOaep(wrapped).has_value());

  RsaPublicKey pk2 = RsaPublicKey::FromDer(pk.ToDer());
  EXPECT_TRUE(pk2 == pk);
  RsaPrivateKey sk2 = RsaPrivateKey::FromDer(sk.ToDer());
  EXPECT_TRUE(sk2.PublicKey() == pk);
  EXPECT_THROW(RsaPublicKey::FromDer(Bytes{1, 2, 3}), Error);
}

TEST(X25519Test, AgreementIsSymmetric) {
  auto a = X25519PrivateKey::Generate();
  auto b = X25519PrivateKey::Generate();
  EXPECT_TRUE(a.Agree(b.PublicRaw()) == b.Agree(a.PublicRaw()));
  auto a2 = X25519PrivateKey::FromRaw(a.Raw().span());
  EXPECT_EQ(a2.PublicRaw(), a.PublicRaw());
}

}  // namespace
}  // namespace cactus::crypto
