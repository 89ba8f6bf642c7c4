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

#include "cactus/error.h"

#include <array>

namespace cactus {
namespace {

struct CodeInfo {
  ErrorCode code;
  std::string_view name;
  int exit_code;
};

constexpr std::array kCodes = {
    CodeInfo{ErrorCode::kInvalidArgument, "InvalidArgument", 3},
    CodeInfo{ErrorCode::kInvalidParams, "InvalidParams", 4},
    CodeInfo{ErrorCode::kCryptoFailure, "CryptoFailure", 5},
    CodeInfo{ErrorCode::kParentIsLeaf, "ParentIsLeaf", 10},
    CodeInfo{ErrorCode::kBeforeOrigin, "BeforeOrigin", 11},
    CodeInfo{ErrorCode::kBeyondLifespan, "BeyondLifespan", 12},
    CodeInfo{ErrorCode::kNoAccess, "NoAccess", 13},
    CodeInfo{ErrorCode::kRangeInvalid, "RangeInvalid", 14},
    CodeInfo{ErrorCode::kMalformedStore, "MalformedStore", 15},
    CodeInfo{ErrorCode::kVersionMismatch, "VersionMismatch", 16},
    CodeInfo{ErrorCode::kEpochMismatch, "EpochMismatch", 20},
    CodeInfo{ErrorCode::kEmptyBlock, "EmptyBlock", 21},
    CodeInfo{ErrorCode::kNonMonotonicTimestamps, "NonMonotonicTimestamps", 22},
    CodeInfo{ErrorCode::kTagMismatch, "TagMismatch", 23},
    CodeInfo{ErrorCode::kSignatureInvalid, "SignatureInvalid", 24},
    CodeInfo{ErrorCode::kMalformedBlock, "MalformedBlock", 25},
    CodeInfo{ErrorCode::kHashMismatch, "HashMismatch", 30},
    CodeInfo{ErrorCode::kProofFailure, "ProofFailure", 31},
    CodeInfo{ErrorCode::kBadSignature, "BadSignature", 32},
    CodeInfo{ErrorCode::kChannelTampered, "ChannelTampered", 33},
    CodeInfo{ErrorCode::kMalformedMessage, "MalformedMessage", 34},
    CodeInfo{ErrorCode::kUnexpectedMessage, "UnexpectedMessage", 35},
    CodeInfo{ErrorCode::kTimeout, "Timeout", 36},
    CodeInfo{ErrorCode::kBadPassphrase, "BadPassphrase", 37},
    CodeInfo{ErrorCode::kNotInitialized, "NotInitialized", 38},
    CodeInfo{ErrorCode::kAlreadyInitialized, "AlreadyInitialized", 39},
    CodeInfo{ErrorCode::kStaleRequest, "StaleRequest", 40},
    CodeInfo{ErrorCode::kReplayDetected, "ReplayDetected", 41},
    CodeInfo{ErrorCode::kAckTimeout, "AckTimeout", 42},
    CodeInfo{ErrorCode::kChannelClosed, "ChannelClosed", 50},
    CodeInfo{ErrorCode::kDropped, "Dropped", 51},
    CodeInfo{ErrorCode::kAdversaryNotPermitted, "AdversaryNotPermitted", 52},
    CodeInfo{ErrorCode::kNotFound, "NotFound", 60},
    CodeInfo{ErrorCode::kStorageFull, "StorageFull", 61},
    CodeInfo{ErrorCode::kIoError, "IoError", 62},
    CodeInfo{ErrorCode::kStorageUnavailable, "StorageUnavailable", 63},
};

constexpr std::array<ErrorCode, kCodes.size()> MakeCodeList() {
  std::array<ErrorCode, kCodes.size()> out{};
  for (std::size_t i = 0; i < kCodes.size(); ++i) out[i] = kCodes[i].code;
  return out;
}

constexpr auto kCodeList = MakeCodeList();

const CodeInfo& Lookup(ErrorCode code) {
  for (const auto& info : kCodes) {
    if (info.code == code) return info;
  }
  return kCodes[0];
}

}  // namespace

std::string_view ErrorCodeName(ErrorCode code) { return Lookup(code).name; }

int ExitCodeFor(ErrorCode code) { return Lookup(code).exit_code; }

std::span<const ErrorCode> AllErrorCodes() { return kCodeList; }

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(detail.empty()
                             ? std::string(ErrorCodeName(code))
                             : std::string(ErrorCodeName(code)) + ": " + detail),
      code_(code) {}

void Fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

}  // namespace cactus
