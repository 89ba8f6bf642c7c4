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

#ifndef CACTUS_ERROR_H_
#define CACTUS_ERROR_H_

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cactus {

// Every failure the library can report. The CLI maps each code to a distinct
// process exit status (see ExitCodeFor).
enum class ErrorCode {
  kInvalidArgument,
  kInvalidParams,
  kCryptoFailure,

  // keytree
  kParentIsLeaf,
  kBeforeOrigin,
  kBeyondLifespan,
  kNoAccess,
  kRangeInvalid,
  kMalformedStore,
  kVersionMismatch,

  // streamcrypto
  kEpochMismatch,
  kEmptyBlock,
  kNonMonotonicTimestamps,
  kTagMismatch,
  kSignatureInvalid,
  kMalformedBlock,

  // protocols
  kHashMismatch,
  kProofFailure,
  kBadSignature,
  kChannelTampered,
  kMalformedMessage,
  kUnexpectedMessage,
  kTimeout,
  kBadPassphrase,
  kNotInitialized,
  kAlreadyInitialized,
  kStaleRequest,
  kReplayDetected,
  kAckTimeout,

  // transport
  kChannelClosed,
  kDropped,
  kAdversaryNotPermitted,

  // storage
  kNotFound,
  kStorageFull,
  kIoError,
  kStorageUnavailable,
};

std::string_view ErrorCodeName(ErrorCode code);

// Process exit status for a given error; 0 and 1 and 2 are reserved for
// success, unexpected failure and usage errors.
int ExitCodeFor(ErrorCode code);

// All error codes, in declaration order.
std::span<const ErrorCode> AllErrorCodes();

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& detail = {});

}  // namespace cactus

#endif  // CACTUS_ERROR_H_
