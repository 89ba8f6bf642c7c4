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

#ifndef CACTUS_TRANSPORT_H_
#define CACTUS_TRANSPORT_H_

// Simulated out-of-band visual channel, short-range radio channel and
// Internet channel. Radio and Internet traffic can be rewritten by a
// scripted adversary; the visual channel only ever loses messages.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cactus/bytes.h"

namespace cactus::transport {

// ---- Envelope ----
// "CMSG" | u8 version | u8 msg_type | u32 body_len (LE) | body

inline constexpr std::uint8_t kEnvelopeVersion = 1;
inline constexpr std::size_t kEnvelopeHeaderBytes = 10;

struct Envelope {
  std::uint8_t type = 0;
  Bytes body;
};

Bytes EncodeEnvelope(std::uint8_t type, ByteView body);
// Throws kChannelTampered on bad magic, version or length.
Envelope DecodeEnvelope(ByteView bytes);
// msg_type of an envelope, or nullopt if the bytes are not one.
std::optional<std::uint8_t> PeekMessageType(ByteView bytes);

// ---- Adversary ----

enum class ChannelKind { kVisual, kRadio, kInternet };
std::string_view ChannelKindName(ChannelKind kind);

enum class Action { kPassthrough, kDrop, kCorrupt, kReplace, kReplay, kInject };
std::string_view ActionName(Action action);

struct Rule {
  std::optional<ChannelKind> channel;      // any channel if unset
  std::optional<std::uint8_t> msg_type;    // any type if unset
  int occurrence = 0;                      // 1-based count of matching messages; 0 = every one
  Action action = Action::kPassthrough;
  std::optional<std::size_t> offset;       // kCorrupt; seeded random position if unset
  std::uint8_t xor_mask = 0x01;            // kCorrupt
  Bytes data;                              // kReplace / kInject
  // kReplay: index into observed(); if unset, the first earlier message of
  // the same msg_type.
  std::optional<std::size_t> replay_index;
};

struct AdversaryEvent {
  ChannelKind channel;
  std::optional<std::uint8_t> msg_type;
  Action action;
  std::size_t size;  // bytes delivered (0 when dropped)

  friend bool operator==(const AdversaryEvent&, const AdversaryEvent&) = default;
};

// Ordered rewrite rules applied to every message crossing a channel the
// script is attached to. The first matching rule wins. Every message seen is
// recorded so later rules can replay it, including across sessions when the
// same script is reused. Occurrence counters advance for every rule whose
// filter matches, whether or not an earlier rule fired. Deterministic for a
// given seed.
class AdversaryScript {
 public:
  explicit AdversaryScript(std::uint64_t seed = 0, std::vector<Rule> rules = {});
  AdversaryScript(AdversaryScript&& other) noexcept;

  // JSON schema: {"seed": 7, "rules": [{"channel": "radio", "msg_type": 2,
  //   "occurrence": 1, "action": "corrupt", "offset": 40, "xor": 1}]}
  // msg_type may be an integer or a registered message name.
  static AdversaryScript FromJson(std::string_view json);

  // Messages actually delivered in place of `msg` (zero, one or two).
  std::vector<Bytes> Apply(ChannelKind channel, const Bytes& msg);

  bool HasRulesOtherThanDrop(ChannelKind channel) const;
  const std::vector<Bytes>& observed() const { return observed_; }
  const std::vector<AdversaryEvent>& events() const { return events_; }
  const std::vector<Rule>& rules() const { return rules_; }

 private:
  std::mt19937_64 rng_;
  std::vector<Rule> rules_;
  std::vector<int> match_counts_;
  std::vector<Bytes> observed_;
  std::vector<AdversaryEvent> events_;
  std::mutex mu_;
};

// Names usable for "msg_type" in adversary JSON; protocols registers its own.
void RegisterMessageName(std::string_view name, std::uint8_t type);
std::optional<std::uint8_t> LookupMessageName(std::string_view name);

// ---- Channel ----

// One direction of a link. Thread-safe FIFO; one producer, one consumer.
class Channel {
 public:
  // Throws kAdversaryNotPermitted when a visual channel is given a script
  // with rules naming the visual channel that do more than drop. Wildcard
  // rules are simply never applied to visual traffic unless they drop.
  explicit Channel(ChannelKind kind, std::shared_ptr<AdversaryScript> adversary = nullptr);

  ChannelKind kind() const { return kind_; }

  // Throws kChannelClosed.
  void Send(Bytes msg);
  std::optional<Bytes> TryRecv();
  // Throws kChannelClosed once closed and drained, kDropped if the adversary
  // ate a message and nothing arrived in time, kTimeout otherwise.
  Bytes Recv(std::chrono::milliseconds timeout);
  void Close();

  bool empty() const;
  std::uint64_t delivered() const;
  std::uint64_t dropped() const;

 private:
  ChannelKind kind_;
  std::shared_ptr<AdversaryScript> adversary_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Bytes> queue_;
  bool closed_ = false;
  std::uint64_t sent_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t dropped_ = 0;
};

// The three channels in each direction between two parties.
class Link {
 public:
  explicit Link(std::shared_ptr<AdversaryScript> adversary = nullptr);

  // Direction 0 carries messages from the first party to the second.
  Channel& Outbound(int from_party, ChannelKind kind);
  bool Idle() const;

 private:
  std::vector<std::unique_ptr<Channel>> channels_;  // [party][kind]
};

// Simulated per-step protocol timeout.
inline constexpr std::chrono::milliseconds kStepTimeout{5000};

}  // namespace cactus::transport

#endif  // CACTUS_TRANSPORT_H_
