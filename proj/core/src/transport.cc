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

#include "cactus/transport.h"

#include <json.hpp>

#include <map>

namespace cactus::transport {
namespace {

constexpr char kEnvelopeMagic[] = "CMSG";

std::mutex& NamesMutex() {
  static std::mutex mu;
  return mu;
}

std::map<std::string, std::uint8_t, std::less<>>& Names() {
  static std::map<std::string, std::uint8_t, std::less<>> names;
  return names;
}

ChannelKind ParseChannel(const std::string& s) {
  if (s == "visual") return ChannelKind::kVisual;
  if (s == "radio" || s == "bluetooth") return ChannelKind::kRadio;
  if (s == "internet") return ChannelKind::kInternet;
  Fail(ErrorCode::kInvalidArgument, "unknown channel '" + s + "'");
}

Action ParseAction(const std::string& s) {
  if (s == "passthrough") return Action::kPassthrough;
  if (s == "drop") return Action::kDrop;
  if (s == "corrupt") return Action::kCorrupt;
  if (s == "replace") return Action::kReplace;
  if (s == "replay") return Action::kReplay;
  if (s == "inject") return Action::kInject;
  Fail(ErrorCode::kInvalidArgument, "unknown action '" + s + "'");
}

}  // namespace

Bytes EncodeEnvelope(std::uint8_t type, ByteView body) {
  if (body.size() > UINT32_MAX) Fail(ErrorCode::kInvalidArgument, "message body too large");
  ByteWriter w;
  w.Raw(std::string_view(kEnvelopeMagic, 4)).U8(kEnvelopeVersion).U8(type).Blob(body);
  return std::move(w).bytes();
}

Envelope DecodeEnvelope(ByteView bytes) {
  ByteReader r(bytes, ErrorCode::kChannelTampered);
  auto magic = r.Raw(4);
  if (!std::equal(magic.begin(), magic.end(), kEnvelopeMagic)) r.Malformed("bad envelope magic");
  if (r.U8() != kEnvelopeVersion) r.Malformed("unsupported envelope version");
  Envelope e;
  e.type = r.U8();
  auto body = r.Blob();
  e.body.assign(body.begin(), body.end());
  r.ExpectEnd();
  return e;
}

std::optional<std::uint8_t> PeekMessageType(ByteView bytes) {
  if (bytes.size() < kEnvelopeHeaderBytes || !std::equal(bytes.begin(), bytes.begin() + 4, kEnvelopeMagic)) {
    return std::nullopt;
  }
  return bytes[5];
}

std::string_view ChannelKindName(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::kVisual: return "visual";
    case ChannelKind::kRadio: return "radio";
    case ChannelKind::kInternet: return "internet";
  }
  return "?";
}

std::string_view ActionName(Action action) {
  switch (action) {
    case Action::kPassthrough: return "passthrough";
    case Action::kDrop: return "drop";
    case Action::kCorrupt: return "corrupt";
    case Action::kReplace: return "replace";
    case Action::kReplay: return "replay";
    case Action::kInject: return "inject";
  }
  return "?";
}

void RegisterMessageName(std::string_view name, std::uint8_t type) {
  std::lock_guard lock(NamesMutex());
  Names()[std::string(name)] = type;
}

std::optional<std::uint8_t> LookupMessageName(std::string_view name) {
  std::lock_guard lock(NamesMutex());
  auto it = Names().find(name);
  if (it == Names().end()) return std::nullopt;
  return it->second;
}

// ---- AdversaryScript ----

AdversaryScript::AdversaryScript(std::uint64_t seed, std::vector<Rule> rules)
    : rng_(seed), rules_(std::move(rules)), match_counts_(rules_.size(), 0) {}

AdversaryScript::AdversaryScript(AdversaryScript&& other) noexcept
    : rng_(other.rng_),
      rules_(std::move(other.rules_)),
      match_counts_(std::move(other.match_counts_)),
      observed_(std::move(other.observed_)),
      events_(std::move(other.events_)) {}

AdversaryScript AdversaryScript::FromJson(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("adversary script: ") + e.what());
  }
  try {
    std::vector<Rule> rules;
    for (const auto& j : doc.value("rules", nlohmann::json::array())) {
      Rule r;
      if (j.contains("channel")) r.channel = ParseChannel(j.at("channel").get<std::string>());
      if (j.contains("msg_type")) {
        const auto& t = j.at("msg_type");
        if (t.is_string()) {
          auto type = LookupMessageName(t.get<std::string>());
          if (!type) Fail(ErrorCode::kInvalidArgument, "unknown msg_type " + t.get<std::string>());
          r.msg_type = *type;
        } else {
          r.msg_type = t.get<std::uint8_t>();
        }
      }
      r.occurrence = j.value("occurrence", 0);
      r.action = ParseAction(j.value("action", std::string("passthrough")));
      if (j.contains("offset")) r.offset = j.at("offset").get<std::size_t>();
      r.xor_mask = j.value("xor", std::uint8_t{0x01});
      if (j.contains("data")) r.data = FromHex(j.at("data").get<std::string>());
      if (j.contains("replay_index")) r.replay_index = j.at("replay_index").get<std::size_t>();
      rules.push_back(std::move(r));
    }
    return AdversaryScript(doc.value("seed", std::uint64_t{0}), std::move(rules));
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("adversary script: ") + e.what());
  }
}

bool AdversaryScript::HasRulesOtherThanDrop(ChannelKind channel) const {
  for (const auto& r : rules_) {
    if (r.channel == channel && r.action != Action::kDrop &&
        r.action != Action::kPassthrough) {
      return true;
    }
  }
  return false;
}

std::vector<Bytes> AdversaryScript::Apply(ChannelKind channel, const Bytes& msg) {
  std::lock_guard lock(mu_);
  const auto type = PeekMessageType(msg);
  const Rule* chosen = nullptr;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const Rule& r = rules_[i];
    if (r.channel && *r.channel != channel) continue;
    if (r.msg_type && r.msg_type != type) continue;
    // Wildcard rules cannot rewrite the visual channel either.
    if (channel == ChannelKind::kVisual && r.action != Action::kDrop && r.action != Action::kPassthrough) {
      continue;
    }
    const int n = ++match_counts_[i];
    if (chosen == nullptr && (r.occurrence == 0 || r.occurrence == n)) chosen = &r;
  }
  observed_.push_back(msg);
  std::vector<Bytes> out;
  const Action action = chosen ? chosen->action : Action::kPassthrough;
  switch (action) {
    case Action::kPassthrough:
      out.push_back(msg);
      break;
    case Action::kDrop:
      break;
    case Action::kCorrupt: {
      Bytes bad = msg;
      if (!bad.empty()) {
        const std::size_t pos = chosen->offset ? *chosen->offset % bad.size() : rng_() % bad.size();
        bad[pos] ^= chosen->xor_mask;
      }
      out.push_back(std::move(bad));
      break;
    }
    case Action::kReplace:
      out.push_back(chosen->data);
      break;
    case Action::kReplay: {
      const Bytes* earlier = nullptr;
      if (chosen->replay_index) {
        if (*chosen->replay_index + 1 < observed_.size()) earlier = &observed_[*chosen->replay_index];
      } else {
        for (std::size_t i = 0; i + 1 < observed_.size(); ++i) {
          if (PeekMessageType(observed_[i]) == type) {
            earlier = &observed_[i];
            break;
          }
        }
      }
      out.push_back(earlier ? *earlier : msg);
      break;
    }
    case Action::kInject:
      out.push_back(msg);
      out.push_back(chosen->data);
      break;
  }
  std::size_t delivered = 0;
  for (const auto& m : out) delivered += m.size();
  events_.push_back({channel, type, action, delivered});
  return out;
}

// ---- Channel ----

Channel::Channel(ChannelKind kind, std::shared_ptr<AdversaryScript> adversary)
    : kind_(kind), adversary_(std::move(adversary)) {
  if (kind_ == ChannelKind::kVisual && adversary_ && adversary_->HasRulesOtherThanDrop(kind_)) {
    Fail(ErrorCode::kAdversaryNotPermitted, "the visual channel can only be blocked, not rewritten");
  }
}

void Channel::Send(Bytes msg) {
  std::vector<Bytes> deliver;
  if (adversary_) {
    deliver = adversary_->Apply(kind_, msg);
  } else {
    deliver.push_back(std::move(msg));
  }
  {
    std::lock_guard lock(mu_);
    if (closed_) Fail(ErrorCode::kChannelClosed);
    ++sent_;
    if (deliver.empty()) ++dropped_;
    for (auto& m : deliver) queue_.push_back(std::move(m));
  }
  cv_.notify_one();
}

std::optional<Bytes> Channel::TryRecv() {
  std::lock_guard lock(mu_);
  if (queue_.empty()) return std::nullopt;
  Bytes out = std::move(queue_.front());
  queue_.pop_front();
  ++delivered_;
  return out;
}

Bytes Channel::Recv(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  if (!cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; })) {
    Fail(dropped_ > 0 ? ErrorCode::kDropped : ErrorCode::kTimeout,
         std::string(ChannelKindName(kind_)) + " channel");
  }
  if (queue_.empty()) Fail(ErrorCode::kChannelClosed);
  Bytes out = std::move(queue_.front());
  queue_.pop_front();
  ++delivered_;
  return out;
}

void Channel::Close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool Channel::empty() const {
  std::lock_guard lock(mu_);
  return queue_.empty();
}

std::uint64_t Channel::delivered() const {
  std::lock_guard lock(mu_);
  return delivered_;
}

std::uint64_t Channel::dropped() const {
  std::lock_guard lock(mu_);
  return dropped_;
}

// ---- Link ----

Link::Link(std::shared_ptr<AdversaryScript> adversary) {
  for (int party = 0; party < 2; ++party) {
    for (ChannelKind kind : {ChannelKind::kVisual, ChannelKind::kRadio, ChannelKind::kInternet}) {
      channels_.push_back(std::make_unique<Channel>(kind, adversary));
    }
  }
}

Channel& Link::Outbound(int from_party, ChannelKind kind) {
  return *channels_[static_cast<std::size_t>(from_party) * 3 + static_cast<std::size_t>(kind)];
}

bool Link::Idle() const {
  for (const auto& c : channels_) {
    if (!c->empty()) return false;
  }
  return true;
}

}  // namespace cactus::transport
