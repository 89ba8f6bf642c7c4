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

#include "cactus/stats.h"

#include <json.hpp>

#include <algorithm>
#include <cstdio>

#include "cactus/error.h"

namespace cactus {

StageStats::StageStats(std::vector<std::string> stage_names) {
  for (auto& name : stage_names) stages_.emplace_back(std::move(name), RunningStat{});
}

RunningStat& StageStats::operator[](const std::string& stage) {
  auto it = std::find_if(stages_.begin(), stages_.end(), [&](const auto& s) { return s.first == stage; });
  if (it == stages_.end()) Fail(ErrorCode::kInvalidArgument, "unknown stage " + stage);
  return it->second;
}

const RunningStat& StageStats::operator[](const std::string& stage) const {
  return const_cast<StageStats&>(*this)[stage];
}

std::string StageStats::ToCsv() const {
  std::string out = "stage,mean_ms,stddev_ms,count\n";
  char line[160];
  for (const auto& [name, stat] : stages_) {
    std::snprintf(line, sizeof line, "%s,%.4f,%.4f,%llu\n", name.c_str(), stat.mean(), stat.stddev(),
                  static_cast<unsigned long long>(stat.count()));
    out += line;
  }
  return out;
}

std::string StageStats::ToJson() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [name, stat] : stages_) {
    j[name] = {{"mean_ms", stat.mean()}, {"stddev_ms", stat.stddev()}, {"count", stat.count()}};
  }
  return j.dump();
}

}  // namespace cactus
