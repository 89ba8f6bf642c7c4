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

#ifndef CACTUS_STATS_H_
#define CACTUS_STATS_H_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cactus {

// Welford running mean and variance.
class RunningStat {
 public:
  void Add(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }

  std::uint64_t count() const { return count_; }
  double mean() const { return mean_; }
  // Sample standard deviation; 0 with fewer than two samples.
  double stddev() const { return count_ < 2 ? 0.0 : std::sqrt(m2_ / static_cast<double>(count_ - 1)); }

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0;
  double m2_ = 0;
};

// Named per-stage delay accumulators in milliseconds, kept in insertion order.
class StageStats {
 public:
  explicit StageStats(std::vector<std::string> stage_names);

  RunningStat& operator[](const std::string& stage);
  const RunningStat& operator[](const std::string& stage) const;
  const std::vector<std::pair<std::string, RunningStat>>& stages() const { return stages_; }

  // "stage,mean_ms,stddev_ms,count" header plus one row per stage.
  std::string ToCsv() const;
  // {"stage": {"mean_ms": .., "stddev_ms": .., "count": ..}, ...}
  std::string ToJson() const;

 private:
  std::vector<std::pair<std::string, RunningStat>> stages_;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double ElapsedMs() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace cactus

#endif  // CACTUS_STATS_H_
