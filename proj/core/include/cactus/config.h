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

#ifndef CACTUS_CONFIG_H_
#define CACTUS_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace cactus {

// Flat "key = value" text. Blank lines and lines starting with '#' are
// ignored, as is anything after a " #" on a value line.
using KeyValues = std::map<std::string, std::string>;

// Throws kInvalidArgument with the offending line number.
KeyValues ParseKeyValues(std::string_view text);
// Throws kIoError when the file cannot be read.
KeyValues LoadKeyValues(const std::filesystem::path& path);

// Typed accessors; throw kInvalidArgument naming the key on bad values.
std::int64_t GetInt(const KeyValues& kv, const std::string& key, std::int64_t fallback);
std::string GetString(const KeyValues& kv, const std::string& key, const std::string& fallback);

}  // namespace cactus

#endif  // CACTUS_CONFIG_H_
