// Copyright 2026 The TwinSynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TWINSYNTH_IO_UTIL_H_
#define TWINSYNTH_IO_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

namespace twinsynth {

// Whole-file read; throws kIo naming the path.
std::string ReadFile(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place, so readers
// never observe a partial file.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view bytes);

// Two-space indented JSON with a trailing newline.
void WriteJsonFile(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json ReadJsonFile(const std::filesystem::path& path);

// Non-finite values become the strings "inf", "-inf" and "nan".
nlohmann::json NumberToJson(double value);
// Accepts numbers and the strings above; throws kConfig naming `field`.
double NumberFromJson(const nlohmann::json& j, const std::string& field);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string Fnv1aHex(std::string_view bytes);

}  // namespace twinsynth

#endif  // TWINSYNTH_IO_UTIL_H_
