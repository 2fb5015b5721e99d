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

#ifndef TWINSYNTH_COMMON_H_
#define TWINSYNTH_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace twinsynth {

enum class ErrorCode {
  kInvalidArgument = 1,
  kConfig = 2,
  kIo = 3,
  kRuntime = 4,
  kDivergence = 5,
  kInfeasible = 6,
};

// All library failures are reported through this exception type; the C API
// translates the code into a status value.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline Error InvalidArgument(const std::string& message) {
  return Error(ErrorCode::kInvalidArgument, message);
}
inline Error ConfigError(const std::string& message) {
  return Error(ErrorCode::kConfig, message);
}
inline Error IoError(const std::string& message) {
  return Error(ErrorCode::kIo, message);
}
inline Error RuntimeError(const std::string& message) {
  return Error(ErrorCode::kRuntime, message);
}

using TokenId = std::int32_t;

}  // namespace twinsynth

#endif  // TWINSYNTH_COMMON_H_
