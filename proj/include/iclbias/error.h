// Copyright 2026 The iclbias Authors
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

#ifndef ICLBIAS_ERROR_H_
#define ICLBIAS_ERROR_H_

#include <stdexcept>
#include <string>

namespace iclbias {

enum class ErrorCode {
  kInvalidArgument,
  kSchema,      // record or file does not conform to a schema
  kParse,       // malformed CSV / JSON / generation output
  kDegenerate,  // metric undefined on the given input (empty subgroup, ...)
  kIo,
  kTransport,   // endpoint unreachable after retries
  kConfig,
};

const char* ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception type. The C API
// maps `code()` onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace iclbias

#endif  // ICLBIAS_ERROR_H_
