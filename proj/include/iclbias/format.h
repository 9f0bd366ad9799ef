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

#ifndef ICLBIAS_FORMAT_H_
#define ICLBIAS_FORMAT_H_

#include <optional>
#include <string>
#include <string_view>

namespace iclbias {

// Shortest round-trip decimal form; locale-independent, so reports are
// byte-stable. Integral values print without a fractional part.
std::string FormatDouble(double v);

// Strict full-string parse; nullopt on trailing garbage or empty input.
std::optional<double> ParseDouble(std::string_view s);

}  // namespace iclbias

#endif  // ICLBIAS_FORMAT_H_
