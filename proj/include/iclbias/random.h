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

#ifndef ICLBIAS_RANDOM_H_
#define ICLBIAS_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace iclbias {

using Rng = std::mt19937_64;

// Derives an independent 64-bit seed from a base seed and a list of stream
// tags (grid indices, call indices, salts). Pure and order-sensitive, so a
// job's stream never depends on worker scheduling.
std::uint64_t DeriveSeed(std::uint64_t base,
                         std::initializer_list<std::uint64_t> tags);

inline Rng MakeRng(std::uint64_t base,
                   std::initializer_list<std::uint64_t> tags = {}) {
  return Rng(DeriveSeed(base, tags));
}

// Uniform draw of an index in [0, n).
std::size_t UniformIndex(Rng& rng, std::size_t n);

double Uniform01(Rng& rng);

// Samples an index from an unnormalized nonnegative weight vector.
std::size_t SampleDiscrete(Rng& rng, std::span<const double> weights);

// First `count` entries of a seeded permutation of [0, n).
std::vector<std::size_t> SamplePrefix(Rng& rng, std::size_t n,
                                      std::size_t count);

// Rounds half up (x.5 -> x+1) with a tolerance for products like 0.35 * 10.
long RoundHalfUp(double x);

}  // namespace iclbias

#endif  // ICLBIAS_RANDOM_H_
