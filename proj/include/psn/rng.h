// Copyright 2026 The PSN Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PSN_RNG_H_
#define PSN_RNG_H_

#include <cstdint>
#include <random>

namespace psn {

// Names a deterministic random sequence. Two streams with equal (seed,
// stream_id) produce bit-identical samples on every platform: the engine is
// std::mt19937_64 seeded through std::seed_seq, and all distributions used on
// top of it are implemented in this library rather than taken from <random>.
class RngStream {
 public:
  RngStream() = default;
  constexpr RngStream(uint64_t seed, uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id) {}

  uint64_t seed() const { return seed_; }
  uint64_t stream_id() const { return stream_id_; }

  // Returns an independent child stream. Children of distinct salts never
  // share a stream_id in practice (splitmix64 mixing).
  RngStream Derive(uint64_t salt) const;

  std::mt19937_64 Engine() const;

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  uint64_t seed_ = 0;
  uint64_t stream_id_ = 0;
};

// Uniform on the open interval (0, 1).
double OpenUniform(std::mt19937_64& engine);

// Uniform integer in [0, n). n must be positive.
uint64_t UniformIndex(std::mt19937_64& engine, uint64_t n);

// Standard normal via inverse CDF of OpenUniform. Inverse-CDF sampling keeps
// Gaussian and Laplace draws from the same stream monotonically coupled.
double StandardNormal(std::mt19937_64& engine);

// Laplace(0, 1) via inverse CDF.
double StandardLaplace(std::mt19937_64& engine);

}  // namespace psn

#endif  // PSN_RNG_H_
