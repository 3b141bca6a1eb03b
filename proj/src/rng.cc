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

#include "psn/rng.h"

#include <cmath>

#include "boost/math/special_functions/erf.hpp"

namespace psn {
namespace {

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RngStream RngStream::Derive(uint64_t salt) const {
  return RngStream(seed_, SplitMix64(stream_id_ ^ SplitMix64(salt)));
}

std::mt19937_64 RngStream::Engine() const {
  std::seed_seq seq{
      static_cast<uint32_t>(seed_), static_cast<uint32_t>(seed_ >> 32),
      static_cast<uint32_t>(stream_id_),
      static_cast<uint32_t>(stream_id_ >> 32)};
  return std::mt19937_64(seq);
}

double OpenUniform(std::mt19937_64& engine) {
  return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
}

uint64_t UniformIndex(std::mt19937_64& engine, uint64_t n) {
  // Rejects draws at or above the largest multiple of n.
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x = engine();
  while (x >= limit) x = engine();
  return x % n;
}

double StandardNormal(std::mt19937_64& engine) {
  const double u = OpenUniform(engine);
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

double StandardLaplace(std::mt19937_64& engine) {
  const double u = OpenUniform(engine) - 0.5;
  return u < 0 ? std::log1p(2.0 * u) : -std::log1p(-2.0 * u);
}

}  // namespace psn
