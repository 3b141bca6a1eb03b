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

#include "psn/sampling.h"

#include <algorithm>
#include <numeric>

#include "absl/strings/str_format.h"

namespace psn {

absl::StatusOr<std::vector<IndexSet>> PartitionDisjoint(size_t n,
                                                        int num_parts,
                                                        const RngStream& rng) {
  if (num_parts < 1) {
    return absl::InvalidArgumentError(
        absl::StrFormat("need at least one part, got %d", num_parts));
  }
  if (static_cast<size_t>(num_parts) > n) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "cannot split %d records into %d non-empty parts", n, num_parts));
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 engine = rng.Engine();
  for (size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[UniformIndex(engine, i)]);
  }

  const size_t base = n / num_parts;
  const size_t extra = n % num_parts;
  std::vector<IndexSet> parts(num_parts);
  auto it = order.begin();
  for (int p = 0; p < num_parts; ++p) {
    const size_t size = base + (static_cast<size_t>(p) < extra ? 1 : 0);
    parts[p].indices.assign(it, it + size);
    std::sort(parts[p].indices.begin(), parts[p].indices.end());
    it += size;
  }
  return parts;
}

absl::StatusOr<IndexSet> PoissonSubsample(size_t n, double gamma,
                                          const RngStream& rng) {
  if (!(gamma > 0 && gamma <= 1)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("sampling rate must lie in (0, 1], got %g", gamma));
  }
  IndexSet out;
  std::mt19937_64 engine = rng.Engine();
  for (size_t i = 0; i < n; ++i) {
    if (OpenUniform(engine) < gamma) out.indices.push_back(i);
  }
  return out;
}

absl::StatusOr<NonEmptySubsample> PoissonSubsampleNonEmpty(
    size_t n, double gamma, const RngStream& rng, int max_attempts) {
  if (n == 0) return absl::InvalidArgumentError("cannot subsample 0 records");
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    absl::StatusOr<IndexSet> s = PoissonSubsample(
        n, gamma, attempt == 0 ? rng : rng.Derive(attempt));
    if (!s.ok()) return s.status();
    if (!s->empty()) return NonEmptySubsample{*std::move(s), attempt + 1};
  }
  return absl::FailedPreconditionError(absl::StrFormat(
      "Poisson subsample of %d records at rate %g was empty %d times", n,
      gamma, max_attempts));
}

}  // namespace psn
