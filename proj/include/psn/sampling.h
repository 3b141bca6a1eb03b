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

#ifndef PSN_SAMPLING_H_
#define PSN_SAMPLING_H_

#include <cstddef>
#include <vector>

#include "absl/status/statusor.h"
#include "psn/rng.h"

namespace psn {

// Sorted, distinct record indices into a dataset.
struct IndexSet {
  std::vector<size_t> indices;

  size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
};

// Splits {0, ..., n-1} into `num_parts` disjoint sets whose sizes differ by at
// most one, after a uniform random shuffle.
absl::StatusOr<std::vector<IndexSet>> PartitionDisjoint(size_t n,
                                                        int num_parts,
                                                        const RngStream& rng);

// Includes every index independently with probability gamma.
absl::StatusOr<IndexSet> PoissonSubsample(size_t n, double gamma,
                                          const RngStream& rng);

struct NonEmptySubsample {
  IndexSet sample;
  // Number of draws made, including the successful one.
  int attempts = 0;
};

// Poisson subsample that is re-drawn on a fresh child stream while empty.
// Fails after `max_attempts` empty draws.
absl::StatusOr<NonEmptySubsample> PoissonSubsampleNonEmpty(
    size_t n, double gamma, const RngStream& rng, int max_attempts = 1000);

}  // namespace psn

#endif  // PSN_SAMPLING_H_
