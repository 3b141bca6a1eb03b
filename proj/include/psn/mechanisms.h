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

#ifndef PSN_MECHANISMS_H_
#define PSN_MECHANISMS_H_

#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "psn/rng.h"

namespace psn {

enum class NoiseFamily { kGaussian, kLaplace };

absl::string_view NoiseFamilyName(NoiseFamily family);
absl::StatusOr<NoiseFamily> ParseNoiseFamily(absl::string_view name);

// An additive-noise mechanism for one query. `scale` is the standard
// deviation for Gaussian noise and the diversity b for Laplace noise;
// `sensitivity` is the L2 (Gaussian) or L1 (Laplace) sensitivity of the query
// the noise protects.
struct MechanismSpec {
  NoiseFamily family = NoiseFamily::kGaussian;
  double scale = 1.0;
  double sensitivity = 0.0;

  absl::Status Validate() const;
};

// Largest L2 distance between two points of the probability simplex.
double SimplexL2Sensitivity(int num_classes);
// Largest L1 distance between two points of the probability simplex.
double SimplexL1Sensitivity(int num_classes);

// The sensitivity under which `family` noise is charged when it perturbs
// posterior vectors over `num_classes` classes.
double SimplexSensitivity(NoiseFamily family, int num_classes);

// Draws `dim` i.i.d. samples from the mechanism's noise distribution, taking
// the first `dim` values of `rng`'s sequence.
absl::StatusOr<std::vector<double>> SampleNoise(const MechanismSpec& spec,
                                                int dim, const RngStream& rng);

// Adds mechanism noise to a probability vector. The result is left
// unprojected; consumers take its argmax.
absl::StatusOr<std::vector<double>> PerturbScores(std::span<const double> scores,
                                                  const MechanismSpec& spec,
                                                  const RngStream& rng);

// Checks non-negativity and unit sum within 1e-9.
absl::Status CheckSimplex(std::span<const double> scores);

// Index of the largest entry; ties go to the lowest index.
int Argmax(std::span<const double> values);

}  // namespace psn

#endif  // PSN_MECHANISMS_H_
