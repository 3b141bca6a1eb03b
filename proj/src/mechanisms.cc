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

#include "psn/mechanisms.h"

#include <cmath>
#include <numeric>

#include "absl/strings/str_format.h"

namespace psn {

absl::string_view NoiseFamilyName(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::kGaussian:
      return "gaussian";
    case NoiseFamily::kLaplace:
      return "laplace";
  }
  return "unknown";
}

absl::StatusOr<NoiseFamily> ParseNoiseFamily(absl::string_view name) {
  if (name == "gaussian") return NoiseFamily::kGaussian;
  if (name == "laplace") return NoiseFamily::kLaplace;
  return absl::InvalidArgumentError(
      absl::StrFormat("unknown noise family '%s'", name));
}

absl::Status MechanismSpec::Validate() const {
  if (!(scale > 0) || !std::isfinite(scale)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("noise scale must be positive and finite, got %g",
                        scale));
  }
  if (!(sensitivity >= 0)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "sensitivity must be non-negative, got %g", sensitivity));
  }
  return absl::OkStatus();
}

double SimplexL2Sensitivity(int /*num_classes*/) { return std::sqrt(2.0); }

double SimplexL1Sensitivity(int /*num_classes*/) { return 2.0; }

double SimplexSensitivity(NoiseFamily family, int num_classes) {
  return family == NoiseFamily::kGaussian ? SimplexL2Sensitivity(num_classes)
                                          : SimplexL1Sensitivity(num_classes);
}

absl::StatusOr<std::vector<double>> SampleNoise(const MechanismSpec& spec,
                                                int dim, const RngStream& rng) {
  if (absl::Status s = spec.Validate(); !s.ok()) return s;
  if (dim < 1) {
    return absl::InvalidArgumentError(
        absl::StrFormat("noise dimension must be >= 1, got %d", dim));
  }
  std::mt19937_64 engine = rng.Engine();
  std::vector<double> noise(dim);
  for (double& x : noise) {
    x = spec.scale * (spec.family == NoiseFamily::kGaussian
                          ? StandardNormal(engine)
                          : StandardLaplace(engine));
  }
  return noise;
}

absl::Status CheckSimplex(std::span<const double> scores) {
  if (scores.empty()) return absl::InvalidArgumentError("empty score vector");
  double sum = 0;
  for (double p : scores) {
    if (!(p >= 0) || !std::isfinite(p)) {
      return absl::InvalidArgumentError(
          absl::StrFormat("score %g is not a probability", p));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    return absl::InvalidArgumentError(
        absl::StrFormat("scores sum to %.17g, not 1", sum));
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<double>> PerturbScores(std::span<const double> scores,
                                                  const MechanismSpec& spec,
                                                  const RngStream& rng) {
  if (absl::Status s = CheckSimplex(scores); !s.ok()) return s;
  absl::StatusOr<std::vector<double>> noise =
      SampleNoise(spec, static_cast<int>(scores.size()), rng);
  if (!noise.ok()) return noise.status();
  for (size_t k = 0; k < scores.size(); ++k) (*noise)[k] += scores[k];
  return noise;
}

int Argmax(std::span<const double> values) {
  int best = 0;
  for (size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = static_cast<int>(k);
  }
  return best;
}

}  // namespace psn
