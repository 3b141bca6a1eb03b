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

#ifndef PSN_EXPERIMENT_H_
#define PSN_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "psn/accountant.h"
#include "psn/config.h"
#include "psn/dataset.h"
#include "psn/models.h"
#include "psn/rng.h"

namespace psn {

enum class OutcomeStatus { kOk, kInfeasible };

struct MethodOutcome {
  Method method = Method::kNonPrivate;
  OutcomeStatus status = OutcomeStatus::kOk;
  // Set when status is not kOk.
  std::string error;

  double accuracy = 0;
  bool private_method = false;
  DpGuarantee consumed = {0, 0};
  // Ensemble methods: std (Gaussian) or diversity (Laplace) of the per-teacher
  // noise. DP-SGD: std of the noise added to each clipped gradient sum.
  double noise_scale = 0;
  double sensitivity = 0;
  int teachers = 0;
  int64_t queries = 0;

  // Ensemble methods only.
  std::vector<double> teacher_weights;
  std::vector<int64_t> teacher_rows;
  // Fraction of pseudo-labels equal to the true public label.
  double label_accuracy = 0;
  int64_t student_rows = 0;

  // DP-SGD only.
  double noise_multiplier = 0;
  int64_t steps = 0;

  std::optional<double> wall_clock_seconds;
};

struct FoldReport {
  int fold = 0;
  int64_t train_rows = 0;
  int64_t eval_rows = 0;
  std::vector<MethodOutcome> outcomes;  // In config method order.
};

struct ExperimentReport {
  ExperimentConfig config;
  int64_t private_rows = 0;
  int64_t public_rows = 0;
  int num_classes = 0;
  int num_features = 0;
  std::vector<FoldReport> folds;
};

// Materializes the private and public datasets the config describes. Relative
// CSV paths resolve against `base_dir`.
absl::StatusOr<std::pair<LabeledDataset, LabeledDataset>> LoadExperimentData(
    const ExperimentConfig& config, const std::string& base_dir = "");

// Trains a student on pseudo-labeled public data. Rejects any dataset not
// tagged public.
absl::StatusOr<SoftmaxClassifier> FitStudent(const LabeledDataset& labeled,
                                             const SgdConfig& cfg,
                                             const RngStream& rng);

// Runs every configured method on every fold and evaluates each on the
// fold's held-out private rows. Methods whose budget cannot be met are
// reported with status kInfeasible; any other failure fails the run. A DP
// method that reports more than the target budget is an internal error.
absl::StatusOr<ExperimentReport> RunExperiment(
    const ExperimentConfig& config, const LabeledDataset& private_data,
    const LabeledDataset& public_data);

}  // namespace psn

#endif  // PSN_EXPERIMENT_H_
