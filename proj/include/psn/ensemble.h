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

#ifndef PSN_ENSEMBLE_H_
#define PSN_ENSEMBLE_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "psn/accountant.h"
#include "psn/dataset.h"
#include "psn/mechanisms.h"
#include "psn/models.h"
#include "psn/rng.h"

namespace psn {

// Teachers with a weight vector on the simplex. The ensemble posterior is the
// weighted sum of teacher posteriors.
class TeacherEnsemble {
 public:
  // Weights must be non-negative and sum to 1 within 1e-9. Every teacher must
  // share one (classes, features) shape.
  static absl::StatusOr<TeacherEnsemble> Create(
      std::vector<SoftmaxClassifier> teachers, std::vector<double> weights);
  // Weights 1/I.
  static absl::StatusOr<TeacherEnsemble> Uniform(
      std::vector<SoftmaxClassifier> teachers);

  int size() const { return static_cast<int>(teachers_.size()); }
  int num_classes() const { return teachers_.front().num_classes(); }
  int num_features() const { return teachers_.front().num_features(); }
  const std::vector<SoftmaxClassifier>& teachers() const { return teachers_; }
  const std::vector<double>& weights() const { return weights_; }

  absl::StatusOr<TeacherEnsemble> WithWeights(std::vector<double> weights) const;

 private:
  TeacherEnsemble(std::vector<SoftmaxClassifier> teachers,
                  std::vector<double> weights)
      : teachers_(std::move(teachers)), weights_(std::move(weights)) {}

  std::vector<SoftmaxClassifier> teachers_;
  std::vector<double> weights_;
};

absl::Status CheckWeights(std::span<const double> weights);

// Sum_i w_i T_i(x).
absl::StatusOr<std::vector<double>> Aggregate(const TeacherEnsemble& ens,
                                              std::span<const double> x);

// Per-teacher noisy posteriors T_i(x) + Z_i. Teacher i draws its noise from
// rng.Derive(i), so a teacher's noise does not depend on the ensemble size.
absl::StatusOr<std::vector<std::vector<double>>> NoisyTeacherScores(
    const TeacherEnsemble& ens, std::span<const double> x,
    const MechanismSpec& mech, const RngStream& rng);

// Sum_i w_i (T_i(x) + Z_i), with the noise of NoisyTeacherScores.
absl::StatusOr<std::vector<double>> NoisyAggregate(const TeacherEnsemble& ens,
                                                   std::span<const double> x,
                                                   const MechanismSpec& mech,
                                                   const RngStream& rng);

// One weighted-majority step: teachers whose prediction differs from
// `true_label` have their weight multiplied by `beta`, then the vector is
// renormalized. Requires beta in (0, 1).
absl::StatusOr<std::vector<double>> WmaUpdate(std::span<const double> weights,
                                              std::span<const int> predictions,
                                              int true_label, double beta);

struct WmaResult {
  std::vector<double> weights;
  // Mistakes per teacher over the validation rows.
  std::vector<int> mistakes;
};

// Runs WmaUpdate over the rows of a public validation set, starting from the
// ensemble's weights. Each teacher's vote on a row is the argmax of its noisy
// posterior, and every row is charged to `ledger` as one query before it is
// issued. Row r uses rng.Derive(r).
absl::StatusOr<WmaResult> FitWeightsByWma(const TeacherEnsemble& ens,
                                          const LabeledDataset& validation,
                                          double beta, const RngStream& rng,
                                          PrivacyLedger& ledger);

struct PseudoLabelBatch {
  Matrix features;
  std::vector<int> labels;
  // Ledger totals after labeling, including any earlier charges.
  DpGuarantee consumed;
  int64_t queries = 0;
};

// Labels every row of `public_features` with the argmax of NoisyAggregate,
// charging one query per row to `ledger` using the ledger's mechanism. The
// whole batch is charged up front: if it does not fit, nothing is labeled and
// kResourceExhausted is returned. Row r uses rng.Derive(r).
absl::StatusOr<PseudoLabelBatch> PseudoLabel(const TeacherEnsemble& ens,
                                             const Matrix& public_features,
                                             const RngStream& rng,
                                             PrivacyLedger& ledger);

// Convenience form with a fresh ledger for (target, mech, subsampling).
absl::StatusOr<PseudoLabelBatch> PseudoLabel(
    const TeacherEnsemble& ens, const Matrix& public_features,
    const MechanismSpec& mech, const RngStream& rng, const DpGuarantee& target,
    const std::optional<SubsamplingSpec>& subsampling,
    const AccountingOptions& options = {});

}  // namespace psn

#endif  // PSN_ENSEMBLE_H_
