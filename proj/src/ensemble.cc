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

#include "psn/ensemble.h"

#include <cmath>

#include "absl/strings/str_format.h"

namespace psn {
namespace {

absl::Status CheckInput(const TeacherEnsemble& ens, std::span<const double> x) {
  if (static_cast<int>(x.size()) != ens.num_features()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("ensemble expects %d features, got %d",
                        ens.num_features(), x.size()));
  }
  return absl::OkStatus();
}

std::span<const double> Row(const Matrix& m, Eigen::Index r) {
  return {m.row(r).data(), static_cast<size_t>(m.cols())};
}

}  // namespace

absl::Status CheckWeights(std::span<const double> weights) {
  if (weights.empty()) return absl::InvalidArgumentError("no weights");
  double sum = 0;
  for (double w : weights) {
    if (!(w >= 0) || !std::isfinite(w)) {
      return absl::InvalidArgumentError(
          absl::StrFormat("weights must be finite and >= 0, got %g", w));
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    return absl::InvalidArgumentError(
        absl::StrFormat("weights must sum to 1, got %.12g", sum));
  }
  return absl::OkStatus();
}

absl::StatusOr<TeacherEnsemble> TeacherEnsemble::Create(
    std::vector<SoftmaxClassifier> teachers, std::vector<double> weights) {
  if (teachers.empty()) {
    return absl::InvalidArgumentError("an ensemble needs at least one teacher");
  }
  if (weights.size() != teachers.size()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "%d weights for %d teachers", weights.size(), teachers.size()));
  }
  for (const SoftmaxClassifier& t : teachers) {
    if (t.num_classes() != teachers.front().num_classes() ||
        t.num_features() != teachers.front().num_features()) {
      return absl::InvalidArgumentError("teachers differ in shape");
    }
  }
  if (absl::Status s = CheckWeights(weights); !s.ok()) return s;
  return TeacherEnsemble(std::move(teachers), std::move(weights));
}

absl::StatusOr<TeacherEnsemble> TeacherEnsemble::Uniform(
    std::vector<SoftmaxClassifier> teachers) {
  std::vector<double> weights(teachers.size(),
                              1.0 / static_cast<double>(teachers.size()));
  return Create(std::move(teachers), std::move(weights));
}

absl::StatusOr<TeacherEnsemble> TeacherEnsemble::WithWeights(
    std::vector<double> weights) const {
  return Create(teachers_, std::move(weights));
}

absl::StatusOr<std::vector<double>> Aggregate(const TeacherEnsemble& ens,
                                              std::span<const double> x) {
  if (absl::Status s = CheckInput(ens, x); !s.ok()) return s;
  std::vector<double> out(static_cast<size_t>(ens.num_classes()), 0.0);
  for (int i = 0; i < ens.size(); ++i) {
    absl::StatusOr<std::vector<double>> p = ens.teachers()[i].PredictProba(x);
    if (!p.ok()) return p.status();
    for (size_t k = 0; k < out.size(); ++k) out[k] += ens.weights()[i] * (*p)[k];
  }
  return out;
}

absl::StatusOr<std::vector<std::vector<double>>> NoisyTeacherScores(
    const TeacherEnsemble& ens, std::span<const double> x,
    const MechanismSpec& mech, const RngStream& rng) {
  if (absl::Status s = CheckInput(ens, x); !s.ok()) return s;
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<size_t>(ens.size()));
  for (int i = 0; i < ens.size(); ++i) {
    absl::StatusOr<std::vector<double>> p = ens.teachers()[i].PredictProba(x);
    if (!p.ok()) return p.status();
    absl::StatusOr<std::vector<double>> noisy =
        PerturbScores(*p, mech, rng.Derive(static_cast<uint64_t>(i)));
    if (!noisy.ok()) return noisy.status();
    out.push_back(*std::move(noisy));
  }
  return out;
}

absl::StatusOr<std::vector<double>> NoisyAggregate(const TeacherEnsemble& ens,
                                                   std::span<const double> x,
                                                   const MechanismSpec& mech,
                                                   const RngStream& rng) {
  absl::StatusOr<std::vector<std::vector<double>>> scores =
      NoisyTeacherScores(ens, x, mech, rng);
  if (!scores.ok()) return scores.status();
  std::vector<double> out(static_cast<size_t>(ens.num_classes()), 0.0);
  for (int i = 0; i < ens.size(); ++i) {
    for (size_t k = 0; k < out.size(); ++k) {
      out[k] += ens.weights()[i] * (*scores)[i][k];
    }
  }
  return out;
}

absl::StatusOr<std::vector<double>> WmaUpdate(std::span<const double> weights,
                                              std::span<const int> predictions,
                                              int true_label, double beta) {
  if (!(beta > 0 && beta < 1)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("beta must lie in (0, 1), got %g", beta));
  }
  if (absl::Status s = CheckWeights(weights); !s.ok()) return s;
  if (predictions.size() != weights.size()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "%d predictions for %d weights", predictions.size(), weights.size()));
  }
  std::vector<double> out(weights.begin(), weights.end());
  double sum = 0;
  for (size_t i = 0; i < out.size(); ++i) {
    if (predictions[i] != true_label) out[i] *= beta;
    sum += out[i];
  }
  for (double& w : out) w /= sum;
  return out;
}

absl::StatusOr<WmaResult> FitWeightsByWma(const TeacherEnsemble& ens,
                                          const LabeledDataset& validation,
                                          double beta, const RngStream& rng,
                                          PrivacyLedger& ledger) {
  if (validation.provenance != Provenance::kPublic) {
    return absl::FailedPreconditionError(
        "weighted-majority validation rows must be public");
  }
  if (validation.num_features() != ens.num_features()) {
    return absl::InvalidArgumentError("validation feature width mismatch");
  }
  WmaResult result{ens.weights(),
                   std::vector<int>(static_cast<size_t>(ens.size()), 0)};
  std::vector<int> votes(static_cast<size_t>(ens.size()));
  for (size_t r = 0; r < validation.size(); ++r) {
    if (absl::Status s = ledger.Charge(1); !s.ok()) return s;
    const auto row = static_cast<Eigen::Index>(r);
    absl::StatusOr<std::vector<std::vector<double>>> scores =
        NoisyTeacherScores(ens, Row(validation.features, row),
                           ledger.mechanism(), rng.Derive(r));
    if (!scores.ok()) return scores.status();
    for (int i = 0; i < ens.size(); ++i) {
      votes[i] = Argmax((*scores)[i]);
      result.mistakes[i] += votes[i] != validation.labels[r];
    }
    absl::StatusOr<std::vector<double>> next =
        WmaUpdate(result.weights, votes, validation.labels[r], beta);
    if (!next.ok()) return next.status();
    result.weights = *std::move(next);
  }
  return result;
}

absl::StatusOr<PseudoLabelBatch> PseudoLabel(const TeacherEnsemble& ens,
                                             const Matrix& public_features,
                                             const RngStream& rng,
                                             PrivacyLedger& ledger) {
  if (public_features.cols() != ens.num_features()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "ensemble expects %d features, got %d", ens.num_features(),
        public_features.cols()));
  }
  if (absl::Status s = ledger.Charge(public_features.rows()); !s.ok()) return s;
  PseudoLabelBatch batch;
  batch.features = public_features;
  batch.labels.reserve(static_cast<size_t>(public_features.rows()));
  for (Eigen::Index r = 0; r < public_features.rows(); ++r) {
    absl::StatusOr<std::vector<double>> noisy =
        NoisyAggregate(ens, Row(public_features, r), ledger.mechanism(),
                       rng.Derive(static_cast<uint64_t>(r)));
    if (!noisy.ok()) return noisy.status();
    batch.labels.push_back(Argmax(*noisy));
  }
  batch.consumed = ledger.consumed();
  batch.queries = ledger.queries();
  return batch;
}

absl::StatusOr<PseudoLabelBatch> PseudoLabel(
    const TeacherEnsemble& ens, const Matrix& public_features,
    const MechanismSpec& mech, const RngStream& rng, const DpGuarantee& target,
    const std::optional<SubsamplingSpec>& subsampling,
    const AccountingOptions& options) {
  absl::StatusOr<PrivacyLedger> ledger =
      PrivacyLedger::Create(target, mech, subsampling, options);
  if (!ledger.ok()) return ledger.status();
  return PseudoLabel(ens, public_features, rng, *ledger);
}

}  // namespace psn
