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

#ifndef PSN_MODELS_H_
#define PSN_MODELS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "psn/accountant.h"
#include "psn/dataset.h"
#include "psn/rng.h"

namespace psn {

enum class BatchSampling {
  // Shuffle once per epoch and walk consecutive batches.
  kShuffle,
  // Each step draws every example independently with rate batch_size / n.
  kPoisson,
};

struct SgdConfig {
  double learning_rate = 0.1;
  int epochs = 20;
  int batch_size = 32;
  double l2_penalty = 1e-3;
  // DP-SGD only.
  double clip_norm = 1.0;
  double noise_multiplier = 0.0;
  BatchSampling sampling = BatchSampling::kShuffle;

  absl::Status Validate() const;
};

// Multinomial logistic regression: p(k | x) = softmax(W x + b)_k.
class SoftmaxClassifier {
 public:
  // All-zero parameters; predicts the uniform distribution everywhere.
  static SoftmaxClassifier Zeros(int num_classes, int num_features);
  static absl::StatusOr<SoftmaxClassifier> Create(Matrix weights, Vector bias);

  int num_classes() const { return static_cast<int>(weights_.rows()); }
  int num_features() const { return static_cast<int>(weights_.cols()); }
  const Matrix& weights() const { return weights_; }
  const Vector& bias() const { return bias_; }
  Matrix& mutable_weights() { return weights_; }
  Vector& mutable_bias() { return bias_; }

  absl::StatusOr<std::vector<double>> PredictProba(
      std::span<const double> features) const;
  // Row-wise posteriors for an n x d matrix with matching d.
  absl::StatusOr<Matrix> PredictProbaBatch(const Matrix& features) const;
  // Row-wise argmax, ties to the lowest class.
  absl::StatusOr<std::vector<int>> PredictClasses(const Matrix& features) const;

  friend bool operator==(const SoftmaxClassifier& a,
                         const SoftmaxClassifier& b) {
    return a.weights_ == b.weights_ && a.bias_ == b.bias_;
  }

 private:
  SoftmaxClassifier(Matrix weights, Vector bias)
      : weights_(std::move(weights)), bias_(std::move(bias)) {}

  Matrix weights_;  // K x d
  Vector bias_;     // K
};

// Numerically stable row-wise softmax of logits.
Matrix SoftmaxRows(const Matrix& logits);

struct LossAndGradient {
  double loss = 0;
  Matrix grad_weights;
  Vector grad_bias;
};

// Mean cross-entropy plus (l2/2) ||W||^2, and its exact gradient.
absl::StatusOr<LossAndGradient> CrossEntropyLossAndGradient(
    const SoftmaxClassifier& model, const Matrix& features,
    std::span<const int> labels, double l2_penalty);

struct GradientSum {
  Matrix weights;
  Vector bias;
};

// Sum over rows of per-example cross-entropy gradients, each rescaled to L2
// norm at most clip_norm (norm taken jointly over weight and bias entries).
absl::StatusOr<GradientSum> ClippedGradientSum(const SoftmaxClassifier& model,
                                               const Matrix& features,
                                               std::span<const int> labels,
                                               double clip_norm);

absl::StatusOr<double> Accuracy(const SoftmaxClassifier& model,
                                const LabeledDataset& data);

// Cross-entropy SGD from all-zero parameters. Deterministic given `rng`.
absl::StatusOr<SoftmaxClassifier> Fit(const LabeledDataset& data,
                                      const SgdConfig& cfg,
                                      const RngStream& rng);

// Steps taken by DP-SGD: epochs * ceil(n / batch_size).
int64_t DpSgdSteps(size_t n, const SgdConfig& cfg);

// Budget consumed by DP-SGD on n examples: every step is a Gaussian query with
// L2 sensitivity clip_norm and std noise_multiplier * clip_norm over a
// Poisson batch of rate batch_size / n. Zero noise costs infinite epsilon.
absl::StatusOr<DpGuarantee> AccountDpSgd(size_t n, const SgdConfig& cfg,
                                         double delta,
                                         const AccountingOptions& options = {});

// Smallest noise multiplier for which AccountDpSgd meets `target`.
absl::StatusOr<double> CalibrateNoiseMultiplier(
    size_t n, const SgdConfig& cfg, const DpGuarantee& target,
    const AccountingOptions& options = {});

struct DpSgdResult {
  SoftmaxClassifier model;
  DpGuarantee consumed;
  int64_t steps = 0;
};

// DP-SGD with Poisson batches, per-example clipping and Gaussian noise on the
// clipped sum. Refuses to train (kResourceExhausted) when the configured noise
// would exceed `target`.
absl::StatusOr<DpSgdResult> DpSgdFit(const LabeledDataset& data,
                                     const SgdConfig& cfg, const RngStream& rng,
                                     const DpGuarantee& target,
                                     const AccountingOptions& options = {});

// Text model format, version 1:
//
//   psn-softmax-classifier 1
//   classes <K> features <d>
//   bias <b_0> ... <b_{K-1}>
//   w <W_00> ... <W_0(d-1)>          (K lines, one per class)
//
// Every number is printed with 17 significant digits so that parsing restores
// the exact doubles.
std::string SerializeModel(const SoftmaxClassifier& model);
absl::StatusOr<SoftmaxClassifier> DeserializeModel(absl::string_view text);
absl::Status SaveModel(const SoftmaxClassifier& model, const std::string& path);
absl::StatusOr<SoftmaxClassifier> LoadModel(const std::string& path);

}  // namespace psn

#endif  // PSN_MODELS_H_
