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

#include "psn/models.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "absl/strings/numbers.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"

namespace psn {
namespace {

constexpr uint64_t kBatchSalt = 0xba7c4;
constexpr uint64_t kNoiseSalt = 0x5e7a1;

absl::Status CheckShape(const SoftmaxClassifier& model, const Matrix& features,
                        std::span<const int> labels) {
  if (features.cols() != model.num_features()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "model expects %d features, got %d", model.num_features(),
        features.cols()));
  }
  if (static_cast<size_t>(features.rows()) != labels.size()) {
    return absl::InvalidArgumentError("feature rows and labels differ");
  }
  for (int y : labels) {
    if (y < 0 || y >= model.num_classes()) {
      return absl::InvalidArgumentError(
          absl::StrFormat("label %d outside [0, %d)", y, model.num_classes()));
    }
  }
  return absl::OkStatus();
}

// Rows minus one-hot labels.
Matrix ResidualRows(const SoftmaxClassifier& model, const Matrix& features,
                    std::span<const int> labels) {
  Matrix logits = features * model.weights().transpose();
  logits.rowwise() += model.bias().transpose();
  Matrix residual = SoftmaxRows(logits);
  for (size_t i = 0; i < labels.size(); ++i) {
    residual(static_cast<Eigen::Index>(i), labels[i]) -= 1.0;
  }
  return residual;
}

// A sparse view of a batch: row indices into the full training set.
void GatherRows(const LabeledDataset& data, std::span<const size_t> rows,
                Matrix& features, std::vector<int>& labels) {
  features.resize(static_cast<Eigen::Index>(rows.size()),
                  data.features.cols());
  labels.resize(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    features.row(static_cast<Eigen::Index>(r)) =
        data.features.row(static_cast<Eigen::Index>(rows[r]));
    labels[r] = data.labels[rows[r]];
  }
}

struct DpNoise {
  double clip_norm;
  double noise_std;
};

// Shared SGD loop. With `dp` set, per-example gradients are clipped and
// Gaussian noise is added to their sum before the step.
absl::StatusOr<SoftmaxClassifier> RunSgd(const LabeledDataset& data,
                                         const SgdConfig& cfg,
                                         const RngStream& rng,
                                         const DpNoise* dp) {
  if (data.size() == 0) return absl::InvalidArgumentError("dataset is empty");
  if (absl::Status s = data.Validate(); !s.ok()) return s;
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;

  const size_t n = data.size();
  const int k = data.num_classes;
  const int d = data.num_features();
  SoftmaxClassifier model = SoftmaxClassifier::Zeros(k, d);
  std::mt19937_64 batch_engine = rng.Derive(kBatchSalt).Engine();
  std::mt19937_64 noise_engine = rng.Derive(kNoiseSalt).Engine();

  const size_t batch = static_cast<size_t>(cfg.batch_size);
  const size_t steps_per_epoch = (n + batch - 1) / batch;
  const double rate = std::min(1.0, static_cast<double>(batch) / n);
  const double expected_batch = rate * static_cast<double>(n);

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<size_t> rows;
  Matrix xb;
  std::vector<int> yb;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.sampling == BatchSampling::kShuffle) {
      for (size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[UniformIndex(batch_engine, i)]);
      }
    }
    for (size_t step = 0; step < steps_per_epoch; ++step) {
      rows.clear();
      double norm = 0;
      if (cfg.sampling == BatchSampling::kShuffle) {
        const size_t begin = step * batch;
        const size_t end = std::min(n, begin + batch);
        rows.assign(order.begin() + begin, order.begin() + end);
        norm = static_cast<double>(rows.size());
      } else {
        for (size_t i = 0; i < n; ++i) {
          if (OpenUniform(batch_engine) < rate) rows.push_back(i);
        }
        // Normalize by the expected size; the realized size is not released.
        norm = expected_batch;
      }

      Matrix grad_w = Matrix::Zero(k, d);
      Vector grad_b = Vector::Zero(k);
      if (!rows.empty()) {
        GatherRows(data, rows, xb, yb);
        if (dp == nullptr) {
          Matrix residual = ResidualRows(model, xb, yb);
          grad_w = residual.transpose() * xb;
          grad_b = residual.colwise().sum().transpose();
        } else {
          absl::StatusOr<GradientSum> sum =
              ClippedGradientSum(model, xb, yb, dp->clip_norm);
          if (!sum.ok()) return sum.status();
          grad_w = std::move(sum->weights);
          grad_b = std::move(sum->bias);
        }
      }
      if (dp != nullptr && dp->noise_std > 0) {
        for (Eigen::Index i = 0; i < grad_w.size(); ++i) {
          grad_w.data()[i] += dp->noise_std * StandardNormal(noise_engine);
        }
        for (Eigen::Index i = 0; i < grad_b.size(); ++i) {
          grad_b[i] += dp->noise_std * StandardNormal(noise_engine);
        }
      }
      if (norm > 0) {
        grad_w /= norm;
        grad_b /= norm;
      }
      grad_w += cfg.l2_penalty * model.weights();
      model.mutable_weights() -= cfg.learning_rate * grad_w;
      model.mutable_bias() -= cfg.learning_rate * grad_b;
    }
  }
  if (!model.weights().allFinite() || !model.bias().allFinite()) {
    return absl::InternalError("SGD diverged to non-finite parameters");
  }
  return model;
}

absl::StatusOr<double> ParseDouble(absl::string_view s) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("model file: '%s' is not a number", s));
  }
  return v;
}

std::vector<absl::string_view> Tokens(absl::string_view line) {
  return absl::StrSplit(line, ' ', absl::SkipEmpty());
}

}  // namespace

absl::Status SgdConfig::Validate() const {
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) {
    return absl::InvalidArgumentError("learning rate must be >= 0");
  }
  if (epochs < 1) {
    return absl::InvalidArgumentError(
        absl::StrFormat("epochs must be >= 1, got %d", epochs));
  }
  if (batch_size < 1) {
    return absl::InvalidArgumentError(
        absl::StrFormat("batch size must be >= 1, got %d", batch_size));
  }
  if (!(l2_penalty >= 0)) {
    return absl::InvalidArgumentError("l2 penalty must be >= 0");
  }
  if (!(clip_norm > 0)) {
    return absl::InvalidArgumentError("clip norm must be > 0");
  }
  if (!(noise_multiplier >= 0) || !std::isfinite(noise_multiplier)) {
    return absl::InvalidArgumentError("noise multiplier must be >= 0");
  }
  return absl::OkStatus();
}

SoftmaxClassifier SoftmaxClassifier::Zeros(int num_classes, int num_features) {
  return SoftmaxClassifier(Matrix::Zero(num_classes, num_features),
                           Vector::Zero(num_classes));
}

absl::StatusOr<SoftmaxClassifier> SoftmaxClassifier::Create(Matrix weights,
                                                            Vector bias) {
  if (weights.rows() < 1 || weights.cols() < 1) {
    return absl::InvalidArgumentError("weights must be non-empty");
  }
  if (bias.size() != weights.rows()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "bias has %d entries for %d classes", bias.size(), weights.rows()));
  }
  if (!weights.allFinite() || !bias.allFinite()) {
    return absl::InvalidArgumentError("model parameters must be finite");
  }
  return SoftmaxClassifier(std::move(weights), std::move(bias));
}

Matrix SoftmaxRows(const Matrix& logits) {
  Matrix out = logits;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    out.row(i).array() -= out.row(i).maxCoeff();
    out.row(i) = out.row(i).array().exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

absl::StatusOr<std::vector<double>> SoftmaxClassifier::PredictProba(
    std::span<const double> features) const {
  if (static_cast<int>(features.size()) != num_features()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("model expects %d features, got %d", num_features(),
                        features.size()));
  }
  Matrix x(1, num_features());
  for (int j = 0; j < num_features(); ++j) x(0, j) = features[j];
  absl::StatusOr<Matrix> p = PredictProbaBatch(x);
  if (!p.ok()) return p.status();
  return std::vector<double>(p->data(), p->data() + p->size());
}

absl::StatusOr<Matrix> SoftmaxClassifier::PredictProbaBatch(
    const Matrix& features) const {
  if (features.cols() != num_features()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("model expects %d features, got %d", num_features(),
                        features.cols()));
  }
  Matrix logits = features * weights_.transpose();
  logits.rowwise() += bias_.transpose();
  return SoftmaxRows(logits);
}

absl::StatusOr<std::vector<int>> SoftmaxClassifier::PredictClasses(
    const Matrix& features) const {
  absl::StatusOr<Matrix> p = PredictProbaBatch(features);
  if (!p.ok()) return p.status();
  std::vector<int> out(static_cast<size_t>(p->rows()));
  for (Eigen::Index i = 0; i < p->rows(); ++i) {
    out[static_cast<size_t>(i)] = Argmax(
        std::span<const double>(p->row(i).data(), static_cast<size_t>(p->cols())));
  }
  return out;
}

absl::StatusOr<LossAndGradient> CrossEntropyLossAndGradient(
    const SoftmaxClassifier& model, const Matrix& features,
    std::span<const int> labels, double l2_penalty) {
  if (absl::Status s = CheckShape(model, features, labels); !s.ok()) return s;
  if (labels.empty()) return absl::InvalidArgumentError("no examples");
  const double n = static_cast<double>(labels.size());
  Matrix logits = features * model.weights().transpose();
  logits.rowwise() += model.bias().transpose();
  LossAndGradient out;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    out.loss += lse - logits(i, labels[static_cast<size_t>(i)]);
  }
  out.loss = out.loss / n + 0.5 * l2_penalty * model.weights().squaredNorm();
  Matrix residual = ResidualRows(model, features, labels);
  out.grad_weights =
      residual.transpose() * features / n + l2_penalty * model.weights();
  out.grad_bias = residual.colwise().sum().transpose() / n;
  return out;
}

absl::StatusOr<GradientSum> ClippedGradientSum(const SoftmaxClassifier& model,
                                               const Matrix& features,
                                               std::span<const int> labels,
                                               double clip_norm) {
  if (!(clip_norm > 0)) return absl::InvalidArgumentError("clip norm must be > 0");
  if (absl::Status s = CheckShape(model, features, labels); !s.ok()) return s;
  Matrix residual = ResidualRows(model, features, labels);
  // The gradient of example i is residual_i x_i^T for W and residual_i for b,
  // so its squared norm factors as |residual_i|^2 (|x_i|^2 + 1).
  for (Eigen::Index i = 0; i < residual.rows(); ++i) {
    const double norm = std::sqrt(residual.row(i).squaredNorm() *
                                  (features.row(i).squaredNorm() + 1.0));
    if (norm > clip_norm) residual.row(i) *= clip_norm / norm;
  }
  return GradientSum{residual.transpose() * features,
                     residual.colwise().sum().transpose()};
}

absl::StatusOr<double> Accuracy(const SoftmaxClassifier& model,
                                const LabeledDataset& data) {
  if (data.size() == 0) return absl::InvalidArgumentError("dataset is empty");
  absl::StatusOr<std::vector<int>> pred = model.PredictClasses(data.features);
  if (!pred.ok()) return pred.status();
  size_t hits = 0;
  for (size_t i = 0; i < data.size(); ++i) hits += (*pred)[i] == data.labels[i];
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

absl::StatusOr<SoftmaxClassifier> Fit(const LabeledDataset& data,
                                      const SgdConfig& cfg,
                                      const RngStream& rng) {
  return RunSgd(data, cfg, rng, nullptr);
}

int64_t DpSgdSteps(size_t n, const SgdConfig& cfg) {
  const int64_t batch = std::max(1, cfg.batch_size);
  return static_cast<int64_t>(cfg.epochs) *
         ((static_cast<int64_t>(n) + batch - 1) / batch);
}

namespace {

std::optional<SubsamplingSpec> BatchSubsampling(size_t n, const SgdConfig& cfg) {
  const double rate = static_cast<double>(cfg.batch_size) / static_cast<double>(n);
  if (rate >= 1.0) return std::nullopt;
  return SubsamplingSpec{rate};
}

}  // namespace

absl::StatusOr<DpGuarantee> AccountDpSgd(size_t n, const SgdConfig& cfg,
                                         double delta,
                                         const AccountingOptions& options) {
  if (n == 0) return absl::InvalidArgumentError("dataset is empty");
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  if (cfg.noise_multiplier == 0) {
    return DpGuarantee{std::numeric_limits<double>::infinity(), delta};
  }
  const MechanismSpec step{NoiseFamily::kGaussian,
                           cfg.noise_multiplier * cfg.clip_norm, cfg.clip_norm};
  return AccountPipeline(DpSgdSteps(n, cfg), step, BatchSubsampling(n, cfg),
                         delta, options);
}

absl::StatusOr<double> CalibrateNoiseMultiplier(
    size_t n, const SgdConfig& cfg, const DpGuarantee& target,
    const AccountingOptions& options) {
  if (n == 0) return absl::InvalidArgumentError("dataset is empty");
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  absl::StatusOr<double> sigma =
      CalibrateSigma(target, DpSgdSteps(n, cfg), BatchSubsampling(n, cfg),
                     cfg.clip_norm, options);
  if (!sigma.ok()) return sigma.status();
  return *sigma / cfg.clip_norm;
}

absl::StatusOr<DpSgdResult> DpSgdFit(const LabeledDataset& data,
                                     const SgdConfig& cfg, const RngStream& rng,
                                     const DpGuarantee& target,
                                     const AccountingOptions& options) {
  if (data.size() == 0) return absl::InvalidArgumentError("dataset is empty");
  SgdConfig dp_cfg = cfg;
  dp_cfg.sampling = BatchSampling::kPoisson;
  absl::StatusOr<DpGuarantee> consumed =
      AccountDpSgd(data.size(), dp_cfg, target.delta, options);
  if (!consumed.ok()) return consumed.status();
  if (!WithinBudget(*consumed, target)) {
    return absl::ResourceExhaustedError(absl::StrFormat(
        "infeasible: DP-SGD with noise multiplier %g consumes eps=%g > %g",
        cfg.noise_multiplier, consumed->epsilon, target.epsilon));
  }
  const DpNoise noise{cfg.clip_norm, cfg.noise_multiplier * cfg.clip_norm};
  absl::StatusOr<SoftmaxClassifier> model = RunSgd(data, dp_cfg, rng, &noise);
  if (!model.ok()) return model.status();
  return DpSgdResult{*std::move(model), *consumed,
                     DpSgdSteps(data.size(), dp_cfg)};
}

std::string SerializeModel(const SoftmaxClassifier& model) {
  std::string out = "psn-softmax-classifier 1\n";
  absl::StrAppendFormat(&out, "classes %d features %d\n", model.num_classes(),
                        model.num_features());
  out += "bias";
  for (int k = 0; k < model.num_classes(); ++k) {
    absl::StrAppendFormat(&out, " %.17g", model.bias()[k]);
  }
  out += "\n";
  for (int k = 0; k < model.num_classes(); ++k) {
    out += "w";
    for (int j = 0; j < model.num_features(); ++j) {
      absl::StrAppendFormat(&out, " %.17g", model.weights()(k, j));
    }
    out += "\n";
  }
  return out;
}

absl::StatusOr<SoftmaxClassifier> DeserializeModel(absl::string_view text) {
  std::vector<absl::string_view> lines =
      absl::StrSplit(text, '\n', absl::SkipWhitespace());
  if (lines.size() < 3 ||
      absl::StripAsciiWhitespace(lines[0]) != "psn-softmax-classifier 1") {
    return absl::InvalidArgumentError(
        "model file: missing 'psn-softmax-classifier 1' header");
  }
  std::vector<absl::string_view> dims = Tokens(lines[1]);
  int k = 0;
  int d = 0;
  if (dims.size() != 4 || dims[0] != "classes" || dims[2] != "features" ||
      !absl::SimpleAtoi(dims[1], &k) || !absl::SimpleAtoi(dims[3], &d) ||
      k < 1 || d < 1) {
    return absl::InvalidArgumentError("model file: bad dimension line");
  }
  if (lines.size() != static_cast<size_t>(2 + 1 + k)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "model file: expected %d lines, found %d", 3 + k, lines.size()));
  }
  std::vector<absl::string_view> bias_tokens = Tokens(lines[2]);
  if (bias_tokens.size() != static_cast<size_t>(k + 1) ||
      bias_tokens[0] != "bias") {
    return absl::InvalidArgumentError("model file: bad bias line");
  }
  Vector bias(k);
  for (int c = 0; c < k; ++c) {
    absl::StatusOr<double> v = ParseDouble(bias_tokens[c + 1]);
    if (!v.ok()) return v.status();
    bias[c] = *v;
  }
  Matrix weights(k, d);
  for (int c = 0; c < k; ++c) {
    std::vector<absl::string_view> row = Tokens(lines[3 + c]);
    if (row.size() != static_cast<size_t>(d + 1) || row[0] != "w") {
      return absl::InvalidArgumentError(
          absl::StrFormat("model file: bad weight line for class %d", c));
    }
    for (int j = 0; j < d; ++j) {
      absl::StatusOr<double> v = ParseDouble(row[j + 1]);
      if (!v.ok()) return v.status();
      weights(c, j) = *v;
    }
  }
  return SoftmaxClassifier::Create(std::move(weights), std::move(bias));
}

absl::Status SaveModel(const SoftmaxClassifier& model, const std::string& path) {
  return WriteFile(path, SerializeModel(model));
}

absl::StatusOr<SoftmaxClassifier> LoadModel(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  return DeserializeModel(*text);
}

}  // namespace psn
