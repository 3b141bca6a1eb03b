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

#include "psn/experiment.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <future>
#include <numeric>

#include "absl/strings/str_format.h"
#include "psn/ensemble.h"
#include "psn/mechanisms.h"
#include "psn/sampling.h"

namespace psn {
namespace {

// Stream roles. Streams are keyed by role rather than by method, so methods
// that share a role (teacher fitting, query noise, student fitting) see the
// same random numbers.
enum Salt : uint64_t {
  kPrivateDataSalt = 1,
  kPublicDataSalt = 2,
  kSplitSalt = 3,
  kFoldSalt = 4,
  kPartitionSalt = 10,
  kSubsampleSalt = 11,
  kTeacherFitSalt = 12,
  kWmaNoiseSalt = 13,
  kLabelNoiseSalt = 14,
  kStudentFitSalt = 15,
  kNonPrivateFitSalt = 16,
  kDpSgdSalt = 17,
};

struct FoldData {
  LabeledDataset train;
  LabeledDataset eval;
};

absl::StatusOr<std::vector<FoldData>> SplitFolds(const ExperimentConfig& config,
                                                 const LabeledDataset& data,
                                                 const RngStream& rng) {
  const size_t n = data.size();
  std::vector<FoldData> folds;
  if (config.folds == 1) {
    const auto eval_rows = static_cast<size_t>(
        std::llround(config.eval_fraction * static_cast<double>(n)));
    if (eval_rows < 1 || eval_rows >= n) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "eval_fraction %g leaves no train or eval rows out of %d",
          config.eval_fraction, n));
    }
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::mt19937_64 engine = rng.Engine();
    for (size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[UniformIndex(engine, i)]);
    }
    std::vector<size_t> eval(order.begin(), order.begin() + eval_rows);
    std::vector<size_t> train(order.begin() + eval_rows, order.end());
    std::sort(eval.begin(), eval.end());
    std::sort(train.begin(), train.end());
    folds.push_back({data.Subset(train), data.Subset(eval)});
    return folds;
  }
  absl::StatusOr<std::vector<IndexSet>> parts =
      PartitionDisjoint(n, config.folds, rng);
  if (!parts.ok()) return parts.status();
  for (int f = 0; f < config.folds; ++f) {
    std::vector<size_t> train;
    for (int g = 0; g < config.folds; ++g) {
      if (g == f) continue;
      const auto& idx = (*parts)[g].indices;
      train.insert(train.end(), idx.begin(), idx.end());
    }
    std::sort(train.begin(), train.end());
    folds.push_back({data.Subset(train), data.Subset((*parts)[f])});
  }
  return folds;
}

// Outcome for a budget that cannot be met, or the error itself otherwise.
absl::StatusOr<MethodOutcome> InfeasibleOr(const absl::Status& status,
                                           MethodOutcome outcome) {
  if (!IsInfeasible(status)) return status;
  outcome.status = OutcomeStatus::kInfeasible;
  outcome.error = std::string(status.message());
  return outcome;
}

absl::Status CheckLedger(const MethodOutcome& outcome,
                         const DpGuarantee& target) {
  if (!WithinBudget(outcome.consumed, target)) {
    return absl::InternalError(absl::StrFormat(
        "%s reported eps=%.17g delta=%.17g beyond target eps=%g delta=%g",
        MethodName(outcome.method), outcome.consumed.epsilon,
        outcome.consumed.delta, target.epsilon, target.delta));
  }
  return absl::OkStatus();
}

absl::StatusOr<MethodOutcome> RunNonPrivate(const ExperimentConfig& config,
                                            const FoldData& fold,
                                            const RngStream& rng) {
  MethodOutcome out;
  out.method = Method::kNonPrivate;
  absl::StatusOr<SoftmaxClassifier> model =
      Fit(fold.train, config.learner, rng.Derive(kNonPrivateFitSalt));
  if (!model.ok()) return model.status();
  absl::StatusOr<double> acc = Accuracy(*model, fold.eval);
  if (!acc.ok()) return acc.status();
  out.accuracy = *acc;
  return out;
}

absl::StatusOr<MethodOutcome> RunDpSgd(const ExperimentConfig& config,
                                       const FoldData& fold,
                                       const RngStream& rng) {
  MethodOutcome out;
  out.method = Method::kDpSgd;
  out.private_method = true;
  out.sensitivity = config.learner.clip_norm;
  SgdConfig cfg = config.learner;
  cfg.sampling = BatchSampling::kPoisson;
  absl::StatusOr<double> z = CalibrateNoiseMultiplier(
      fold.train.size(), cfg, config.target, config.accounting());
  if (!z.ok()) return InfeasibleOr(z.status(), out);
  cfg.noise_multiplier = *z;
  out.noise_multiplier = *z;
  out.noise_scale = *z * cfg.clip_norm;
  absl::StatusOr<DpSgdResult> result =
      DpSgdFit(fold.train, cfg, rng.Derive(kDpSgdSalt), config.target,
               config.accounting());
  if (!result.ok()) return InfeasibleOr(result.status(), out);
  absl::StatusOr<double> acc = Accuracy(result->model, fold.eval);
  if (!acc.ok()) return acc.status();
  out.accuracy = *acc;
  out.consumed = result->consumed;
  out.steps = result->steps;
  out.queries = result->steps;
  return out;
}

absl::StatusOr<std::vector<SoftmaxClassifier>> FitTeachers(
    const std::vector<LabeledDataset>& shards, const SgdConfig& cfg,
    const RngStream& rng) {
  std::vector<std::future<absl::StatusOr<SoftmaxClassifier>>> jobs;
  jobs.reserve(shards.size());
  for (size_t i = 0; i < shards.size(); ++i) {
    jobs.push_back(std::async(std::launch::async, [&shards, &cfg, rng, i] {
      return Fit(shards[i], cfg, rng.Derive(i));
    }));
  }
  std::vector<SoftmaxClassifier> teachers;
  absl::Status first_error;
  for (auto& job : jobs) {
    absl::StatusOr<SoftmaxClassifier> t = job.get();
    if (!t.ok()) {
      first_error.Update(t.status());
      continue;
    }
    teachers.push_back(*std::move(t));
  }
  if (!first_error.ok()) return first_error;
  return teachers;
}

absl::StatusOr<MethodOutcome> RunEnsemble(const ExperimentConfig& config,
                                          Method method, const FoldData& fold,
                                          const LabeledDataset& public_data,
                                          const RngStream& rng) {
  MethodOutcome out;
  out.method = method;
  out.private_method = true;
  const int num_teachers = IsSingleTeacher(method) ? 1 : config.num_teachers;
  const bool subsampled = UsesSubsampling(method);
  const size_t n = fold.train.size();
  out.teachers = num_teachers;

  // Teacher shards.
  std::vector<LabeledDataset> shards;
  if (subsampled) {
    for (int i = 0; i < num_teachers; ++i) {
      absl::StatusOr<NonEmptySubsample> s = PoissonSubsampleNonEmpty(
          n, config.gamma,
          rng.Derive(kSubsampleSalt).Derive(static_cast<uint64_t>(i)));
      if (!s.ok()) return s.status();
      shards.push_back(fold.train.Subset(s->sample));
    }
  } else {
    if (static_cast<size_t>(num_teachers) > n) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "num_teachers %d exceeds the %d private training rows",
          num_teachers, n));
    }
    absl::StatusOr<std::vector<IndexSet>> parts =
        PartitionDisjoint(n, num_teachers, rng.Derive(kPartitionSalt));
    if (!parts.ok()) return parts.status();
    for (const IndexSet& part : *parts) shards.push_back(fold.train.Subset(part));
  }
  for (const LabeledDataset& s : shards) {
    out.teacher_rows.push_back(static_cast<int64_t>(s.size()));
  }

  // Noise calibrated to the full query plan before any teacher is queried.
  const int num_classes = fold.train.num_classes;
  MechanismSpec mech;
  mech.family = config.noise_family;
  mech.sensitivity = SimplexSensitivity(config.noise_family, num_classes);
  out.sensitivity = mech.sensitivity;
  std::optional<SubsamplingSpec> subsampling;
  if (subsampled) subsampling = SubsamplingSpec{config.gamma};
  absl::StatusOr<double> scale =
      CalibrateSigma(config.target, config.query_count, subsampling,
                     mech.sensitivity, config.accounting(), mech.family);
  if (!scale.ok()) return InfeasibleOr(scale.status(), out);
  mech.scale = *scale;
  out.noise_scale = *scale;
  absl::StatusOr<PrivacyLedger> ledger = PrivacyLedger::Create(
      config.target, mech, subsampling, config.accounting());
  if (!ledger.ok()) return ledger.status();

  absl::StatusOr<std::vector<SoftmaxClassifier>> teachers =
      FitTeachers(shards, config.learner, rng.Derive(kTeacherFitSalt));
  if (!teachers.ok()) return teachers.status();
  absl::StatusOr<TeacherEnsemble> ens =
      TeacherEnsemble::Uniform(*std::move(teachers));
  if (!ens.ok()) return ens.status();

  const auto wma_rows = static_cast<size_t>(config.wma_queries);
  const auto query_rows = static_cast<size_t>(config.query_count);
  if (wma_rows > 0) {
    absl::StatusOr<WmaResult> wma =
        FitWeightsByWma(*ens, public_data.Slice(0, wma_rows), config.wma_beta,
                        rng.Derive(kWmaNoiseSalt), *ledger);
    if (!wma.ok()) return InfeasibleOr(wma.status(), out);
    absl::StatusOr<TeacherEnsemble> weighted =
        ens->WithWeights(std::move(wma->weights));
    if (!weighted.ok()) return weighted.status();
    ens = *std::move(weighted);
  }
  out.teacher_weights = ens->weights();

  const LabeledDataset to_label = public_data.Slice(wma_rows, query_rows);
  absl::StatusOr<PseudoLabelBatch> batch = PseudoLabel(
      *ens, to_label.features, rng.Derive(kLabelNoiseSalt), *ledger);
  if (!batch.ok()) return InfeasibleOr(batch.status(), out);
  out.consumed = batch->consumed;
  out.queries = batch->queries;

  size_t agree = 0;
  for (size_t r = 0; r < to_label.size(); ++r) {
    agree += batch->labels[r] == to_label.labels[r];
  }
  out.label_accuracy =
      static_cast<double>(agree) / static_cast<double>(to_label.size());

  LabeledDataset labeled;
  labeled.features = std::move(batch->features);
  labeled.labels = std::move(batch->labels);
  labeled.num_classes = num_classes;
  labeled.provenance = Provenance::kPublic;
  out.student_rows = static_cast<int64_t>(labeled.size());
  absl::StatusOr<SoftmaxClassifier> student =
      FitStudent(labeled, config.learner, rng.Derive(kStudentFitSalt));
  if (!student.ok()) return student.status();
  absl::StatusOr<double> acc = Accuracy(*student, fold.eval);
  if (!acc.ok()) return acc.status();
  out.accuracy = *acc;
  return out;
}

absl::StatusOr<MethodOutcome> RunMethod(const ExperimentConfig& config,
                                        Method method, const FoldData& fold,
                                        const LabeledDataset& public_data,
                                        const RngStream& rng) {
  switch (method) {
    case Method::kNonPrivate:
      return RunNonPrivate(config, fold, rng);
    case Method::kDpSgd:
      return RunDpSgd(config, fold, rng);
    default:
      return RunEnsemble(config, method, fold, public_data, rng);
  }
}

}  // namespace

absl::StatusOr<std::pair<LabeledDataset, LabeledDataset>> LoadExperimentData(
    const ExperimentConfig& config, const std::string& base_dir) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  const RngStream root(config.seed, 0);
  if (config.source == DataSource::kSynthetic) {
    const SyntheticSource& s = config.synthetic;
    absl::StatusOr<LabeledDataset> priv = GenerateSynthetic(
        static_cast<size_t>(s.private_rows), s.num_features, s.num_classes,
        s.separation, Provenance::kPrivate, root.Derive(kPrivateDataSalt));
    if (!priv.ok()) return priv.status();
    absl::StatusOr<LabeledDataset> pub = GenerateSynthetic(
        static_cast<size_t>(s.public_rows), s.num_features, s.num_classes,
        s.separation, Provenance::kPublic, root.Derive(kPublicDataSalt));
    if (!pub.ok()) return pub.status();
    return std::make_pair(*std::move(priv), *std::move(pub));
  }
  auto resolve = [&base_dir](const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    return p.string();
  };
  absl::StatusOr<LabeledDataset> priv = LoadCsv(
      resolve(config.csv.private_path), Provenance::kPrivate, config.csv.num_classes);
  if (!priv.ok()) return priv.status();
  absl::StatusOr<LabeledDataset> pub = LoadCsv(
      resolve(config.csv.public_path), Provenance::kPublic, config.csv.num_classes);
  if (!pub.ok()) return pub.status();
  const int k = std::max(priv->num_classes, pub->num_classes);
  priv->num_classes = k;
  pub->num_classes = k;
  return std::make_pair(*std::move(priv), *std::move(pub));
}

absl::StatusOr<SoftmaxClassifier> FitStudent(const LabeledDataset& labeled,
                                             const SgdConfig& cfg,
                                             const RngStream& rng) {
  if (labeled.provenance != Provenance::kPublic) {
    return absl::FailedPreconditionError(absl::StrFormat(
        "student training received %s data; only public data is allowed",
        ProvenanceName(labeled.provenance)));
  }
  return Fit(labeled, cfg, rng);
}

absl::StatusOr<ExperimentReport> RunExperiment(
    const ExperimentConfig& config, const LabeledDataset& private_data,
    const LabeledDataset& public_data) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  if (private_data.provenance != Provenance::kPrivate) {
    return absl::FailedPreconditionError("private dataset is not tagged private");
  }
  if (public_data.provenance != Provenance::kPublic) {
    return absl::FailedPreconditionError("public dataset is not tagged public");
  }
  if (absl::Status s = private_data.Validate(); !s.ok()) return s;
  if (absl::Status s = public_data.Validate(); !s.ok()) return s;
  if (private_data.num_features() != public_data.num_features() ||
      private_data.num_classes != public_data.num_classes) {
    return absl::InvalidArgumentError(
        "private and public datasets differ in features or classes");
  }
  if (public_data.size() < static_cast<size_t>(config.query_count)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "query_count %d exceeds the %d public rows", config.query_count,
        public_data.size()));
  }
  if (static_cast<size_t>(config.folds) > private_data.size()) {
    return absl::InvalidArgumentError("more folds than private rows");
  }

  const RngStream root(config.seed, 0);
  absl::StatusOr<std::vector<FoldData>> folds =
      SplitFolds(config, private_data, root.Derive(kSplitSalt));
  if (!folds.ok()) return folds.status();

  ExperimentReport report;
  report.config = config;
  report.private_rows = static_cast<int64_t>(private_data.size());
  report.public_rows = static_cast<int64_t>(public_data.size());
  report.num_classes = private_data.num_classes;
  report.num_features = private_data.num_features();
  for (size_t f = 0; f < folds->size(); ++f) {
    const FoldData& fold = (*folds)[f];
    FoldReport fr;
    fr.fold = static_cast<int>(f);
    fr.train_rows = static_cast<int64_t>(fold.train.size());
    fr.eval_rows = static_cast<int64_t>(fold.eval.size());
    const RngStream fold_rng = root.Derive(kFoldSalt).Derive(f);
    for (Method method : config.methods) {
      const auto start = std::chrono::steady_clock::now();
      absl::StatusOr<MethodOutcome> outcome =
          RunMethod(config, method, fold, public_data, fold_rng);
      if (!outcome.ok()) return outcome.status();
      if (outcome->private_method && outcome->status == OutcomeStatus::kOk) {
        if (absl::Status s = CheckLedger(*outcome, config.target); !s.ok()) {
          return s;
        }
      }
      if (config.record_wall_clock) {
        outcome->wall_clock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
      }
      fr.outcomes.push_back(*std::move(outcome));
    }
    report.folds.push_back(std::move(fr));
  }
  return report;
}

}  // namespace psn
