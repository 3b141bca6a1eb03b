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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.h"
#include "test_util.h"

namespace psn {
namespace {

constexpr double kSqrt2 = 1.4142135623730951;

// A teacher whose posterior is `p` at every input: zero weights and bias
// log(p). Entries of p must be positive.
SoftmaxClassifier ConstantTeacher(const std::vector<double>& p, int d = 2) {
  Vector b(static_cast<Eigen::Index>(p.size()));
  for (size_t k = 0; k < p.size(); ++k) b[k] = std::log(p[k]);
  return *SoftmaxClassifier::Create(Matrix::Zero(b.size(), d), b);
}

// Nearly one-hot on class k.
SoftmaxClassifier OneHotTeacher(int k, int num_classes, int d = 2) {
  Vector b = Vector::Constant(num_classes, -800.0);
  b[k] = 0;
  return *SoftmaxClassifier::Create(Matrix::Zero(num_classes, d), b);
}

const std::vector<double> kX = {0.3, -0.2};

TEST(TeacherEnsemble, Validation) {
  EXPECT_FALSE(TeacherEnsemble::Uniform({}).ok());
  std::vector<SoftmaxClassifier> two = {ConstantTeacher({0.5, 0.5}),
                                        ConstantTeacher({0.5, 0.5})};
  EXPECT_FALSE(TeacherEnsemble::Create(two, {0.5}).ok());
  EXPECT_FALSE(TeacherEnsemble::Create(two, {0.7, 0.7}).ok());
  EXPECT_FALSE(TeacherEnsemble::Create(two, {1.5, -0.5}).ok());
  EXPECT_OK(TeacherEnsemble::Create(two, {0.25, 0.75}).status());
  std::vector<SoftmaxClassifier> mixed = {ConstantTeacher({0.5, 0.5}),
                                          ConstantTeacher({0.2, 0.3, 0.5})};
  EXPECT_FALSE(TeacherEnsemble::Uniform(mixed).ok());
}

TEST(Aggregate, SingleTeacherIsItsPosterior) {
  const SoftmaxClassifier t = ConstantTeacher({0.1, 0.6, 0.3});
  ASSERT_OK_AND_ASSIGN(TeacherEnsemble ens, TeacherEnsemble::Create({t}, {1.0}));
  ASSERT_OK_AND_ASSIGN(std::vector<double> agg, Aggregate(ens, kX));
  ASSERT_OK_AND_ASSIGN(std::vector<double> p, t.PredictProba(kX));
  EXPECT_EQ(agg, p);
}

TEST(Aggregate, OpposedTeachersAverage) {
  ASSERT_OK_AND_ASSIGN(TeacherEnsemble ens,
                       TeacherEnsemble::Uniform({OneHotTeacher(0, 2), OneHotTeacher(1, 2)}));
  ASSERT_OK_AND_ASSIGN(std::vector<double> agg, Aggregate(ens, kX));
  EXPECT_NEAR(agg[0], 0.5, 1e-15);
  EXPECT_NEAR(agg[1], 0.5, 1e-15);
}

TEST(Aggregate, HandComputedConvexCombination) {
  const std::vector<std::vector<double>> p = {
      {0.2, 0.3, 0.5}, {0.6, 0.3, 0.1}, {0.1, 0.1, 0.8}};
  ASSERT_OK_AND_ASSIGN(
      TeacherEnsemble ens,
      TeacherEnsemble::Create({ConstantTeacher(p[0]), ConstantTeacher(p[1]),
                               ConstantTeacher(p[2])},
                              {0.2, 0.3, 0.5}));
  ASSERT_OK_AND_ASSIGN(std::vector<double> agg, Aggregate(ens, kX));
  // 0.2*0.2+0.3*0.6+0.5*0.1, 0.2*0.3+0.3*0.3+0.5*0.1, 0.2*0.5+0.3*0.1+0.5*0.8
  EXPECT_NEAR(agg[0], 0.27, 1e-12);
  EXPECT_NEAR(agg[1], 0.20, 1e-12);
  EXPECT_NEAR(agg[2], 0.53, 1e-12);
}

TEST(Aggregate, DimensionMismatch) {
  ASSERT_OK_AND_ASSIGN(TeacherEnsemble ens,
                       TeacherEnsemble::Uniform({ConstantTeacher({0.5, 0.5}, 3)}));
  EXPECT_FALSE(Aggregate(ens, kX).ok());
  EXPECT_FALSE(NoisyAggregate(ens, kX, {NoiseFamily::kGaussian, 1, 1}, {1, 1}).ok());
}

TEST(Aggregate, SimplexValidAndArgmaxInvariantToLogitScaling) {
  std::mt19937_64 engine(3);
  std::normal_distribution<double> normal(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SoftmaxClassifier> teachers;
    std::vector<double> w;
    double sum = 0;
    for (int i = 0; i < 4; ++i) {
      Matrix W(3, 2);
      Vector b(3);
      for (Eigen::Index j = 0; j < W.size(); ++j) W.data()[j] = normal(engine);
      for (Eigen::Index j = 0; j < 3; ++j) b[j] = normal(engine);
      teachers.push_back(*SoftmaxClassifier::Create(W, b));
      w.push_back(std::abs(normal(engine)) + 0.01);
      sum += w.back();
    }
    for (double& v : w) v /= sum;
    ASSERT_OK_AND_ASSIGN(TeacherEnsemble ens, TeacherEnsemble::Create(teachers, w));
    const std::vector<double> x = {normal(engine), normal(engine)};
    ASSERT_OK_AND_ASSIGN(std::vector<double> agg, Aggregate(ens, x));
    EXPECT_OK(CheckSimplex(agg));

    std::vector<SoftmaxClassifier> shifted = teachers;
    for (SoftmaxClassifier& t : shifted) t.mutable_bias().array() += normal(engine);
    ASSERT_OK_AND_ASSIGN(TeacherEnsemble ens2, TeacherEnsemble::Create(shifted, w));
    ASSERT_OK_AND_ASSIGN(std::vector<double> agg2, Aggregate(ens2, x));
    EXPECT_EQ(Argmax(agg), Argmax(agg2));
  }
}

TEST(NoisyAggregate, TinyNoiseEqualsAggregate) {
  ASSERT_OK_AND_ASSIGN(
      TeacherEnsemble ens,
      TeacherEnsemble::Create({ConstantTeacher({0.2, 0.8}), ConstantTeacher({0.7, 0.3})},
                              {0.4, 0.6}));
  ASSERT_OK_AND_ASSIGN(std::vector<double> clean, Aggregate(ens, kX));
  ASSERT_OK_AND_ASSIGN(std::vector<double> noisy,
                       NoisyAggregate(ens, kX, {NoiseFamily::kGaussian, 1e-15, 1}, {1, 1}));
  for (size_t k = 0; k < clean.size(); ++k) EXPECT_NEAR(noisy[k], clean[k], 1e-13);
}

TEST(NoisyAggregate, IsAggregatePlusWeightedTeacherNoise) {
  ASSERT_OK_AND_ASSIGN(
      TeacherEnsemble ens,
      TeacherEnsemble::Create({ConstantTeacher({0.2, 0.8}), ConstantTeacher({0.7, 0.3})},
                              {0.4, 0.6}));
  const MechanismSpec mech{NoiseFamily::kLaplace, 0.9, 2};
  const RngStream rng(4, 4);
  ASSERT_OK_AND_ASSIGN(std::vector<double> clean, Aggregate(ens, kX));
  ASSERT_OK_AND_ASSIGN(std::vector<double> noisy, NoisyAggregate(ens, kX, mech, rng));
  ASSERT_OK_AND_ASSIGN(std::vector<double> z0, SampleNoise(mech, 2, rng.Derive(0)));
  ASSERT_OK_AND_ASSIGN(std::vector<double> z1, SampleNoise(mech, 2, rng.Derive(1)));
  for (int k = 0; k < 2; ++k) {
    EXPECT_NEAR(noisy[k], clean[k] + 0.4 * z0[k] + 0.6 * z1[k], 1e-12);
  }
}

void ExpectNoiseStd(const std::vector<double>& weights, double scale) {
  std::vector<SoftmaxClassifier> teachers;
  for (size_t i = 0; i < weights.size(); ++i) {
    teachers.push_back(ConstantTeacher({0.3, 0.7}));
  }
  ASSERT_OK_AND_ASSIGN(TeacherEnsemble ens, TeacherEnsemble::Create(teachers, weights));
  ASSERT_OK_AND_ASSIGN(std::vector<double> clean, Aggregate(ens, kX));
  double w2 = 0;
  for (double w : weights) w2 += w * w;
  const double want = scale * std::sqrt(w2);
  const MechanismSpec mech{NoiseFamily::kGaussian, scale, kSqrt2};
  const int draws = 10000;
  std::vector<double> residual(draws);
  double sq = 0;
  for (int t = 0; t < draws; ++t) {
    ASSERT_OK_AND_ASSIGN(std::vector<double> noisy,
                         NoisyAggregate(ens, kX, mech, {21, static_cast<uint64_t>(t)}));
    residual[t] = noisy[0] - clean[0];
    sq += residual[t] * residual[t];
  }
  const double sd = std::sqrt(sq / draws);
  EXPECT_NEAR(sd, want, 0.03 * want);
  const double ks = oracle::KsDistanceToNormal(residual, want);
  EXPECT_GT(oracle::KolmogorovPValue(ks, residual.size()), 0.01);
}

TEST(NoisyAggregate, StdIsScaleTimesWeightNorm) {
  ExpectNoiseStd({0.2, 0.3, 0.5}, 2.0);
  ExpectNoiseStd({1.0}, 0.5);
}

TEST(NoisyAggregate, EqualWeightsAttenuateNoise) {
  for (int n : {2, 5, 10}) {
    ExpectNoiseStd(std::vector<double>(n, 1.0 / n), 3.0);
  }
}

TEST(WmaUpdate, HandArithmetic) {
  const std::vector<double> w = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  const std::vector<int> votes = {0, 1, 0};
  ASSERT_OK_AND_ASSIGN(std::vector<double> next, WmaUpdate(w, votes, 0, 0.5));
  EXPECT_NEAR(next[0], 0.4, 1e-15);
  EXPECT_NEAR(next[1], 0.2, 1e-15);
  EXPECT_NEAR(next[2], 0.4, 1e-15);
}

TEST(WmaUpdate, AllRightOrAllWrongLeavesWeights) {
  const std::vector<double> w = {0.1, 0.2, 0.7};
  ASSERT_OK_AND_ASSIGN(std::vector<double> right, WmaUpdate(w, {{2, 2, 2}}, 2, 0.5));
  ASSERT_OK_AND_ASSIGN(std::vector<double> wrong, WmaUpdate(w, {{0, 1, 0}}, 2, 0.5));
  for (size_t i = 0; i < w.size(); ++i) {
    EXPECT_NEAR(right[i], w[i], 1e-15);
    EXPECT_NEAR(wrong[i], w[i], 1e-15);
  }
}

TEST(WmaUpdate, Errors) {
  const std::vector<double> w = {0.5, 0.5};
  EXPECT_FALSE(WmaUpdate(w, {{0, 0}}, 0, 0).ok());
  EXPECT_FALSE(WmaUpdate(w, {{0, 0}}, 0, 1).ok());
  EXPECT_FALSE(WmaUpdate(w, {{0}}, 0, 0.5).ok());
  const std::vector<double> bad = {0.5, 0.6};
  EXPECT_FALSE(WmaUpdate(bad, {{0, 0}}, 0, 0.5).ok());
}

TEST(WmaUpdate, NeverWrongTeacherEndsStrictlyHeaviest) {
  std::mt19937_64 engine(31);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + trial % 6;
    const int perfect = static_cast<int>(engine() % n);
    std::vector<double> w(n, 1.0 / n);
    std::vector<bool> erred(n, false);
    erred[perfect] = true;
    const int steps = 1 + static_cast<int>(engine() % 30);
    for (int s = 0; s < steps || std::find(erred.begin(), erred.end(), false) != erred.end(); ++s) {
      const int truth = static_cast<int>(engine() % 3);
      std::vector<int> votes(n);
      for (int i = 0; i < n; ++i) {
        const bool wrong = i != perfect && engine() % 2 == 0;
        votes[i] = wrong ? (truth + 1) % 3 : truth;
        if (wrong) erred[i] = true;
      }
      ASSERT_OK_AND_ASSIGN(w, WmaUpdate(w, votes, truth, 0.5));
    }
    for (int i = 0; i < n; ++i) {
      if (i == perfect) continue;
      EXPECT_GT(w[perfect], w[i]);
    }
  }
}

LabeledDataset PublicRows(const std::vector<int>& labels, int d = 2) {
  LabeledDataset out;
  out.features = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), d);
  out.labels = labels;
  out.num_classes = 3;
  out.provenance = Provenance::kPublic;
  return out;
}

TEST(FitWeightsByWma, PenalizesTheWrongTeacherAndCharges) {
  ASSERT_OK_AND_ASSIGN(TeacherEnsemble ens,
                       TeacherEnsemble::Uniform({OneHotTeacher(0, 3), OneHotTeacher(0, 3),
                                                 OneHotTeacher(1, 3)}));
  const MechanismSpec mech{NoiseFamily::kGaussian, 1e-3, kSqrt2};
  const DpGuarantee unlimited{std::numeric_limits<double>::infinity(), 0.5};
  ASSERT_OK_AND_ASSIGN(PrivacyLedger ledger,
                       PrivacyLedger::Create(unlimited, mech, std::nullopt));
  ASSERT_OK_AND_ASSIGN(WmaResult r,
                       FitWeightsByWma(ens, PublicRows({0, 0}), 0.5, {1, 1}, ledger));
  EXPECT_EQ(ledger.queries(), 2);
  EXPECT_EQ(r.mistakes, (std::vector<int>{0, 0, 2}));
  // Two halvings: 1 : 1 : 1/4.
  EXPECT_NEAR(r.weights[0], 4.0 / 9, 1e-12);
  EXPECT_NEAR(r.weights[2], 1.0 / 9, 1e-12);
}

TEST(FitWeightsByWma, RejectsPrivateRowsAndRespectsLedger) {
  ASSERT_OK_AND_ASSIGN(TeacherEnsemble ens, TeacherEnsemble::Uniform({OneHotTeacher(0, 3)}));
  const MechanismSpec mech{NoiseFamily::kGaussian, 6, kSqrt2};
  ASSERT_OK_AND_ASSIGN(PrivacyLedger ledger,
                       PrivacyLedger::Create({8, 0.02}, mech, std::nullopt));
  LabeledDataset priv = PublicRows({0});
  priv.provenance = Provenance::kPrivate;
  EXPECT_FALSE(FitWeightsByWma(ens, priv, 0.5, {1, 1}, ledger).ok());
  EXPECT_EQ(ledger.queries(), 0);

  ASSERT_OK_AND_ASSIGN(PrivacyLedger tight,
                       PrivacyLedger::Create({0.5, 0.02}, mech, std::nullopt));
  absl::StatusOr<WmaResult> r = FitWeightsByWma(ens, PublicRows({0, 1}), 0.5, {1, 1}, tight);
  EXPECT_TRUE(IsInfeasible(r.status()));
}

TEST(PseudoLabel, TinyNoiseGivesCleanArgmax) {
  std::mt19937_64 engine(41);
  std::normal_distribution<double> normal(0, 1);
  std::vector<SoftmaxClassifier> teachers;
  for (int i = 0; i < 3; ++i) {
    Matrix W(3, 2);
    for (Eigen::Index j = 0; j < W.size(); ++j) W.data()[j] = normal(engine);
    teachers.push_back(*SoftmaxClassifier::Create(W, Vector::Zero(3)));
  }
  ASSERT_OK_AND_ASSIGN(TeacherEnsemble ens, TeacherEnsemble::Uniform(teachers));
  Matrix x(50, 2);
  for (Eigen::Index j = 0; j < x.size(); ++j) x.data()[j] = normal(engine);
  const DpGuarantee unlimited{std::numeric_limits<double>::infinity(), 0.5};
  ASSERT_OK_AND_ASSIGN(
      PseudoLabelBatch batch,
      PseudoLabel(ens, x, {NoiseFamily::kGaussian, 1e-12, kSqrt2}, {1, 1}, unlimited,
                  std::nullopt));
  ASSERT_EQ(batch.labels.size(), 50u);
  EXPECT_EQ(batch.queries, 50);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    ASSERT_OK_AND_ASSIGN(std::vector<double> agg,
                         Aggregate(ens, std::span<const double>(x.row(r).data(), 2)));
    EXPECT_EQ(batch.labels[r], Argmax(agg));
  }
  EXPECT_EQ(batch.features, x);
}

TEST(PseudoLabel, ConsumedMatchesAccountantAndStaysInBudget) {
  ASSERT_OK_AND_ASSIGN(TeacherEnsemble ens,
                       TeacherEnsemble::Uniform({OneHotTeacher(0, 3), OneHotTeacher(1, 3),
                                                 OneHotTeacher(2, 3)}));
  const SubsamplingSpec sub{0.25};
  ASSERT_OK_AND_ASSIGN(double sigma, CalibrateSigma({8, 0.02}, 100, sub, kSqrt2));
  const MechanismSpec mech{NoiseFamily::kGaussian, sigma, kSqrt2};
  ASSERT_OK_AND_ASSIGN(PseudoLabelBatch batch,
                       PseudoLabel(ens, Matrix::Zero(100, 2), mech, {2, 2}, {8, 0.02}, sub));
  ASSERT_OK_AND_ASSIGN(DpGuarantee want, AccountPipeline(100, mech, sub, 0.02));
  EXPECT_EQ(batch.consumed.epsilon, want.epsilon);
  EXPECT_EQ(batch.consumed.delta, want.delta);
  EXPECT_LE(batch.consumed.epsilon, 8);
  EXPECT_LE(batch.consumed.delta, 0.02);

  ASSERT_OK_AND_ASSIGN(DpGuarantee doubled, AccountPipeline(200, mech, sub, 0.02));
  EXPECT_GT(doubled.epsilon, want.epsilon);
}

TEST(PseudoLabel, RefusesBeforeAnyQuery) {
  ASSERT_OK_AND_ASSIGN(TeacherEnsemble ens, TeacherEnsemble::Uniform({OneHotTeacher(0, 3)}));
  const MechanismSpec mech{NoiseFamily::kGaussian, 1.0, kSqrt2};
  ASSERT_OK_AND_ASSIGN(PrivacyLedger ledger,
                       PrivacyLedger::Create({8, 0.02}, mech, std::nullopt));
  absl::StatusOr<PseudoLabelBatch> batch =
      PseudoLabel(ens, Matrix::Zero(1000, 2), {1, 1}, ledger);
  ASSERT_FALSE(batch.ok());
  EXPECT_TRUE(IsInfeasible(batch.status()));
  EXPECT_EQ(ledger.queries(), 0);
}

TEST(PseudoLabel, DeterministicAndTieBreaksLow) {
  ASSERT_OK_AND_ASSIGN(TeacherEnsemble ens,
                       TeacherEnsemble::Uniform({OneHotTeacher(0, 3), OneHotTeacher(1, 3)}));
  const MechanismSpec mech{NoiseFamily::kGaussian, 3, kSqrt2};
  const DpGuarantee unlimited{std::numeric_limits<double>::infinity(), 0.5};
  ASSERT_OK_AND_ASSIGN(PseudoLabelBatch a,
                       PseudoLabel(ens, Matrix::Zero(20, 2), mech, {5, 5}, unlimited,
                                   std::nullopt));
  ASSERT_OK_AND_ASSIGN(PseudoLabelBatch b,
                       PseudoLabel(ens, Matrix::Zero(20, 2), mech, {5, 5}, unlimited,
                                   std::nullopt));
  EXPECT_EQ(a.labels, b.labels);

  const std::vector<double> tie = {0.5, 0.5, 0.0};
  EXPECT_EQ(Argmax(tie), 0);
}

}  // namespace
}  // namespace psn
