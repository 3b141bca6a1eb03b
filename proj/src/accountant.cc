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

#include "psn/accountant.h"

#include <cmath>
#include <limits>

#include "absl/strings/str_format.h"

namespace psn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

absl::Status ValidateOrders(std::span<const double> orders) {
  for (size_t i = 0; i < orders.size(); ++i) {
    if (!(orders[i] > 1) || !std::isfinite(orders[i])) {
      return absl::InvalidArgumentError(
          absl::StrFormat("Renyi order must be finite and > 1, got %g",
                          orders[i]));
    }
    if (i > 0 && !(orders[i] > orders[i - 1])) {
      return absl::InvalidArgumentError(
          "Renyi orders must be strictly increasing");
    }
  }
  return absl::OkStatus();
}

// log(1 + gamma (e^eps - 1)) without overflow for large eps.
double AmplifiedEpsilon(double eps, double gamma) {
  if (std::isinf(eps)) return kInf;
  if (eps <= 1.0) return std::log1p(gamma * std::expm1(eps));
  return eps + std::log(gamma + (1.0 - gamma) * std::exp(-eps));
}

// Unamplified guarantee of `num_queries` answers at total conversion budget
// `delta`.
absl::StatusOr<DpGuarantee> ComposedGuarantee(double num_queries,
                                              const MechanismSpec& mech,
                                              double delta,
                                              std::span<const double> orders) {
  if (mech.family == NoiseFamily::kLaplace) {
    return DpGuarantee{num_queries * mech.sensitivity / mech.scale, 0.0};
  }
  absl::StatusOr<RdpCurve> curve =
      RdpCurveForGaussian(mech.scale, mech.sensitivity, orders);
  if (!curve.ok()) return curve.status();
  absl::StatusOr<DpConversion> dp =
      RdpToDp(curve->Scaled(num_queries), delta);
  if (!dp.ok()) return dp.status();
  return dp->guarantee;
}

}  // namespace

std::vector<double> DefaultRdpOrders() {
  return {1.25, 1.5, 1.75, 2, 2.5, 3, 4, 5, 6, 8, 16, 32, 64};
}

absl::StatusOr<RdpCurve> RdpCurve::Create(std::vector<double> orders,
                                          std::vector<double> epsilons) {
  if (orders.size() != epsilons.size()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "RDP curve has %d orders but %d epsilons", orders.size(),
        epsilons.size()));
  }
  if (absl::Status s = ValidateOrders(orders); !s.ok()) return s;
  for (double e : epsilons) {
    if (!(e >= 0)) {
      return absl::InvalidArgumentError(
          absl::StrFormat("RDP epsilon must be >= 0, got %g", e));
    }
  }
  return RdpCurve(std::move(orders), std::move(epsilons));
}

absl::StatusOr<RdpCurve> RdpCurve::Zero(std::vector<double> orders) {
  std::vector<double> zeros(orders.size(), 0.0);
  return Create(std::move(orders), std::move(zeros));
}

RdpCurve RdpCurve::Scaled(double times) const {
  std::vector<double> eps = epsilons_;
  for (double& e : eps) e *= times;
  return RdpCurve(orders_, std::move(eps));
}

absl::Status DpGuarantee::Validate() const {
  if (!(epsilon >= 0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("epsilon must be >= 0, got %g", epsilon));
  }
  if (!(delta >= 0 && delta <= 1)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("delta must lie in [0, 1], got %g", delta));
  }
  return absl::OkStatus();
}

absl::Status SubsamplingSpec::Validate() const {
  if (!(gamma > 0 && gamma <= 1)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("sampling rate must lie in (0, 1], got %g", gamma));
  }
  return absl::OkStatus();
}

absl::StatusOr<double> GaussianRdp(double alpha, double sigma,
                                   double sensitivity) {
  if (!(alpha > 1)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("Renyi order must be > 1, got %g", alpha));
  }
  if (!(sigma > 0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("sigma must be > 0, got %g", sigma));
  }
  if (!(sensitivity >= 0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("sensitivity must be >= 0, got %g", sensitivity));
  }
  return alpha * sensitivity * sensitivity / (2.0 * sigma * sigma);
}

absl::StatusOr<RdpCurve> RdpCurveForGaussian(double sigma, double sensitivity,
                                             std::span<const double> orders) {
  std::vector<double> eps;
  eps.reserve(orders.size());
  for (double alpha : orders) {
    absl::StatusOr<double> e = GaussianRdp(alpha, sigma, sensitivity);
    if (!e.ok()) return e.status();
    eps.push_back(*e);
  }
  return RdpCurve::Create({orders.begin(), orders.end()}, std::move(eps));
}

absl::StatusOr<RdpCurve> Compose(std::span<const RdpCurve> curves) {
  if (curves.empty()) return RdpCurve::Zero(DefaultRdpOrders());
  std::vector<double> total(curves.front().size(), 0.0);
  for (const RdpCurve& c : curves) {
    if (!c.SameGrid(curves.front())) {
      return absl::InvalidArgumentError(
          "cannot compose RDP curves on different order grids");
    }
    for (size_t i = 0; i < total.size(); ++i) total[i] += c.epsilons()[i];
  }
  const auto orders = curves.front().orders();
  return RdpCurve::Create({orders.begin(), orders.end()}, std::move(total));
}

absl::StatusOr<DpConversion> RdpToDp(const RdpCurve& curve, double delta) {
  if (curve.empty()) {
    return absl::InvalidArgumentError("cannot convert an empty RDP curve");
  }
  if (!(delta > 0 && delta <= 1)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("delta must lie in (0, 1], got %g", delta));
  }
  const double log_inv_delta = -std::log(delta);
  DpConversion best{{kInf, delta}, curve.orders().front()};
  for (size_t i = 0; i < curve.size(); ++i) {
    const double alpha = curve.orders()[i];
    const double eps = curve.epsilons()[i] + log_inv_delta / (alpha - 1.0);
    // Strict comparison keeps the smallest order on ties.
    if (eps < best.guarantee.epsilon) best = {{eps, delta}, alpha};
  }
  return best;
}

absl::StatusOr<DpGuarantee> AmplifyBySubsampling(const DpGuarantee& guarantee,
                                                 const SubsamplingSpec& spec) {
  if (absl::Status s = guarantee.Validate(); !s.ok()) return s;
  if (absl::Status s = spec.Validate(); !s.ok()) return s;
  if (spec.gamma == 1.0) return guarantee;
  return DpGuarantee{AmplifiedEpsilon(guarantee.epsilon, spec.gamma),
                     spec.gamma * guarantee.delta};
}

absl::string_view CompositionName(SubsampledComposition mode) {
  switch (mode) {
    case SubsampledComposition::kComposeThenAmplify:
      return "compose_then_amplify";
    case SubsampledComposition::kAmplifyPerQuery:
      return "amplify_per_query";
  }
  return "unknown";
}

absl::StatusOr<SubsampledComposition> ParseComposition(absl::string_view name) {
  if (name == "compose_then_amplify") {
    return SubsampledComposition::kComposeThenAmplify;
  }
  if (name == "amplify_per_query") {
    return SubsampledComposition::kAmplifyPerQuery;
  }
  return absl::InvalidArgumentError(
      absl::StrFormat("unknown composition mode '%s'", name));
}

absl::StatusOr<DpGuarantee> AccountPipeline(
    int64_t num_queries, const MechanismSpec& mech,
    const std::optional<SubsamplingSpec>& subsampling, double delta,
    const AccountingOptions& options) {
  if (num_queries < 0) {
    return absl::InvalidArgumentError("query count must be >= 0");
  }
  if (absl::Status s = mech.Validate(); !s.ok()) return s;
  if (subsampling.has_value()) {
    if (absl::Status s = subsampling->Validate(); !s.ok()) return s;
  }
  if (!(delta > 0 && delta <= 1)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("delta must lie in (0, 1], got %g", delta));
  }
  if (absl::Status s = ValidateOrders(options.orders); !s.ok()) return s;
  if (num_queries == 0) return DpGuarantee{0.0, 0.0};

  const double q = static_cast<double>(num_queries);
  if (!subsampling.has_value()) {
    return ComposedGuarantee(q, mech, delta, options.orders);
  }
  switch (options.composition) {
    case SubsampledComposition::kComposeThenAmplify: {
      absl::StatusOr<DpGuarantee> inner =
          ComposedGuarantee(q, mech, delta, options.orders);
      if (!inner.ok()) return inner.status();
      return AmplifyBySubsampling(*inner, *subsampling);
    }
    case SubsampledComposition::kAmplifyPerQuery: {
      absl::StatusOr<DpGuarantee> single =
          ComposedGuarantee(1.0, mech, delta / q, options.orders);
      if (!single.ok()) return single.status();
      absl::StatusOr<DpGuarantee> amplified =
          AmplifyBySubsampling(*single, *subsampling);
      if (!amplified.ok()) return amplified.status();
      return DpGuarantee{q * amplified->epsilon, q * amplified->delta};
    }
  }
  return absl::InternalError("unhandled composition mode");
}

bool WithinBudget(const DpGuarantee& consumed, const DpGuarantee& target) {
  return consumed.epsilon <= target.epsilon && consumed.delta <= target.delta;
}

absl::StatusOr<double> CalibrateSigma(
    const DpGuarantee& target, int64_t num_queries,
    const std::optional<SubsamplingSpec>& subsampling, double sensitivity,
    const AccountingOptions& options, NoiseFamily family) {
  if (!(target.epsilon > 0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("target epsilon must be > 0, got %g", target.epsilon));
  }
  if (!(target.delta > 0 && target.delta <= 1)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("target delta must lie in (0, 1], got %g",
                        target.delta));
  }
  if (num_queries < 1) {
    return absl::InvalidArgumentError("calibration needs at least one query");
  }
  absl::Status error = absl::OkStatus();
  auto feasible = [&](double scale) {
    absl::StatusOr<DpGuarantee> g =
        AccountPipeline(num_queries, MechanismSpec{family, scale, sensitivity},
                        subsampling, target.delta, options);
    if (!g.ok()) {
      error = g.status();
      return false;
    }
    return WithinBudget(*g, target);
  };

  double lo = kMinCalibratedScale;
  double hi = kMaxCalibratedScale;
  if (!feasible(hi)) {
    if (!error.ok()) return error;
    return absl::ResourceExhaustedError(absl::StrFormat(
        "infeasible: no noise scale up to %g meets (eps=%g, delta=%g) for %d "
        "queries",
        hi, target.epsilon, target.delta, num_queries));
  }
  if (feasible(lo)) return lo;
  if (!error.ok()) return error;
  // Bisection in log space; hi stays feasible and lo infeasible throughout.
  while (hi / lo > 1.0 + 1e-6) {
    const double mid = std::sqrt(lo * hi);
    if (feasible(mid)) {
      hi = mid;
    } else {
      if (!error.ok()) return error;
      lo = mid;
    }
  }
  if (!feasible(hi)) {
    return absl::InternalError("calibrated scale failed forward verification");
  }
  return hi;
}

bool IsInfeasible(const absl::Status& status) {
  return status.code() == absl::StatusCode::kResourceExhausted;
}

absl::StatusOr<PrivacyLedger> PrivacyLedger::Create(
    const DpGuarantee& target, const MechanismSpec& mech,
    const std::optional<SubsamplingSpec>& subsampling,
    AccountingOptions options) {
  if (absl::Status s = target.Validate(); !s.ok()) return s;
  if (!(target.delta > 0)) {
    return absl::InvalidArgumentError("ledger target delta must be > 0");
  }
  if (absl::Status s = mech.Validate(); !s.ok()) return s;
  if (subsampling.has_value()) {
    if (absl::Status s = subsampling->Validate(); !s.ok()) return s;
  }
  return PrivacyLedger(target, mech, subsampling, std::move(options));
}

absl::StatusOr<DpGuarantee> PrivacyLedger::Preview(int64_t extra) const {
  if (extra < 0) return absl::InvalidArgumentError("negative query charge");
  return AccountPipeline(queries_ + extra, mech_, subsampling_, target_.delta,
                         options_);
}

absl::Status PrivacyLedger::Charge(int64_t queries) {
  absl::StatusOr<DpGuarantee> next = Preview(queries);
  if (!next.ok()) return next.status();
  if (!WithinBudget(*next, target_)) {
    return absl::ResourceExhaustedError(absl::StrFormat(
        "infeasible: %d queries would consume (eps=%.6g, delta=%.6g) against "
        "target (eps=%g, delta=%g)",
        queries_ + queries, next->epsilon, next->delta, target_.epsilon,
        target_.delta));
  }
  queries_ += queries;
  consumed_ = *next;
  return absl::OkStatus();
}

}  // namespace psn
