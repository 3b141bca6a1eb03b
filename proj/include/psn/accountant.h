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

#ifndef PSN_ACCOUNTANT_H_
#define PSN_ACCOUNTANT_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "psn/mechanisms.h"

namespace psn {

// Rényi orders scanned by default when converting to (epsilon, delta)-DP.
std::vector<double> DefaultRdpOrders();

// A privacy cost expressed as epsilon(alpha) over a grid of Rényi orders.
// Orders are strictly increasing and > 1; epsilons are non-negative.
class RdpCurve {
 public:
  static absl::StatusOr<RdpCurve> Create(std::vector<double> orders,
                                         std::vector<double> epsilons);
  static absl::StatusOr<RdpCurve> Zero(std::vector<double> orders);

  std::span<const double> orders() const { return orders_; }
  std::span<const double> epsilons() const { return epsilons_; }
  size_t size() const { return orders_.size(); }
  bool empty() const { return orders_.empty(); }

  bool SameGrid(const RdpCurve& other) const {
    return orders_ == other.orders_;
  }

  // The curve of `times` independent runs of this mechanism.
  RdpCurve Scaled(double times) const;

 private:
  RdpCurve(std::vector<double> orders, std::vector<double> epsilons)
      : orders_(std::move(orders)), epsilons_(std::move(epsilons)) {}

  std::vector<double> orders_;
  std::vector<double> epsilons_;
};

struct DpGuarantee {
  double epsilon = 0;
  double delta = 0;

  absl::Status Validate() const;
};

// Poisson subsampling: every record enters independently with probability
// gamma.
struct SubsamplingSpec {
  double gamma = 1.0;

  absl::Status Validate() const;
};

struct DpConversion {
  DpGuarantee guarantee;
  // Order attaining the minimum; the smallest such order on ties.
  double order = 0;
};

// epsilon(alpha) = alpha * sensitivity^2 / (2 sigma^2).
absl::StatusOr<double> GaussianRdp(double alpha, double sigma,
                                   double sensitivity);

absl::StatusOr<RdpCurve> RdpCurveForGaussian(double sigma, double sensitivity,
                                             std::span<const double> orders);

// Pointwise sum. All curves must share one order grid. The empty composition
// is the zero curve on the default grid.
absl::StatusOr<RdpCurve> Compose(std::span<const RdpCurve> curves);

// min over the grid of epsilon(alpha) + log(1/delta) / (alpha - 1).
// delta must lie in (0, 1].
absl::StatusOr<DpConversion> RdpToDp(const RdpCurve& curve, double delta);

// Running an (eps, delta)-DP mechanism on a Poisson gamma-subsample yields
// (log(1 + gamma (e^eps - 1)), gamma delta)-DP.
absl::StatusOr<DpGuarantee> AmplifyBySubsampling(const DpGuarantee& guarantee,
                                                 const SubsamplingSpec& spec);

// How queries answered over subsampled data are combined.
enum class SubsampledComposition {
  // Compose all queries (in RDP for Gaussian noise, additively for Laplace),
  // convert to (eps, delta), then amplify the total once.
  kComposeThenAmplify,
  // Convert each query at delta / num_queries, amplify it, and add the
  // amplified (eps', delta') pairs across queries.
  kAmplifyPerQuery,
};

absl::string_view CompositionName(SubsampledComposition mode);
absl::StatusOr<SubsampledComposition> ParseComposition(absl::string_view name);

struct AccountingOptions {
  std::vector<double> orders = DefaultRdpOrders();
  SubsampledComposition composition =
      SubsampledComposition::kComposeThenAmplify;
};

// Total guarantee of `num_queries` answers, each protected by `mech`. `delta`
// is the total conversion budget; subsampling scales the reported delta by
// gamma. Laplace queries are pure epsilon-DP with epsilon = sensitivity/scale
// and contribute no delta. Zero queries cost (0, 0).
absl::StatusOr<DpGuarantee> AccountPipeline(
    int64_t num_queries, const MechanismSpec& mech,
    const std::optional<SubsamplingSpec>& subsampling, double delta,
    const AccountingOptions& options = {});

// Smallest noise scale in [1e-4, 1e6] (relative tolerance 1e-6) for which
// AccountPipeline stays within `target`. Returns kResourceExhausted when the
// target cannot be met anywhere in that bracket.
absl::StatusOr<double> CalibrateSigma(
    const DpGuarantee& target, int64_t num_queries,
    const std::optional<SubsamplingSpec>& subsampling, double sensitivity,
    const AccountingOptions& options = {},
    NoiseFamily family = NoiseFamily::kGaussian);

inline constexpr double kMinCalibratedScale = 1e-4;
inline constexpr double kMaxCalibratedScale = 1e6;

// True for statuses produced when a privacy target cannot be met.
bool IsInfeasible(const absl::Status& status);

// True when `consumed` fits within `target`.
bool WithinBudget(const DpGuarantee& consumed, const DpGuarantee& target);

// Query counter for one fixed mechanism that refuses any charge which would
// take the accounted total past its target.
class PrivacyLedger {
 public:
  static absl::StatusOr<PrivacyLedger> Create(
      const DpGuarantee& target, const MechanismSpec& mech,
      const std::optional<SubsamplingSpec>& subsampling,
      AccountingOptions options = {});

  // Commits `queries` more queries, or leaves the ledger untouched and
  // returns kResourceExhausted.
  absl::Status Charge(int64_t queries);

  // Guarantee after `extra` additional queries, without committing them.
  absl::StatusOr<DpGuarantee> Preview(int64_t extra) const;

  int64_t queries() const { return queries_; }
  const DpGuarantee& consumed() const { return consumed_; }
  const DpGuarantee& target() const { return target_; }
  const MechanismSpec& mechanism() const { return mech_; }

 private:
  PrivacyLedger(const DpGuarantee& target, const MechanismSpec& mech,
                const std::optional<SubsamplingSpec>& subsampling,
                AccountingOptions options)
      : target_(target),
        mech_(mech),
        subsampling_(subsampling),
        options_(std::move(options)) {}

  DpGuarantee target_;
  MechanismSpec mech_;
  std::optional<SubsamplingSpec> subsampling_;
  AccountingOptions options_;
  int64_t queries_ = 0;
  DpGuarantee consumed_;
};

}  // namespace psn

#endif  // PSN_ACCOUNTANT_H_
