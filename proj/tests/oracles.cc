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

#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "boost/math/quadrature/gauss_kronrod.hpp"

namespace psn::oracle {
namespace {

double LogNormalPdf(double x, double mean, double sigma) {
  const double z = (x - mean) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2 * std::numbers::pi);
}

}  // namespace

double RenyiDivergenceGaussians(double alpha, double sigma, double shift) {
  auto log_integrand = [&](double x) {
    return alpha * LogNormalPdf(x, shift, sigma) +
           (1 - alpha) * LogNormalPdf(x, 0.0, sigma);
  };
  const double reach = std::abs(alpha * shift) + std::abs(shift);
  const double lo = -reach - 40 * sigma;
  const double hi = reach + 40 * sigma;
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 4000; ++i) {
    peak = std::max(peak, log_integrand(lo + (hi - lo) * i / 4000.0));
  }
  auto integrand = [&](double x) { return std::exp(log_integrand(x) - peak); };
  double error = 0;
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          integrand, lo, hi, 20, 1e-14, &error);
  return (std::log(integral) + peak) / (alpha - 1);
}

long double AmplifiedEpsilon(long double eps, long double gamma) {
  if (eps > 40) {
    return eps + std::log(gamma + (1 - gamma) * std::exp(-eps));
  }
  return std::log1p(gamma * std::expm1(eps));
}

long double GaussianPipelineEpsilon(long double queries, long double sigma,
                                    long double sensitivity, long double delta,
                                    std::optional<long double> gamma,
                                    std::span<const double> orders) {
  long double best = std::numeric_limits<long double>::infinity();
  for (double a : orders) {
    const long double alpha = a;
    const long double rdp =
        queries * alpha * sensitivity * sensitivity / (2 * sigma * sigma);
    best = std::min(best, rdp + std::log(1 / delta) / (alpha - 1));
  }
  if (!gamma.has_value()) return best;
  return AmplifiedEpsilon(best, *gamma);
}

double KsDistanceToNormal(std::vector<double> samples, double sd) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-samples[i] / (sd * std::numbers::sqrt2));
    d = std::max({d, cdf - i / n, (i + 1) / n - cdf});
  }
  return d;
}

double KolmogorovPValue(double distance, size_t n) {
  const double rn = std::sqrt(static_cast<double>(n));
  const double lambda = (rn + 0.12 + 0.11 / rn) * distance;
  if (lambda < 1e-3) return 1.0;
  double sum = 0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 1 : -1) * term;
    if (term < 1e-300) break;
  }
  return std::clamp(2 * sum, 0.0, 1.0);
}

double SoftmaxLoss(std::span<const double> params, int num_classes,
                   int num_features, std::span<const double> features,
                   std::span<const int> labels, double l2) {
  const size_t n = labels.size();
  const double* w = params.data();
  const double* b = params.data() + num_classes * num_features;
  double total = 0;
  std::vector<double> logits(static_cast<size_t>(num_classes));
  for (size_t i = 0; i < n; ++i) {
    double top = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < num_classes; ++k) {
      double z = b[k];
      for (int j = 0; j < num_features; ++j) {
        z += w[k * num_features + j] * features[i * num_features + j];
      }
      logits[k] = z;
      top = std::max(top, z);
    }
    double sum = 0;
    for (double z : logits) sum += std::exp(z - top);
    total += top + std::log(sum) - logits[labels[i]];
  }
  double norm = 0;
  for (int i = 0; i < num_classes * num_features; ++i) norm += w[i] * w[i];
  return total / static_cast<double>(n) + 0.5 * l2 * norm;
}

std::vector<double> NumericalGradient(std::span<const double> params,
                                      int num_classes, int num_features,
                                      std::span<const double> features,
                                      std::span<const int> labels, double l2,
                                      double h) {
  std::vector<double> p(params.begin(), params.end());
  std::vector<double> grad(p.size());
  for (size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + h;
    const double up =
        SoftmaxLoss(p, num_classes, num_features, features, labels, l2);
    p[i] = saved - h;
    const double down =
        SoftmaxLoss(p, num_classes, num_features, features, labels, l2);
    p[i] = saved;
    grad[i] = (up - down) / (2 * h);
  }
  return grad;
}

bool WithinBinomialBand(size_t k, size_t n, double p, double z) {
  const double mean = static_cast<double>(n) * p;
  const double sd = std::sqrt(static_cast<double>(n) * p * (1 - p));
  return std::abs(static_cast<double>(k) - mean) <= z * sd;
}

}  // namespace psn::oracle
