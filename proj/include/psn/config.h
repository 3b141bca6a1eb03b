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

#ifndef PSN_CONFIG_H_
#define PSN_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "psn/accountant.h"
#include "psn/mechanisms.h"
#include "psn/models.h"

namespace psn {

enum class Method {
  kNonPrivate,
  kDpSgd,
  kPate,
  kPateSingle,
  kPsn,
  kPsnSingle,
};

absl::string_view MethodName(Method method);
absl::StatusOr<Method> ParseMethod(absl::string_view name);
bool IsEnsembleMethod(Method method);
bool IsSingleTeacher(Method method);
bool UsesSubsampling(Method method);

enum class DataSource { kSynthetic, kCsv };

struct SyntheticSource {
  int64_t private_rows = 3000;
  int64_t public_rows = 1000;
  int num_features = 2;
  int num_classes = 3;
  double separation = 8.0;
};

struct CsvSource {
  std::string private_path;
  std::string public_path;
  // 0 infers the class count from the largest label seen.
  int num_classes = 0;
};

struct ExperimentConfig {
  std::vector<Method> methods = {Method::kNonPrivate, Method::kDpSgd,
                                 Method::kPate,       Method::kPateSingle,
                                 Method::kPsn,        Method::kPsnSingle};
  DpGuarantee target = {8.0, 0.02};
  double gamma = 0.25;
  int num_teachers = 3;
  // Total noisy ensemble queries, the weighted-majority rows included.
  int64_t query_count = 100;
  int64_t wma_queries = 10;
  double wma_beta = 0.5;
  NoiseFamily noise_family = NoiseFamily::kGaussian;
  SubsampledComposition composition = SubsampledComposition::kComposeThenAmplify;
  std::vector<double> orders = DefaultRdpOrders();
  uint64_t seed = 1;
  // 1 uses a single random held-out split of size eval_fraction.
  int folds = 1;
  double eval_fraction = 0.3;
  bool record_wall_clock = false;
  SgdConfig learner;
  DataSource source = DataSource::kSynthetic;
  SyntheticSource synthetic;
  CsvSource csv;

  absl::Status Validate() const;
  AccountingOptions accounting() const { return {orders, composition}; }
};

// Parses flat `key = value` text. Blank lines and lines starting with '#' are
// ignored; unknown or repeated keys are errors. Unset keys keep defaults.
absl::StatusOr<ExperimentConfig> ParseConfig(absl::string_view text);
absl::StatusOr<ExperimentConfig> LoadConfig(const std::string& path);

// Writes every field in the text format ParseConfig reads.
std::string FormatConfig(const ExperimentConfig& config);

// Comma-separated list of orders, each > 1 and strictly increasing.
absl::StatusOr<std::vector<double>> ParseOrders(absl::string_view text);

}  // namespace psn

#endif  // PSN_CONFIG_H_
