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

#ifndef PSN_REPORT_H_
#define PSN_REPORT_H_

#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "json.hpp"
#include "psn/config.h"
#include "psn/experiment.h"

namespace psn {

inline constexpr absl::string_view kReportFormat = "psn-experiment-report";
inline constexpr int kReportVersion = 1;

// Every ExperimentConfig field under its config-file key.
nlohmann::json ConfigToJson(const ExperimentConfig& config);
nlohmann::json ReportToJson(const ExperimentReport& report);

// Canonical text: object keys sorted, no insignificant whitespace beyond one
// newline at the end, doubles with 17 significant digits, non-finite doubles
// as null.
std::string CanonicalJson(const nlohmann::json& value);

// Parses report text and checks its format tag and version.
absl::StatusOr<nlohmann::json> ParseReport(absl::string_view text);

absl::Status EmitReport(const ExperimentReport& report, const std::string& path);
absl::StatusOr<nlohmann::json> ReadReport(const std::string& path);

// One row per (fold, method).
std::string RenderCsv(const nlohmann::json& report);
std::string RenderMarkdown(const nlohmann::json& report);

}  // namespace psn

#endif  // PSN_REPORT_H_
