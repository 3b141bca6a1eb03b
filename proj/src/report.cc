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

#include "psn/report.h"

#include <cmath>
#include <vector>

#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "psn/dataset.h"

namespace psn {
namespace {

using nlohmann::json;

json Guarantee(const DpGuarantee& g) {
  return {{"epsilon", g.epsilon}, {"delta", g.delta}};
}

json OutcomeToJson(const MethodOutcome& o) {
  json j = {
      {"method", MethodName(o.method)},
      {"status", o.status == OutcomeStatus::kOk ? "ok" : "infeasible"},
      {"private", o.private_method},
  };
  if (o.status != OutcomeStatus::kOk) {
    j["error"] = o.error;
    if (o.noise_scale > 0) j["noise_scale"] = o.noise_scale;
    return j;
  }
  j["accuracy"] = o.accuracy;
  if (o.private_method) {
    j["consumed"] = Guarantee(o.consumed);
    j["noise_scale"] = o.noise_scale;
    j["sensitivity"] = o.sensitivity;
    j["queries"] = o.queries;
  }
  if (IsEnsembleMethod(o.method)) {
    j["teachers"] = o.teachers;
    j["teacher_weights"] = o.teacher_weights;
    j["teacher_rows"] = o.teacher_rows;
    j["label_accuracy"] = o.label_accuracy;
    j["student_rows"] = o.student_rows;
  }
  if (o.method == Method::kDpSgd) {
    j["noise_multiplier"] = o.noise_multiplier;
    j["steps"] = o.steps;
  }
  if (o.wall_clock_seconds.has_value()) {
    j["wall_clock_seconds"] = *o.wall_clock_seconds;
  }
  return j;
}

void Emit(const json& v, std::string& out) {
  switch (v.type()) {
    case json::value_t::object: {
      // nlohmann::json objects are std::map-backed, so iteration is sorted.
      out += '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += json(it.key()).dump();
        out += ':';
        Emit(it.value(), out);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ',';
        Emit(v[i], out);
      }
      out += ']';
      break;
    }
    case json::value_t::number_float: {
      const double d = v.get<double>();
      if (!std::isfinite(d)) {
        out += "null";
      } else {
        absl::StrAppendFormat(&out, "%.17g", d);
      }
      break;
    }
    default:
      out += v.dump();
  }
}

std::string Cell(const json& j, absl::string_view key) {
  if (!j.contains(key)) return "";
  const json& v = j.at(std::string(key));
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return absl::StrFormat("%.6g", v.get<double>());
  return v.dump();
}

std::string Consumed(const json& o, absl::string_view key) {
  if (!o.contains("consumed")) return "";
  return Cell(o.at("consumed"), key);
}

struct Row {
  std::string fold, method, status, accuracy, epsilon, delta, noise_scale,
      teachers, queries;
};

std::vector<Row> Rows(const json& report) {
  std::vector<Row> rows;
  for (const json& fold : report.at("folds")) {
    for (const json& o : fold.at("outcomes")) {
      rows.push_back({fold.at("fold").dump(), Cell(o, "method"),
                      Cell(o, "status"), Cell(o, "accuracy"),
                      Consumed(o, "epsilon"), Consumed(o, "delta"),
                      Cell(o, "noise_scale"), Cell(o, "teachers"),
                      Cell(o, "queries")});
    }
  }
  return rows;
}

}  // namespace

json ConfigToJson(const ExperimentConfig& config) {
  // The config-file text is the single source of key names and formatting.
  json j = json::object();
  for (absl::string_view line :
       absl::StrSplit(FormatConfig(config), '\n', absl::SkipEmpty())) {
    const size_t eq = line.find(" = ");
    j[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 3));
  }
  return j;
}

json ReportToJson(const ExperimentReport& report) {
  json folds = json::array();
  for (const FoldReport& f : report.folds) {
    json outcomes = json::array();
    for (const MethodOutcome& o : f.outcomes) outcomes.push_back(OutcomeToJson(o));
    folds.push_back({{"fold", f.fold},
                     {"train_rows", f.train_rows},
                     {"eval_rows", f.eval_rows},
                     {"outcomes", std::move(outcomes)}});
  }
  return {
      {"format", kReportFormat},
      {"version", kReportVersion},
      {"seed", report.config.seed},
      {"target", Guarantee(report.config.target)},
      {"config", ConfigToJson(report.config)},
      {"data",
       {{"private_rows", report.private_rows},
        {"public_rows", report.public_rows},
        {"num_classes", report.num_classes},
        {"num_features", report.num_features}}},
      {"folds", std::move(folds)},
  };
}

std::string CanonicalJson(const json& value) {
  std::string out;
  Emit(value, out);
  out += '\n';
  return out;
}

absl::StatusOr<json> ParseReport(absl::string_view text) {
  json j = json::parse(text.begin(), text.end(), nullptr,
                       /*allow_exceptions=*/false);
  if (j.is_discarded()) return absl::InvalidArgumentError("report is not JSON");
  if (!j.is_object() || j.value("format", "") != kReportFormat) {
    return absl::InvalidArgumentError(
        absl::StrFormat("report lacks format '%s'", kReportFormat));
  }
  if (j.value("version", 0) != kReportVersion) {
    return absl::InvalidArgumentError(
        absl::StrFormat("unsupported report version (want %d)", kReportVersion));
  }
  if (!j.contains("folds") || !j.at("folds").is_array()) {
    return absl::InvalidArgumentError("report lacks a folds array");
  }
  for (const json& fold : j.at("folds")) {
    if (!fold.is_object() || !fold.contains("fold") ||
        !fold.contains("outcomes") || !fold.at("outcomes").is_array()) {
      return absl::InvalidArgumentError("report fold entry is malformed");
    }
    for (const json& o : fold.at("outcomes")) {
      if (!o.is_object()) {
        return absl::InvalidArgumentError("report outcome is malformed");
      }
    }
  }
  return j;
}

absl::Status EmitReport(const ExperimentReport& report,
                        const std::string& path) {
  return WriteFile(path, CanonicalJson(ReportToJson(report)));
}

absl::StatusOr<json> ReadReport(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  return ParseReport(*text);
}

std::string RenderCsv(const json& report) {
  std::string out =
      "fold,method,status,accuracy,epsilon,delta,noise_scale,teachers,queries\n";
  for (const Row& r : Rows(report)) {
    out += absl::StrJoin({r.fold, r.method, r.status, r.accuracy, r.epsilon,
                          r.delta, r.noise_scale, r.teachers, r.queries},
                         ",");
    out += '\n';
  }
  return out;
}

std::string RenderMarkdown(const json& report) {
  std::string out;
  if (report.contains("target")) {
    absl::StrAppendFormat(&out, "Target budget: epsilon=%s, delta=%s; seed %s\n\n",
                          Cell(report.at("target"), "epsilon"),
                          Cell(report.at("target"), "delta"),
                          Cell(report, "seed"));
  }
  out +=
      "| fold | method | status | accuracy | epsilon | delta | noise scale | "
      "teachers | queries |\n"
      "|---|---|---|---|---|---|---|---|---|\n";
  for (const Row& r : Rows(report)) {
    out += "| " +
           absl::StrJoin({r.fold, r.method, r.status, r.accuracy, r.epsilon,
                          r.delta, r.noise_scale, r.teachers, r.queries},
                         " | ") +
           " |\n";
  }
  return out;
}

}  // namespace psn
