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

// Command-line front end: calibrate, run, report and generate.
//
// Exit codes: 0 success, 1 internal error, 2 config or usage error,
// 3 infeasible budget, 4 I/O error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "json.hpp"
#include "psn/accountant.h"
#include "psn/config.h"
#include "psn/dataset.h"
#include "psn/experiment.h"
#include "psn/mechanisms.h"
#include "psn/report.h"

namespace psn {
namespace {

enum ExitCode {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitInfeasible = 3,
  kExitIo = 4,
};

int ExitCodeFor(const absl::Status& status) {
  if (status.ok()) return kExitOk;
  if (IsInfeasible(status)) return kExitInfeasible;
  switch (status.code()) {
    case absl::StatusCode::kNotFound:
    case absl::StatusCode::kPermissionDenied:
    case absl::StatusCode::kDataLoss:
      return kExitIo;
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kFailedPrecondition:
    case absl::StatusCode::kOutOfRange:
      return kExitConfig;
    default:
      return kExitInternal;
  }
}

int Fail(const absl::Status& status) {
  std::fprintf(stderr, "psn: %s\n", std::string(status.message()).c_str());
  return ExitCodeFor(status);
}

struct CalibrateArgs {
  double target_eps = 8.0;
  double delta = 0.02;
  std::optional<double> gamma;
  int64_t queries = 1;
  std::string orders;
  std::string family = "gaussian";
  std::optional<double> sensitivity;
  int classes = 3;
  std::string composition = "compose_then_amplify";
};

int Calibrate(const CalibrateArgs& args) {
  absl::StatusOr<NoiseFamily> family = ParseNoiseFamily(args.family);
  if (!family.ok()) return Fail(family.status());
  absl::StatusOr<SubsampledComposition> composition =
      ParseComposition(args.composition);
  if (!composition.ok()) return Fail(composition.status());
  AccountingOptions options;
  options.composition = *composition;
  if (!args.orders.empty()) {
    absl::StatusOr<std::vector<double>> orders = ParseOrders(args.orders);
    if (!orders.ok()) return Fail(orders.status());
    options.orders = *orders;
  }
  std::optional<SubsamplingSpec> subsampling;
  if (args.gamma.has_value() && *args.gamma != 1.0) {
    subsampling = SubsamplingSpec{*args.gamma};
    if (absl::Status s = subsampling->Validate(); !s.ok()) return Fail(s);
  }
  if (args.classes < 2) {
    return Fail(absl::InvalidArgumentError("--classes must be >= 2"));
  }
  if (args.queries < 1) {
    return Fail(absl::InvalidArgumentError("--queries must be >= 1"));
  }
  const double sensitivity =
      args.sensitivity.value_or(SimplexSensitivity(*family, args.classes));
  const DpGuarantee target{args.target_eps, args.delta};
  absl::StatusOr<double> scale = CalibrateSigma(
      target, args.queries, subsampling, sensitivity, options, *family);
  if (!scale.ok()) return Fail(scale.status());
  absl::StatusOr<DpGuarantee> consumed = AccountPipeline(
      args.queries, MechanismSpec{*family, *scale, sensitivity}, subsampling,
      args.delta, options);
  if (!consumed.ok()) return Fail(consumed.status());

  nlohmann::json out = {
      {"noise_family", NoiseFamilyName(*family)},
      {"noise_scale", *scale},
      {"sensitivity", sensitivity},
      {"queries", args.queries},
      {"gamma", subsampling.has_value() ? subsampling->gamma : 1.0},
      {"composition", CompositionName(*composition)},
      {"target", {{"epsilon", target.epsilon}, {"delta", target.delta}}},
      {"consumed", {{"epsilon", consumed->epsilon}, {"delta", consumed->delta}}},
  };
  std::fputs(CanonicalJson(out).c_str(), stdout);
  return kExitOk;
}

int Run(const std::string& config_path, std::optional<uint64_t> seed,
        const std::string& out_path) {
  absl::StatusOr<ExperimentConfig> config = LoadConfig(config_path);
  if (!config.ok()) return Fail(config.status());
  if (seed.has_value()) config->seed = *seed;
  const std::string base_dir =
      std::filesystem::path(config_path).parent_path().string();
  auto data = LoadExperimentData(*config, base_dir);
  if (!data.ok()) return Fail(data.status());
  absl::StatusOr<ExperimentReport> report =
      RunExperiment(*config, data->first, data->second);
  if (!report.ok()) return Fail(report.status());
  if (absl::Status s = EmitReport(*report, out_path); !s.ok()) return Fail(s);
  int code = kExitOk;
  for (const FoldReport& fold : report->folds) {
    for (const MethodOutcome& o : fold.outcomes) {
      if (o.status == OutcomeStatus::kInfeasible) {
        std::fprintf(stderr, "psn: fold %d %s: %s\n", fold.fold,
                     std::string(MethodName(o.method)).c_str(), o.error.c_str());
        code = kExitInfeasible;
      }
    }
  }
  return code;
}

int Report(const std::string& in_path, const std::string& format) {
  absl::StatusOr<nlohmann::json> report = ReadReport(in_path);
  if (!report.ok()) return Fail(report.status());
  if (format == "json") {
    std::fputs(CanonicalJson(*report).c_str(), stdout);
  } else if (format == "csv") {
    std::fputs(RenderCsv(*report).c_str(), stdout);
  } else {
    std::fputs(RenderMarkdown(*report).c_str(), stdout);
  }
  return kExitOk;
}

int Generate(const std::string& config_path, std::optional<uint64_t> seed,
             const std::string& private_out, const std::string& public_out) {
  absl::StatusOr<ExperimentConfig> config = LoadConfig(config_path);
  if (!config.ok()) return Fail(config.status());
  if (seed.has_value()) config->seed = *seed;
  if (config->source != DataSource::kSynthetic) {
    return Fail(absl::InvalidArgumentError(
        "generate needs data_source = synthetic"));
  }
  auto data = LoadExperimentData(*config);
  if (!data.ok()) return Fail(data.status());
  if (absl::Status s = WriteCsv(data->first, private_out); !s.ok()) return Fail(s);
  if (absl::Status s = WriteCsv(data->second, public_out); !s.ok()) return Fail(s);
  return kExitOk;
}

}  // namespace
}  // namespace psn

int main(int argc, char** argv) {
  CLI::App app{"Private teacher-ensemble laboratory"};
  app.require_subcommand(1);

  psn::CalibrateArgs cal;
  CLI::App* calibrate =
      app.add_subcommand("calibrate", "Smallest noise scale meeting a budget");
  calibrate->add_option("--target-eps", cal.target_eps, "Target epsilon")
      ->required();
  calibrate->add_option("--delta", cal.delta, "Target delta")->required();
  calibrate->add_option("--gamma", cal.gamma,
                        "Poisson subsampling rate; omit for none");
  calibrate->add_option("--queries", cal.queries, "Number of queries")
      ->required();
  calibrate->add_option("--orders", cal.orders,
                        "Comma-separated Renyi orders");
  calibrate->add_option("--family", cal.family, "gaussian or laplace")
      ->check(CLI::IsMember({"gaussian", "laplace"}));
  calibrate->add_option("--sensitivity", cal.sensitivity,
                        "Query sensitivity; defaults to the simplex bound");
  calibrate->add_option("--classes", cal.classes, "Number of classes");
  calibrate->add_option("--composition", cal.composition,
                        "compose_then_amplify or amplify_per_query");

  std::string config_path;
  std::string out_path;
  std::optional<uint64_t> seed;
  CLI::App* run = app.add_subcommand("run", "Run an experiment");
  run->add_option("--config", config_path, "Config file")->required();
  run->add_option("--seed", seed, "Overrides the config seed");
  run->add_option("--out", out_path, "Report JSON path")->required();

  std::string in_path;
  std::string format = "json";
  CLI::App* report = app.add_subcommand("report", "Render a report");
  report->add_option("--in", in_path, "Report JSON path")->required();
  report->add_option("--format", format, "json, csv or md")
      ->check(CLI::IsMember({"json", "csv", "md"}));

  std::string gen_config;
  std::string private_out;
  std::string public_out;
  std::optional<uint64_t> gen_seed;
  CLI::App* generate =
      app.add_subcommand("generate", "Write the synthetic datasets as CSV");
  generate->add_option("--config", gen_config, "Config file")->required();
  generate->add_option("--seed", gen_seed, "Overrides the config seed");
  generate->add_option("--private-out", private_out, "Private CSV path")
      ->required();
  generate->add_option("--public-out", public_out, "Public CSV path")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? psn::kExitOk : psn::kExitConfig;
  }

  if (calibrate->parsed()) return psn::Calibrate(cal);
  if (run->parsed()) return psn::Run(config_path, seed, out_path);
  if (report->parsed()) return psn::Report(in_path, format);
  if (generate->parsed()) {
    return psn::Generate(gen_config, gen_seed, private_out, public_out);
  }
  return psn::kExitConfig;
}
