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
#include <filesystem>
#include <limits>
#include <string>

#include "absl/strings/str_split.h"
#include "gtest/gtest.h"
#include "psn/dataset.h"
#include "test_util.h"

namespace psn {
namespace {

using nlohmann::json;

ExperimentReport HandReport() {
  ExperimentReport r;
  r.config.methods = {Method::kNonPrivate, Method::kPsn};
  r.private_rows = 10;
  r.public_rows = 5;
  r.num_classes = 3;
  r.num_features = 2;
  FoldReport f;
  f.train_rows = 7;
  f.eval_rows = 3;
  MethodOutcome base;
  base.method = Method::kNonPrivate;
  base.accuracy = 2.0 / 3;
  MethodOutcome psn;
  psn.method = Method::kPsn;
  psn.private_method = true;
  psn.accuracy = 1.0 / 3;
  psn.consumed = {7.999999999999999, 0.005};
  psn.noise_scale = 6.0412345678901234;
  psn.sensitivity = std::sqrt(2.0);
  psn.teachers = 3;
  psn.queries = 5;
  psn.teacher_weights = {0.1, 0.2, 0.7};
  psn.teacher_rows = {2, 1, 3};
  psn.label_accuracy = 0.4;
  psn.student_rows = 4;
  f.outcomes = {base, psn};
  r.folds = {f};
  return r;
}

TEST(CanonicalJson, SortedCompactAndNewlineTerminated) {
  const json j = {{"b", 1}, {"a", {{"d", 0.1}, {"c", "x"}}}, {"e", json::array({true, nullptr})}};
  EXPECT_EQ(CanonicalJson(j), "{\"a\":{\"c\":\"x\",\"d\":0.10000000000000001},\"b\":1,\"e\":[true,null]}\n");
}

TEST(CanonicalJson, NonFiniteBecomesNull) {
  EXPECT_EQ(CanonicalJson(json(std::numeric_limits<double>::infinity())), "null\n");
  EXPECT_EQ(CanonicalJson(json(std::nan(""))), "null\n");
}

TEST(CanonicalJson, DoublesRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3, 6.0412345678901234, 1e-300, 123456789.123, -2.5}) {
    const std::string text = CanonicalJson(json(v));
    EXPECT_EQ(json::parse(text).get<double>(), v) << text;
  }
}

TEST(ReportToJson, Schema) {
  const json j = ReportToJson(HandReport());
  EXPECT_EQ(j.at("format"), std::string(kReportFormat));
  EXPECT_EQ(j.at("version"), kReportVersion);
  EXPECT_EQ(j.at("seed"), 1);
  EXPECT_EQ(j.at("target").at("epsilon"), 8.0);
  EXPECT_EQ(j.at("target").at("delta"), 0.02);
  EXPECT_EQ(j.at("data").at("private_rows"), 10);
  EXPECT_EQ(j.at("data").at("num_features"), 2);

  // Every config-file key is carried through.
  const json& cfg = j.at("config");
  for (absl::string_view line :
       absl::StrSplit(FormatConfig(HandReport().config), '\n', absl::SkipEmpty())) {
    const std::string key(line.substr(0, line.find(" = ")));
    EXPECT_TRUE(cfg.contains(key)) << key;
  }
  EXPECT_EQ(cfg.at("methods"), "nonprivate,psn");

  const json& outcomes = j.at("folds").at(0).at("outcomes");
  ASSERT_EQ(outcomes.size(), 2u);
  EXPECT_EQ(outcomes[0].at("method"), "nonprivate");
  EXPECT_EQ(outcomes[1].at("method"), "psn");
  EXPECT_FALSE(outcomes[0].contains("consumed"));
  EXPECT_FALSE(outcomes[0].contains("teacher_weights"));
  EXPECT_EQ(outcomes[1].at("consumed").at("epsilon"), 7.999999999999999);
  EXPECT_EQ(outcomes[1].at("teacher_rows"), json::array({2, 1, 3}));
  EXPECT_EQ(outcomes[1].at("student_rows"), 4);
  EXPECT_FALSE(outcomes[1].contains("wall_clock_seconds"));
  EXPECT_FALSE(outcomes[1].contains("steps"));
}

TEST(ReportToJson, InfeasibleOutcomeCarriesError) {
  ExperimentReport r = HandReport();
  MethodOutcome& o = r.folds[0].outcomes[1];
  o.status = OutcomeStatus::kInfeasible;
  o.error = "infeasible: too many queries";
  const json out = ReportToJson(r).at("folds").at(0).at("outcomes").at(1);
  EXPECT_EQ(out.at("status"), "infeasible");
  EXPECT_EQ(out.at("error"), "infeasible: too many queries");
  EXPECT_FALSE(out.contains("accuracy"));
}

TEST(Report, WriteReadWriteIsAFixedPoint) {
  const std::string path =
      (std::filesystem::path(PSN_TEST_TMPDIR) / "report_fixed_point.json").string();
  const ExperimentReport r = HandReport();
  ASSERT_OK(EmitReport(r, path));
  ASSERT_OK_AND_ASSIGN(std::string first, ReadFile(path));
  ASSERT_OK_AND_ASSIGN(json parsed, ReadReport(path));
  EXPECT_EQ(CanonicalJson(parsed), first);
  EXPECT_EQ(parsed, ReportToJson(r));
}

TEST(ParseReport, RejectsForeignDocuments) {
  EXPECT_FALSE(ParseReport("not json").ok());
  EXPECT_FALSE(ParseReport("[]").ok());
  EXPECT_FALSE(ParseReport(R"({"format":"other","version":1,"folds":[]})").ok());
  EXPECT_FALSE(ParseReport(R"({"format":"psn-experiment-report","version":2,"folds":[]})").ok());
  EXPECT_FALSE(ParseReport(R"({"format":"psn-experiment-report","version":1})").ok());
  EXPECT_FALSE(
      ParseReport(R"({"format":"psn-experiment-report","version":1,"folds":[{"fold":0}]})").ok());
  EXPECT_FALSE(ParseReport(
                   R"({"format":"psn-experiment-report","version":1,"folds":[{"fold":0,"outcomes":[1]}]})")
                   .ok());
  EXPECT_OK(ParseReport(R"({"format":"psn-experiment-report","version":1,"folds":[]})").status());
  EXPECT_EQ(ReadReport("/nonexistent/r.json").status().code(), absl::StatusCode::kNotFound);
}

TEST(Render, CsvRowsFollowMethodOrder) {
  const std::string csv = RenderCsv(ReportToJson(HandReport()));
  EXPECT_EQ(csv,
            "fold,method,status,accuracy,epsilon,delta,noise_scale,teachers,queries\n"
            "0,nonprivate,ok,0.666667,,,,,\n"
            "0,psn,ok,0.333333,8,0.005,6.04123,3,5\n");
}

TEST(Render, MarkdownTable) {
  const std::string md = RenderMarkdown(ReportToJson(HandReport()));
  EXPECT_NE(md.find("Target budget: epsilon=8, delta=0.02; seed 1"), std::string::npos);
  EXPECT_NE(md.find("| 0 | psn | ok | 0.333333 | 8 | 0.005 | 6.04123 | 3 | 5 |"),
            std::string::npos);
  EXPECT_NE(md.find("| 0 | nonprivate | ok | 0.666667 |  |  |  |  |  |"), std::string::npos);
}

}  // namespace
}  // namespace psn
