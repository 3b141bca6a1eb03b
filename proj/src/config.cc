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

#include "psn/config.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "psn/dataset.h"

namespace psn {
namespace {

constexpr std::pair<Method, absl::string_view> kMethodNames[] = {
    {Method::kNonPrivate, "nonprivate"}, {Method::kDpSgd, "dpsgd"},
    {Method::kPate, "pate"},             {Method::kPateSingle, "pate_single"},
    {Method::kPsn, "psn"},               {Method::kPsnSingle, "psn_single"},
};

absl::Status BadValue(absl::string_view key, absl::string_view value,
                      absl::string_view want) {
  return absl::InvalidArgumentError(
      absl::StrFormat("config key '%s': '%s' is not %s", key, value, want));
}

absl::Status SetDouble(absl::string_view key, absl::string_view v, double& out) {
  if (!absl::SimpleAtod(v, &out) || !std::isfinite(out)) {
    return BadValue(key, v, "a finite number");
  }
  return absl::OkStatus();
}

template <typename Int>
absl::Status SetInt(absl::string_view key, absl::string_view v, Int& out) {
  if (!absl::SimpleAtoi(v, &out)) return BadValue(key, v, "an integer");
  return absl::OkStatus();
}

absl::Status SetBool(absl::string_view key, absl::string_view v, bool& out) {
  if (v == "true") {
    out = true;
  } else if (v == "false") {
    out = false;
  } else {
    return BadValue(key, v, "true or false");
  }
  return absl::OkStatus();
}

template <typename T>
absl::Status Assign(absl::StatusOr<T> parsed, T& out) {
  if (!parsed.ok()) return parsed.status();
  out = *std::move(parsed);
  return absl::OkStatus();
}

absl::StatusOr<std::vector<Method>> ParseMethods(absl::string_view text) {
  std::vector<Method> out;
  for (absl::string_view name : absl::StrSplit(text, ',', absl::SkipWhitespace())) {
    absl::StatusOr<Method> m = ParseMethod(absl::StripAsciiWhitespace(name));
    if (!m.ok()) return m.status();
    out.push_back(*m);
  }
  return out;
}

using Setter = std::function<absl::Status(absl::string_view, ExperimentConfig&)>;

const std::map<std::string, Setter, std::less<>>& Setters() {
  static const auto* setters = new std::map<std::string, Setter, std::less<>>{
      {"methods",
       [](absl::string_view v, ExperimentConfig& c) {
         return Assign(ParseMethods(v), c.methods);
       }},
      {"target_epsilon",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetDouble("target_epsilon", v, c.target.epsilon);
       }},
      {"target_delta",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetDouble("target_delta", v, c.target.delta);
       }},
      {"gamma",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetDouble("gamma", v, c.gamma);
       }},
      {"num_teachers",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetInt("num_teachers", v, c.num_teachers);
       }},
      {"query_count",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetInt("query_count", v, c.query_count);
       }},
      {"wma_queries",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetInt("wma_queries", v, c.wma_queries);
       }},
      {"wma_beta",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetDouble("wma_beta", v, c.wma_beta);
       }},
      {"noise_family",
       [](absl::string_view v, ExperimentConfig& c) {
         return Assign(ParseNoiseFamily(v), c.noise_family);
       }},
      {"composition",
       [](absl::string_view v, ExperimentConfig& c) {
         return Assign(ParseComposition(v), c.composition);
       }},
      {"orders",
       [](absl::string_view v, ExperimentConfig& c) {
         return Assign(ParseOrders(v), c.orders);
       }},
      {"seed",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetInt("seed", v, c.seed);
       }},
      {"folds",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetInt("folds", v, c.folds);
       }},
      {"eval_fraction",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetDouble("eval_fraction", v, c.eval_fraction);
       }},
      {"record_wall_clock",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetBool("record_wall_clock", v, c.record_wall_clock);
       }},
      {"learning_rate",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetDouble("learning_rate", v, c.learner.learning_rate);
       }},
      {"epochs",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetInt("epochs", v, c.learner.epochs);
       }},
      {"batch_size",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetInt("batch_size", v, c.learner.batch_size);
       }},
      {"l2_penalty",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetDouble("l2_penalty", v, c.learner.l2_penalty);
       }},
      {"clip_norm",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetDouble("clip_norm", v, c.learner.clip_norm);
       }},
      {"data_source",
       [](absl::string_view v, ExperimentConfig& c) -> absl::Status {
         if (v == "synthetic") {
           c.source = DataSource::kSynthetic;
         } else if (v == "csv") {
           c.source = DataSource::kCsv;
         } else {
           return BadValue("data_source", v, "synthetic or csv");
         }
         return absl::OkStatus();
       }},
      {"synthetic_private_rows",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetInt("synthetic_private_rows", v, c.synthetic.private_rows);
       }},
      {"synthetic_public_rows",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetInt("synthetic_public_rows", v, c.synthetic.public_rows);
       }},
      {"synthetic_features",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetInt("synthetic_features", v, c.synthetic.num_features);
       }},
      {"synthetic_classes",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetInt("synthetic_classes", v, c.synthetic.num_classes);
       }},
      {"synthetic_separation",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetDouble("synthetic_separation", v, c.synthetic.separation);
       }},
      {"private_csv",
       [](absl::string_view v, ExperimentConfig& c) {
         c.csv.private_path = std::string(v);
         return absl::OkStatus();
       }},
      {"public_csv",
       [](absl::string_view v, ExperimentConfig& c) {
         c.csv.public_path = std::string(v);
         return absl::OkStatus();
       }},
      {"csv_classes",
       [](absl::string_view v, ExperimentConfig& c) {
         return SetInt("csv_classes", v, c.csv.num_classes);
       }},
  };
  return *setters;
}

absl::Status Invalid(absl::string_view message) {
  return absl::InvalidArgumentError(message);
}

}  // namespace

absl::string_view MethodName(Method method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "unknown";
}

absl::StatusOr<Method> ParseMethod(absl::string_view name) {
  for (const auto& [m, n] : kMethodNames) {
    if (n == name) return m;
  }
  return absl::InvalidArgumentError(absl::StrFormat(
      "unknown method '%s' (expected nonprivate, dpsgd, pate, pate_single, "
      "psn or psn_single)",
      name));
}

bool IsEnsembleMethod(Method method) {
  return method != Method::kNonPrivate && method != Method::kDpSgd;
}

bool IsSingleTeacher(Method method) {
  return method == Method::kPateSingle || method == Method::kPsnSingle;
}

bool UsesSubsampling(Method method) {
  return method == Method::kPsn || method == Method::kPsnSingle;
}

absl::StatusOr<std::vector<double>> ParseOrders(absl::string_view text) {
  std::vector<double> orders;
  for (absl::string_view item : absl::StrSplit(text, ',', absl::SkipWhitespace())) {
    double a = 0;
    item = absl::StripAsciiWhitespace(item);
    if (!absl::SimpleAtod(item, &a) || !std::isfinite(a)) {
      return absl::InvalidArgumentError(
          absl::StrFormat("order '%s' is not a number", item));
    }
    orders.push_back(a);
  }
  if (orders.empty()) return absl::InvalidArgumentError("no orders given");
  absl::StatusOr<RdpCurve> probe = RdpCurve::Zero(orders);
  if (!probe.ok()) return probe.status();
  return orders;
}

absl::Status ExperimentConfig::Validate() const {
  if (methods.empty()) return Invalid("methods must name at least one method");
  std::set<Method> seen;
  bool any_subsampling = false;
  for (Method m : methods) {
    if (!seen.insert(m).second) {
      return Invalid(
          absl::StrFormat("method '%s' listed twice", MethodName(m)));
    }
    any_subsampling |= UsesSubsampling(m);
  }
  if (!(target.epsilon > 0) || !std::isfinite(target.epsilon)) {
    return Invalid("target_epsilon must be a finite number > 0");
  }
  if (!(target.delta > 0 && target.delta < 1)) {
    return Invalid("target_delta must lie in (0, 1)");
  }
  if (!(gamma > 0 && gamma <= 1)) return Invalid("gamma must lie in (0, 1]");
  if (any_subsampling && gamma >= 1) {
    return Invalid("psn methods need gamma < 1");
  }
  if (num_teachers < 1) return Invalid("num_teachers must be >= 1");
  if (query_count < 1) return Invalid("query_count must be >= 1");
  if (wma_queries < 0 || wma_queries >= query_count) {
    return Invalid("wma_queries must lie in [0, query_count)");
  }
  if (!(wma_beta > 0 && wma_beta < 1)) {
    return Invalid("wma_beta must lie in (0, 1)");
  }
  if (absl::StatusOr<RdpCurve> c = RdpCurve::Zero(orders); !c.ok()) {
    return c.status();
  }
  if (folds < 1) return Invalid("folds must be >= 1");
  if (folds == 1 && !(eval_fraction > 0 && eval_fraction < 1)) {
    return Invalid("eval_fraction must lie in (0, 1)");
  }
  if (absl::Status s = learner.Validate(); !s.ok()) return s;
  if (!(learner.learning_rate > 0)) return Invalid("learning_rate must be > 0");
  if (source == DataSource::kSynthetic) {
    if (synthetic.num_classes < 2) return Invalid("synthetic_classes must be >= 2");
    if (synthetic.num_features < 1) {
      return Invalid("synthetic_features must be >= 1");
    }
    if (synthetic.private_rows < synthetic.num_classes ||
        synthetic.public_rows < synthetic.num_classes) {
      return Invalid("synthetic row counts must be >= synthetic_classes");
    }
    if (!(synthetic.separation >= 0)) {
      return Invalid("synthetic_separation must be >= 0");
    }
    if (synthetic.public_rows < query_count) {
      return Invalid("query_count exceeds synthetic_public_rows");
    }
  } else {
    if (csv.private_path.empty() || csv.public_path.empty()) {
      return Invalid("csv data_source needs private_csv and public_csv");
    }
    if (csv.num_classes < 0) return Invalid("csv_classes must be >= 0");
  }
  return absl::OkStatus();
}

absl::StatusOr<ExperimentConfig> ParseConfig(absl::string_view text) {
  ExperimentConfig config;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    ++line_no;
    line = absl::StripAsciiWhitespace(line);
    if (line.empty() || line.front() == '#') continue;
    const size_t eq = line.find('=');
    if (eq == absl::string_view::npos) {
      return absl::InvalidArgumentError(
          absl::StrFormat("config line %d: expected 'key = value'", line_no));
    }
    absl::string_view key = absl::StripAsciiWhitespace(line.substr(0, eq));
    absl::string_view value = absl::StripAsciiWhitespace(line.substr(eq + 1));
    auto it = Setters().find(key);
    if (it == Setters().end()) {
      return absl::InvalidArgumentError(
          absl::StrFormat("config line %d: unknown key '%s'", line_no, key));
    }
    if (!seen.insert(std::string(key)).second) {
      return absl::InvalidArgumentError(
          absl::StrFormat("config line %d: key '%s' repeated", line_no, key));
    }
    if (absl::Status s = it->second(value, config); !s.ok()) {
      return absl::InvalidArgumentError(
          absl::StrFormat("config line %d: %s", line_no, s.message()));
    }
  }
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  return config;
}

absl::StatusOr<ExperimentConfig> LoadConfig(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  return ParseConfig(*text);
}

std::string FormatConfig(const ExperimentConfig& c) {
  std::vector<absl::string_view> methods;
  for (Method m : c.methods) methods.push_back(MethodName(m));
  std::vector<std::string> orders;
  for (double a : c.orders) orders.push_back(absl::StrFormat("%.17g", a));
  std::string out;
  auto line = [&out](absl::string_view key, const std::string& value) {
    absl::StrAppendFormat(&out, "%s = %s\n", key, value);
  };
  auto num = [](double v) { return absl::StrFormat("%.17g", v); };
  line("methods", absl::StrJoin(methods, ","));
  line("target_epsilon", num(c.target.epsilon));
  line("target_delta", num(c.target.delta));
  line("gamma", num(c.gamma));
  line("num_teachers", absl::StrCat(c.num_teachers));
  line("query_count", absl::StrCat(c.query_count));
  line("wma_queries", absl::StrCat(c.wma_queries));
  line("wma_beta", num(c.wma_beta));
  line("noise_family", std::string(NoiseFamilyName(c.noise_family)));
  line("composition", std::string(CompositionName(c.composition)));
  line("orders", absl::StrJoin(orders, ","));
  line("seed", absl::StrCat(c.seed));
  line("folds", absl::StrCat(c.folds));
  line("eval_fraction", num(c.eval_fraction));
  line("record_wall_clock", c.record_wall_clock ? "true" : "false");
  line("learning_rate", num(c.learner.learning_rate));
  line("epochs", absl::StrCat(c.learner.epochs));
  line("batch_size", absl::StrCat(c.learner.batch_size));
  line("l2_penalty", num(c.learner.l2_penalty));
  line("clip_norm", num(c.learner.clip_norm));
  if (c.source == DataSource::kSynthetic) {
    line("data_source", "synthetic");
    line("synthetic_private_rows", absl::StrCat(c.synthetic.private_rows));
    line("synthetic_public_rows", absl::StrCat(c.synthetic.public_rows));
    line("synthetic_features", absl::StrCat(c.synthetic.num_features));
    line("synthetic_classes", absl::StrCat(c.synthetic.num_classes));
    line("synthetic_separation", num(c.synthetic.separation));
  } else {
    line("data_source", "csv");
    line("private_csv", c.csv.private_path);
    line("public_csv", c.csv.public_path);
    line("csv_classes", absl::StrCat(c.csv.num_classes));
  }
  return out;
}

}  // namespace psn
