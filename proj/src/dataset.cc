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

#include "psn/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"

namespace psn {

absl::string_view ProvenanceName(Provenance p) {
  return p == Provenance::kPrivate ? "private" : "public";
}

absl::Status LabeledDataset::Validate() const {
  if (labels.empty()) return absl::InvalidArgumentError("dataset is empty");
  if (static_cast<size_t>(features.rows()) != labels.size()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "dataset has %d feature rows but %d labels", features.rows(),
        labels.size()));
  }
  if (num_classes < 1) {
    return absl::InvalidArgumentError("dataset needs at least one class");
  }
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "row %d has label %d outside [0, %d)", i, labels[i], num_classes));
    }
  }
  if (!features.allFinite()) {
    return absl::InvalidArgumentError("dataset has non-finite features");
  }
  return absl::OkStatus();
}

LabeledDataset LabeledDataset::Subset(
    const std::vector<size_t>& indices) const {
  LabeledDataset out;
  out.features.resize(static_cast<Eigen::Index>(indices.size()),
                      features.cols());
  out.labels.reserve(indices.size());
  for (size_t r = 0; r < indices.size(); ++r) {
    out.features.row(static_cast<Eigen::Index>(r)) =
        features.row(static_cast<Eigen::Index>(indices[r]));
    out.labels.push_back(labels[indices[r]]);
  }
  out.num_classes = num_classes;
  out.provenance = provenance;
  return out;
}

LabeledDataset LabeledDataset::Slice(size_t begin, size_t end) const {
  LabeledDataset out;
  out.features = features.middleRows(static_cast<Eigen::Index>(begin),
                                     static_cast<Eigen::Index>(end - begin));
  out.labels.assign(labels.begin() + begin, labels.begin() + end);
  out.num_classes = num_classes;
  out.provenance = provenance;
  return out;
}

absl::StatusOr<LabeledDataset> GenerateSynthetic(size_t n, int num_features,
                                                 int num_classes,
                                                 double separation,
                                                 Provenance provenance,
                                                 const RngStream& rng) {
  if (num_features < 1 || num_classes < 1) {
    return absl::InvalidArgumentError(
        "synthetic data needs at least one feature and one class");
  }
  if (n < static_cast<size_t>(num_classes)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "need at least one row per class: n=%d < K=%d", n, num_classes));
  }
  if (!(separation >= 0) || !std::isfinite(separation)) {
    return absl::InvalidArgumentError("class separation must be >= 0");
  }

  Matrix means = Matrix::Zero(num_classes, num_features);
  if (num_classes <= num_features) {
    for (int k = 0; k < num_classes; ++k) {
      means(k, k) = separation / std::numbers::sqrt2;
    }
  } else if (num_features >= 2) {
    const double radius =
        separation / (2.0 * std::sin(std::numbers::pi / num_classes));
    for (int k = 0; k < num_classes; ++k) {
      const double angle = 2.0 * std::numbers::pi * k / num_classes;
      means(k, 0) = radius * std::cos(angle);
      means(k, 1) = radius * std::sin(angle);
    }
  } else {
    for (int k = 0; k < num_classes; ++k) means(k, 0) = separation * k;
  }

  std::mt19937_64 engine = rng.Engine();
  LabeledDataset out;
  out.num_classes = num_classes;
  out.provenance = provenance;
  out.labels.resize(n);
  for (size_t i = 0; i < n; ++i) out.labels[i] = static_cast<int>(i % num_classes);
  for (size_t i = n; i > 1; --i) {
    std::swap(out.labels[i - 1], out.labels[UniformIndex(engine, i)]);
  }
  out.features.resize(static_cast<Eigen::Index>(n), num_features);
  for (size_t i = 0; i < n; ++i) {
    for (int j = 0; j < num_features; ++j) {
      out.features(i, j) = means(out.labels[i], j) + StandardNormal(engine);
    }
  }
  return out;
}

namespace {

absl::StatusOr<double> ParseNumber(absl::string_view cell, size_t line) {
  cell = absl::StripAsciiWhitespace(cell);
  double value = 0;
  const auto [ptr, ec] =
      std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
    return absl::InvalidArgumentError(
        absl::StrFormat("line %d: '%s' is not a number", line, cell));
  }
  return value;
}

}  // namespace

absl::StatusOr<LabeledDataset> ParseCsv(absl::string_view text,
                                        Provenance provenance,
                                        int num_classes) {
  std::vector<absl::string_view> lines = absl::StrSplit(text, '\n');
  while (!lines.empty() && absl::StripAsciiWhitespace(lines.back()).empty()) {
    lines.pop_back();
  }
  if (lines.empty()) return absl::InvalidArgumentError("line 1: missing header");

  std::vector<absl::string_view> header =
      absl::StrSplit(absl::StripAsciiWhitespace(lines[0]), ',');
  if (header.size() < 2) {
    return absl::InvalidArgumentError(
        "line 1: header must be f1,...,fd,label");
  }
  const int d = static_cast<int>(header.size()) - 1;
  for (int j = 0; j < d; ++j) {
    if (absl::StripAsciiWhitespace(header[j]) != absl::StrFormat("f%d", j + 1)) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "line 1: unknown header column '%s', expected f%d", header[j],
          j + 1));
    }
  }
  if (absl::StripAsciiWhitespace(header.back()) != "label") {
    return absl::InvalidArgumentError(absl::StrFormat(
        "line 1: last header column must be 'label', got '%s'",
        header.back()));
  }

  std::vector<double> cells;
  std::vector<int> labels;
  for (size_t li = 1; li < lines.size(); ++li) {
    const size_t line_no = li + 1;
    std::vector<absl::string_view> row =
        absl::StrSplit(absl::StripAsciiWhitespace(lines[li]), ',');
    if (row.size() != header.size()) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "line %d: expected %d cells, found %d", line_no, header.size(),
          row.size()));
    }
    for (int j = 0; j < d; ++j) {
      absl::StatusOr<double> v = ParseNumber(row[j], line_no);
      if (!v.ok()) return v.status();
      cells.push_back(*v);
    }
    absl::StatusOr<double> label = ParseNumber(row.back(), line_no);
    if (!label.ok()) return label.status();
    if (*label != std::floor(*label) || *label < 0) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "line %d: label %g is not a non-negative integer", line_no, *label));
    }
    if (num_classes > 0 && *label >= num_classes) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "line %d: label %g outside [0, %d)", line_no, *label, num_classes));
    }
    labels.push_back(static_cast<int>(*label));
  }
  if (labels.empty()) return absl::InvalidArgumentError("no data rows");

  LabeledDataset out;
  out.provenance = provenance;
  out.labels = std::move(labels);
  out.features = Eigen::Map<Matrix>(cells.data(),
                                    static_cast<Eigen::Index>(out.labels.size()),
                                    d);
  if (num_classes > 0) {
    out.num_classes = num_classes;
  } else {
    out.num_classes = 1 + *std::max_element(out.labels.begin(), out.labels.end());
  }
  if (absl::Status s = out.Validate(); !s.ok()) return s;
  return out;
}

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrFormat("cannot open '%s'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    return absl::DataLossError(absl::StrFormat("error reading '%s'", path));
  }
  return buf.str();
}

absl::Status WriteFile(const std::string& path, absl::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrFormat("cannot open '%s' for writing", path));
  }
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.close();
  if (!out) return absl::DataLossError(absl::StrFormat("error writing '%s'", path));
  return absl::OkStatus();
}

absl::StatusOr<LabeledDataset> LoadCsv(const std::string& path,
                                       Provenance provenance,
                                       int num_classes) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  absl::StatusOr<LabeledDataset> data =
      ParseCsv(*text, provenance, num_classes);
  if (!data.ok()) {
    return absl::Status(data.status().code(),
                        absl::StrFormat("%s: %s", path, data.status().message()));
  }
  return data;
}

std::string FormatCsv(const LabeledDataset& data) {
  std::string out;
  for (int j = 0; j < data.num_features(); ++j) {
    absl::StrAppendFormat(&out, "f%d,", j + 1);
  }
  out += "label\n";
  for (size_t i = 0; i < data.size(); ++i) {
    for (int j = 0; j < data.num_features(); ++j) {
      absl::StrAppendFormat(&out, "%.17g,", data.features(i, j));
    }
    absl::StrAppendFormat(&out, "%d\n", data.labels[i]);
  }
  return out;
}

absl::Status WriteCsv(const LabeledDataset& data, const std::string& path) {
  return WriteFile(path, FormatCsv(data));
}

}  // namespace psn
