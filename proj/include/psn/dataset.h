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

#ifndef PSN_DATASET_H_
#define PSN_DATASET_H_

#include <string>
#include <vector>

#include "Eigen/Core"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "psn/rng.h"
#include "psn/sampling.h"

namespace psn {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Where a dataset came from. Students may only ever see public data.
enum class Provenance { kPrivate, kPublic };

absl::string_view ProvenanceName(Provenance p);

struct LabeledDataset {
  Matrix features;          // n x d
  std::vector<int> labels;  // n entries in [0, num_classes)
  int num_classes = 0;
  Provenance provenance = Provenance::kPrivate;

  size_t size() const { return labels.size(); }
  int num_features() const { return static_cast<int>(features.cols()); }

  absl::Status Validate() const;

  // Rows at `indices`, in order, keeping provenance and class count.
  LabeledDataset Subset(const std::vector<size_t>& indices) const;
  LabeledDataset Subset(const IndexSet& set) const {
    return Subset(set.indices);
  }
  // Rows [begin, end).
  LabeledDataset Slice(size_t begin, size_t end) const;
};

// K Gaussian blobs with identity covariance whose means sit `separation`
// apart: vertices of a scaled simplex when K <= d, a regular K-gon in the
// first two coordinates otherwise, and evenly spaced points when d == 1.
// Labels are balanced (row i has class i mod K before a random shuffle).
absl::StatusOr<LabeledDataset> GenerateSynthetic(size_t n, int num_features,
                                                 int num_classes,
                                                 double separation,
                                                 Provenance provenance,
                                                 const RngStream& rng);

// Reads `f1,...,fd,label`. When num_classes is 0 it is inferred as max label
// plus one; otherwise labels outside [0, num_classes) are rejected.
absl::StatusOr<LabeledDataset> ParseCsv(absl::string_view text,
                                        Provenance provenance,
                                        int num_classes = 0);
absl::StatusOr<LabeledDataset> LoadCsv(const std::string& path,
                                       Provenance provenance,
                                       int num_classes = 0);

// Writes the same layout with 17 significant digits per cell.
std::string FormatCsv(const LabeledDataset& data);
absl::Status WriteCsv(const LabeledDataset& data, const std::string& path);

absl::StatusOr<std::string> ReadFile(const std::string& path);
absl::Status WriteFile(const std::string& path, absl::string_view contents);

}  // namespace psn

#endif  // PSN_DATASET_H_
