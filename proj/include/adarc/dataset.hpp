// Copyright 2026 The AdaRC Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ADARC_DATASET_HPP_
#define ADARC_DATASET_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adarc/graph.hpp"
#include "adarc/types.hpp"

namespace adarc {

using Mask = std::vector<bool>;

/// Node-classification dataset: graph, dense features, labels and named
/// node masks ("train", "val", "test" by convention).
struct Dataset {
  Graph graph;
  Matrix features;  // N x D, values representable in f32
  LabelVector labels;
  int num_classes = 0;
  std::map<std::string, Mask> masks;

  NodeId num_nodes() const { return graph.num_nodes(); }
  Eigen::Index feature_dim() const { return features.cols(); }

  // nullptr when the mask is absent.
  const Mask* mask(const std::string& name) const;

  // Throws InvalidArgument on any shape or label inconsistency.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Same data with the graph replaced.
Dataset with_graph(const Dataset& dataset, Graph graph);

/// Rounds every feature to the nearest f32 value, as stored on disk.
void round_features_to_f32(Matrix& features);

// Directory format:
//   edges.csv     "u,v" per line, one undirected edge per line
//   features.bin  "ADRC", u32 version = 1, u32 N, u32 D, N*D f32 LE row-major
//   labels.csv    one integer per line
//   masks.csv     optional; header line of mask names, then N rows of 0/1
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

void write_features_bin(const Matrix& features, const std::filesystem::path& path);
Matrix read_features_bin(const std::filesystem::path& path);

}  // namespace adarc

#endif  // ADARC_DATASET_HPP_
