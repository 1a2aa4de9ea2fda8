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

#include "adarc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace adarc {

Graph build_graph(std::span<const Edge> edges, NodeId num_nodes) {
  detail::require(num_nodes >= 0, "build_graph: negative node count");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(num_nodes) + 1, 0);
  for (const Edge& e : edges) {
    if (e.u < 0 || e.u >= num_nodes || e.v < 0 || e.v >= num_nodes) {
      throw InvalidArgument("build_graph: edge (" + std::to_string(e.u) + ", " +
                            std::to_string(e.v) + ") out of range for " +
                            std::to_string(num_nodes) + " nodes");
    }
    if (e.u == e.v) continue;
    ++counts[e.u + 1];
    ++counts[e.v + 1];
  }
  for (NodeId i = 0; i < num_nodes; ++i) counts[i + 1] += counts[i];

  std::vector<NodeId> scratch(static_cast<std::size_t>(counts.back()));
  std::vector<std::int64_t> cursor(counts.begin(), counts.end() - 1);
  for (const Edge& e : edges) {
    if (e.u == e.v) continue;
    scratch[cursor[e.u]++] = e.v;
    scratch[cursor[e.v]++] = e.u;
  }

  Graph g;
  g.row_offsets_.assign(static_cast<std::size_t>(num_nodes) + 1, 0);
  g.neighbor_ids_.reserve(scratch.size());
  for (NodeId i = 0; i < num_nodes; ++i) {
    auto first = scratch.begin() + counts[i];
    auto last = scratch.begin() + counts[i + 1];
    std::sort(first, last);
    last = std::unique(first, last);
    g.neighbor_ids_.insert(g.neighbor_ids_.end(), first, last);
    g.row_offsets_[i + 1] = static_cast<std::int64_t>(g.neighbor_ids_.size());
  }
  g.neighbor_ids_.shrink_to_fit();
  return g;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  auto n = neighbors(u);
  return std::binary_search(n.begin(), n.end(), v);
}

Vector Graph::degrees() const {
  Vector d(num_nodes());
  for (NodeId i = 0; i < num_nodes(); ++i) d[i] = static_cast<double>(degree(i));
  return d;
}

double Graph::mean_degree() const {
  if (num_nodes() == 0) return 0.0;
  return static_cast<double>(num_directed_edges()) / num_nodes();
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(static_cast<std::size_t>(num_edges()));
  for (NodeId u = 0; u < num_nodes(); ++u) {
    for (NodeId v : neighbors(u)) {
      if (u < v) out.push_back({u, v});
    }
  }
  return out;
}

HomophilyStats node_homophily(const Graph& graph, const LabelVector& labels) {
  detail::require(labels.size() == graph.num_nodes(),
                  "node_homophily: label count does not match graph");
  HomophilyStats stats;
  stats.per_node.resize(graph.num_nodes());
  double sum = 0.0;
  for (NodeId i = 0; i < graph.num_nodes(); ++i) {
    auto nbrs = graph.neighbors(i);
    if (nbrs.empty()) {
      stats.per_node[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    std::int64_t same = 0;
    for (NodeId j : nbrs) same += labels[j] == labels[i] ? 1 : 0;
    stats.per_node[i] = static_cast<double>(same) / static_cast<double>(nbrs.size());
    sum += stats.per_node[i];
    ++stats.counted_nodes;
  }
  stats.mean = stats.counted_nodes > 0 ? sum / stats.counted_nodes
                                       : std::numeric_limits<double>::quiet_NaN();
  return stats;
}

double edge_homophily(const Graph& graph, const LabelVector& labels) {
  detail::require(labels.size() == graph.num_nodes(),
                  "edge_homophily: label count does not match graph");
  if (graph.num_edges() == 0) return std::numeric_limits<double>::quiet_NaN();
  std::int64_t same = 0;
  for (const Edge& e : graph.edges()) same += labels[e.u] == labels[e.v] ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(graph.num_edges());
}

const char* to_string(Normalization mode) {
  return mode == Normalization::kRow ? "row" : "sym";
}

Normalization parse_normalization(const std::string& name) {
  if (name == "row") return Normalization::kRow;
  if (name == "sym" || name == "symmetric") return Normalization::kSymmetric;
  throw ConfigError("unknown propagation mode '" + name + "' (expected row|sym)");
}

PropagationOperator::PropagationOperator(const Graph& graph, Normalization mode)
    : graph_(&graph), mode_(mode) {
  const NodeId n = graph.num_nodes();
  left_ = Vector::Zero(n);
  right_ = Vector::Zero(n);
  for (NodeId i = 0; i < n; ++i) {
    const double d = static_cast<double>(graph.degree(i));
    if (d == 0.0) continue;
    if (mode == Normalization::kRow) {
      left_[i] = 1.0 / d;
      right_[i] = 1.0;
    } else {
      left_[i] = 1.0 / std::sqrt(d);
      right_[i] = left_[i];
    }
  }
}

PropagationOperator::PropagationOperator(const PropagationOperator& other)
    : graph_(other.graph_),
      mode_(other.mode_),
      left_(other.left_),
      right_(other.right_),
      applies_(other.apply_count()),
      transpose_applies_(other.transpose_apply_count()) {}

PropagationOperator& PropagationOperator::operator=(const PropagationOperator& other) {
  graph_ = other.graph_;
  mode_ = other.mode_;
  left_ = other.left_;
  right_ = other.right_;
  applies_.store(other.apply_count());
  transpose_applies_.store(other.transpose_apply_count());
  return *this;
}

}  // namespace adarc
