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

#ifndef ADARC_GRAPH_HPP_
#define ADARC_GRAPH_HPP_

#include <atomic>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "adarc/types.hpp"

namespace adarc {

struct Edge {
  NodeId u;
  NodeId v;
};

/// Immutable undirected graph in CSR layout.
///
/// Every undirected edge is stored twice (once per endpoint). Neighbor lists
/// are sorted ascending, duplicate-free and never contain the node itself.
class Graph {
 public:
  Graph() : row_offsets_(1, 0) {}

  NodeId num_nodes() const { return static_cast<NodeId>(row_offsets_.size() - 1); }
  // Number of undirected edges.
  std::int64_t num_edges() const { return row_offsets_.back() / 2; }
  std::int64_t num_directed_edges() const { return row_offsets_.back(); }

  std::int64_t degree(NodeId i) const { return row_offsets_[i + 1] - row_offsets_[i]; }
  std::span<const NodeId> neighbors(NodeId i) const {
    return {neighbor_ids_.data() + row_offsets_[i],
            static_cast<std::size_t>(degree(i))};
  }
  bool has_edge(NodeId u, NodeId v) const;

  std::span<const std::int64_t> row_offsets() const { return row_offsets_; }
  std::span<const NodeId> neighbor_ids() const { return neighbor_ids_; }

  Vector degrees() const;
  double mean_degree() const;

  // Undirected edge list with u < v, in CSR order.
  std::vector<Edge> edges() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  friend Graph build_graph(std::span<const Edge> edges, NodeId num_nodes);

  std::vector<std::int64_t> row_offsets_;
  std::vector<NodeId> neighbor_ids_;
};

/// Symmetrizes, deduplicates and drops self-loops. Throws InvalidArgument on
/// an endpoint outside [0, num_nodes).
Graph build_graph(std::span<const Edge> edges, NodeId num_nodes);

struct HomophilyStats {
  // NaN for nodes of degree 0 (homophily undefined there).
  Vector per_node;
  // Average over nodes with positive degree; NaN when there are none.
  double mean = 0.0;
  NodeId counted_nodes = 0;
};

HomophilyStats node_homophily(const Graph& graph, const LabelVector& labels);

/// Fraction of undirected edges whose endpoints share a label. NaN for an
/// edgeless graph.
double edge_homophily(const Graph& graph, const LabelVector& labels);

enum class Normalization {
  kRow,        // D^{-1} A
  kSymmetric,  // D^{-1/2} A D^{-1/2}
};

const char* to_string(Normalization mode);
Normalization parse_normalization(const std::string& name);

/// Normalized adjacency operator over a borrowed graph. The graph must
/// outlive the operator. Rows of degree-0 nodes are zero.
///
/// The operator counts its applications so callers can assert how many
/// sparse products a pipeline performed.
class PropagationOperator {
 public:
  // Keeps a reference to `graph`, which must outlive the operator.
  PropagationOperator(const Graph& graph, Normalization mode);
  PropagationOperator(Graph&&, Normalization) = delete;
  PropagationOperator(const PropagationOperator& other);
  PropagationOperator& operator=(const PropagationOperator& other);

  const Graph& graph() const { return *graph_; }
  Normalization mode() const { return mode_; }
  NodeId rows() const { return graph_->num_nodes(); }

  // Scale applied to the output row (left) and to each gathered input row
  // (right): out_i = left_i * sum_{j in N(i)} right_j * h_j.
  const Vector& left_scale() const { return left_; }
  const Vector& right_scale() const { return right_; }

  std::int64_t apply_count() const { return applies_.load(std::memory_order_relaxed); }
  std::int64_t transpose_apply_count() const {
    return transpose_applies_.load(std::memory_order_relaxed);
  }
  void reset_counters() const {
    applies_.store(0, std::memory_order_relaxed);
    transpose_applies_.store(0, std::memory_order_relaxed);
  }

  void note_apply() const { applies_.fetch_add(1, std::memory_order_relaxed); }
  void note_transpose_apply() const {
    transpose_applies_.fetch_add(1, std::memory_order_relaxed);
  }

 private:
  const Graph* graph_;
  Normalization mode_;
  Vector left_;
  Vector right_;
  mutable std::atomic<std::int64_t> applies_{0};
  mutable std::atomic<std::int64_t> transpose_applies_{0};
};

namespace detail {

template <bool Transpose, typename Derived>
MatrixX<typename Derived::Scalar> spmm(const PropagationOperator& op,
                                       const Eigen::MatrixBase<Derived>& h) {
  using Scalar = typename Derived::Scalar;
  const Graph& g = op.graph();
  require(h.rows() == g.num_nodes(), "propagate: row count does not match graph");
  // Transposing D_l A D_r gives D_r A D_l since A is symmetric.
  const Vector& outer = Transpose ? op.right_scale() : op.left_scale();
  const Vector& inner = Transpose ? op.left_scale() : op.right_scale();
  MatrixX<Scalar> out = MatrixX<Scalar>::Zero(h.rows(), h.cols());
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    auto nbrs = g.neighbors(i);
    if (nbrs.empty()) continue;
    auto row = out.row(i);
    for (NodeId j : nbrs) row += static_cast<Scalar>(inner[j]) * h.row(j);
    row *= static_cast<Scalar>(outer[i]);
  }
  return out;
}

}  // namespace detail

/// One application of the normalized adjacency: returns Ã·H.
/// Summation order is fixed (ascending neighbor id), so results are
/// reproducible bit-for-bit.
template <typename Derived>
MatrixX<typename Derived::Scalar> propagate(const PropagationOperator& op,
                                            const Eigen::MatrixBase<Derived>& h) {
  auto out = detail::spmm<false>(op, h);
  op.note_apply();
  return out;
}

/// Returns Ãᵀ·H. Equal to propagate() in symmetric mode.
template <typename Derived>
MatrixX<typename Derived::Scalar> propagate_transpose(
    const PropagationOperator& op, const Eigen::MatrixBase<Derived>& h) {
  auto out = detail::spmm<true>(op, h);
  op.note_transpose_apply();
  return out;
}

}  // namespace adarc

#endif  // ADARC_GRAPH_HPP_
