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

#include <gtest/gtest.h>

#include <cmath>

#include "adarc/graph.hpp"
#include "test_util.hpp"

namespace adarc {
namespace {

using testing::path_graph;
using testing::random_graph;
using testing::random_matrix;

TEST(BuildGraph, SingleEdgeGivesUnitDegrees) {
  const std::vector<Edge> edges = {{0, 1}};
  const Graph g = build_graph(edges, 2);
  EXPECT_EQ(g.num_nodes(), 2);
  EXPECT_EQ(g.num_edges(), 1);
  EXPECT_EQ(g.degree(0), 1);
  EXPECT_EQ(g.degree(1), 1);
}

TEST(BuildGraph, DeduplicatesAndDropsSelfLoops) {
  const std::vector<Edge> single = {{0, 1}};
  const std::vector<Edge> messy = {{0, 1}, {1, 0}, {1, 1}};
  EXPECT_EQ(build_graph(messy, 2), build_graph(single, 2));
}

TEST(BuildGraph, PathDegrees) {
  const Graph g = path_graph(4);
  EXPECT_EQ(g.degrees(), (Vector(4) << 1, 2, 2, 1).finished());
  EXPECT_EQ(g.row_offsets().back(), 2 * g.num_edges());
}

TEST(BuildGraph, RejectsOutOfRangeEndpoint) {
  const std::vector<Edge> edges = {{0, 2}};
  EXPECT_THROW(build_graph(edges, 2), InvalidArgument);
  const std::vector<Edge> negative = {{-1, 0}};
  EXPECT_THROW(build_graph(negative, 2), InvalidArgument);
}

TEST(BuildGraph, CsrInvariantsOnRandomGraphs) {
  Rng rng = make_rng(11, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Graph g = random_graph(rng, 30, 0.15);
    const auto offsets = g.row_offsets();
    for (NodeId i = 0; i < g.num_nodes(); ++i) {
      EXPECT_LE(offsets[i], offsets[i + 1]);
      const auto nbrs = g.neighbors(i);
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        EXPECT_NE(nbrs[k], i);
        if (k > 0) EXPECT_LT(nbrs[k - 1], nbrs[k]);
        EXPECT_TRUE(g.has_edge(nbrs[k], i));
      }
    }
    EXPECT_EQ(offsets.back(), 2 * g.num_edges());
    EXPECT_EQ(static_cast<std::int64_t>(g.edges().size()), g.num_edges());
  }
}

TEST(BuildGraph, RoundTripsThroughEdgeList) {
  Rng rng = make_rng(12, 0);
  const Graph g = random_graph(rng, 25, 0.2);
  const auto edges = g.edges();
  EXPECT_EQ(build_graph(edges, g.num_nodes()), g);
}

TEST(NodeHomophily, CompleteSingleClassGraph) {
  std::vector<Edge> edges;
  for (NodeId i = 0; i < 4; ++i)
    for (NodeId j = i + 1; j < 4; ++j) edges.push_back({i, j});
  const HomophilyStats s = node_homophily(build_graph(edges, 4), LabelVector::Zero(4));
  EXPECT_EQ(s.per_node, Vector::Ones(4));
  EXPECT_EQ(s.mean, 1.0);
}

TEST(NodeHomophily, PathWithTwoBlocks) {
  const HomophilyStats s = node_homophily(path_graph(4), (LabelVector(4) << 0, 0, 1, 1).finished());
  EXPECT_EQ(s.per_node, (Vector(4) << 1.0, 0.5, 0.5, 1.0).finished());
  EXPECT_DOUBLE_EQ(s.mean, 0.75);
  EXPECT_EQ(s.counted_nodes, 4);
}

TEST(NodeHomophily, StarIsFullyHeterophilic) {
  const std::vector<Edge> edges = {{0, 1}, {0, 2}, {0, 3}};
  const HomophilyStats s =
      node_homophily(build_graph(edges, 4), (LabelVector(4) << 0, 1, 1, 1).finished());
  EXPECT_EQ(s.per_node, Vector::Zero(4));
  EXPECT_EQ(s.mean, 0.0);
}

TEST(NodeHomophily, IsolatedNodesAreUndefinedAndExcluded) {
  const std::vector<Edge> edges = {{0, 1}};
  const HomophilyStats s =
      node_homophily(build_graph(edges, 3), (LabelVector(3) << 0, 0, 1).finished());
  EXPECT_TRUE(std::isnan(s.per_node[2]));
  EXPECT_EQ(s.counted_nodes, 2);
  EXPECT_EQ(s.mean, 1.0);
  EXPECT_TRUE(std::isnan(node_homophily(Graph(), LabelVector()).mean));
}

TEST(NodeHomophily, ValuesInUnitInterval) {
  Rng rng = make_rng(13, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Graph g = random_graph(rng, 40, 0.1);
    LabelVector y(40);
    for (int i = 0; i < 40; ++i) y[i] = testing::uniform_int(rng, 0, 2);
    const HomophilyStats s = node_homophily(g, y);
    for (NodeId i = 0; i < g.num_nodes(); ++i) {
      if (g.degree(i) == 0) continue;
      EXPECT_GE(s.per_node[i], 0.0);
      EXPECT_LE(s.per_node[i], 1.0);
    }
  }
}

TEST(EdgeHomophily, CountsSameLabelEdges) {
  EXPECT_DOUBLE_EQ(edge_homophily(path_graph(4), (LabelVector(4) << 0, 0, 1, 1).finished()),
                   2.0 / 3.0);
}

TEST(Propagate, TwoNodeRowModeSwapsRows) {
  const std::vector<Edge> edges = {{0, 1}};
  const Graph g = build_graph(edges, 2);
  const PropagationOperator op(g, Normalization::kRow);
  const Matrix out = propagate(op, Matrix::Identity(2, 2));
  EXPECT_EQ(out, (Matrix(2, 2) << 0, 1, 1, 0).finished());
}

TEST(Propagate, RowModeFixesOnesOnPositiveDegree) {
  Rng rng = make_rng(14, 0);
  const Graph g = random_graph(rng, 30, 0.08);
  const PropagationOperator op(g, Normalization::kRow);
  const Matrix out = propagate(op, Matrix::Ones(30, 2));
  for (NodeId i = 0; i < 30; ++i) {
    const double expect = g.degree(i) > 0 ? 1.0 : 0.0;
    EXPECT_NEAR(out(i, 0), expect, 1e-15);
    EXPECT_NEAR(out(i, 1), expect, 1e-15);
  }
}

TEST(Propagate, ThreeNodePathByHand) {
  const Graph g = path_graph(3);
  const PropagationOperator op(g, Normalization::kRow);
  const Matrix out = propagate(op, (Matrix(3, 1) << 1, 0, 0).finished());
  EXPECT_EQ(out, (Matrix(3, 1) << 0, 0.5, 0).finished());
}

TEST(Propagate, SymmetricModeByHand) {
  // Path 0-1-2: degrees 1,2,1, so Ã_01 = Ã_12 = 1/sqrt(2).
  const Graph g = path_graph(3);
  const PropagationOperator op(g, Normalization::kSymmetric);
  const Matrix out = propagate(op, (Matrix(3, 1) << 1, 2, 3).finished());
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(out(0, 0), 2 * r, 1e-15);
  EXPECT_NEAR(out(1, 0), 4 * r, 1e-15);
  EXPECT_NEAR(out(2, 0), 2 * r, 1e-15);
}

TEST(Propagate, DegreeZeroRowsAreZero) {
  const std::vector<Edge> edges = {{0, 1}};
  const Graph g = build_graph(edges, 3);
  for (auto mode : {Normalization::kRow, Normalization::kSymmetric}) {
    const PropagationOperator op(g, mode);
    const Matrix out = propagate(op, Matrix::Ones(3, 2));
    EXPECT_EQ(out.row(2).norm(), 0.0);
  }
}

TEST(Propagate, IsLinear) {
  Rng rng = make_rng(15, 0);
  const Graph g = random_graph(rng, 25, 0.2);
  for (auto mode : {Normalization::kRow, Normalization::kSymmetric}) {
    const PropagationOperator op(g, mode);
    const Matrix h1 = random_matrix(rng, 25, 3);
    const Matrix h2 = random_matrix(rng, 25, 3);
    const double a = 0.7, b = -1.3;
    const Matrix lhs = propagate(op, a * h1 + b * h2);
    const Matrix rhs = a * propagate(op, h1) + b * propagate(op, h2);
    EXPECT_LT(testing::relative_error(lhs, rhs), 1e-12);
  }
}

TEST(Propagate, SymmetricOperatorIsSelfAdjoint) {
  Rng rng = make_rng(16, 0);
  const Graph g = random_graph(rng, 40, 0.1);
  const PropagationOperator op(g, Normalization::kSymmetric);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = random_matrix(rng, 40, 1);
    const Matrix y = random_matrix(rng, 40, 1);
    const double lhs = propagate(op, x).col(0).dot(y.col(0));
    const double rhs = x.col(0).dot(propagate(op, y).col(0));
    EXPECT_NEAR(lhs, rhs, 1e-10 * (1.0 + std::abs(lhs)));
  }
}

TEST(Propagate, TransposeIsAdjointInRowMode) {
  Rng rng = make_rng(17, 0);
  const Graph g = random_graph(rng, 40, 0.1);
  const PropagationOperator op(g, Normalization::kRow);
  const Matrix x = random_matrix(rng, 40, 2);
  const Matrix y = random_matrix(rng, 40, 2);
  const double lhs = (propagate(op, x).array() * y.array()).sum();
  const double rhs = (x.array() * propagate_transpose(op, y).array()).sum();
  EXPECT_NEAR(lhs, rhs, 1e-10 * (1.0 + std::abs(lhs)));
}

TEST(Propagate, CountsApplications) {
  const Graph g = path_graph(5);
  const PropagationOperator op(g, Normalization::kSymmetric);
  const Matrix h = Matrix::Ones(5, 1);
  propagate(op, h);
  propagate(op, h);
  propagate_transpose(op, h);
  EXPECT_EQ(op.apply_count(), 2);
  EXPECT_EQ(op.transpose_apply_count(), 1);
  op.reset_counters();
  EXPECT_EQ(op.apply_count(), 0);
}

TEST(Propagate, RejectsRowMismatch) {
  const Graph g = path_graph(3);
  const PropagationOperator op(g, Normalization::kRow);
  EXPECT_THROW(propagate(op, Matrix::Ones(4, 1)), InvalidArgument);
}

TEST(Normalization, ParsesNames) {
  EXPECT_EQ(parse_normalization(to_string(Normalization::kRow)), Normalization::kRow);
  EXPECT_EQ(parse_normalization(to_string(Normalization::kSymmetric)), Normalization::kSymmetric);
  EXPECT_THROW(parse_normalization("laplacian"), ConfigError);
}

}  // namespace
}  // namespace adarc
