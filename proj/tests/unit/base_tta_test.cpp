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

#include "adarc/base_tta.hpp"
#include "adarc/losses.hpp"
#include "test_util.hpp"

namespace adarc {
namespace {

struct Scene {
  Dataset data;
  GprModel model;
};

Scene random_setup(std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  Scene s;
  s.data = testing::random_dataset(rng, 40, 5, 3, 0.1);
  s.model = testing::random_model(rng, {5, 4, 3, 2});
  return s;
}

// Two Gaussian blobs at (+-4, 0), no edges, K=0 and an identity featurizer.
Scene blobs(std::uint64_t seed, int per_blob) {
  Rng rng = make_rng(seed, 0);
  Scene s;
  const int n = 2 * per_blob;
  s.data.graph = build_graph(std::vector<Edge>{}, n);
  s.data.num_classes = 2;
  s.data.labels.resize(n);
  s.data.features = testing::random_matrix(rng, n, 2, 0.5);
  for (int i = 0; i < n; ++i) {
    s.data.labels[i] = i < per_blob ? 0 : 1;
    s.data.features(i, 0) += i < per_blob ? 4.0 : -4.0;
  }
  s.model = init_model({2, 2, 2, 0}, 1);
  s.model.w1.setIdentity();
  s.model.gamma << 1.0;
  s.model.w_cls = (Matrix(2, 2) << 1, -1, 0.3, 0.2).finished();
  return s;
}

TEST(Erm, IsTheClassifierSoftmax) {
  const Scene s = random_setup(1);
  const PropagationOperator op(s.data.graph, s.model.mode);
  const HopCache cache = featurize_hops(s.model, s.data, op);
  const SoftPrediction p = base_predict(Erm{}, s.model, cache, s.data);
  EXPECT_EQ(p.probs, classify(aggregate(cache, s.model.gamma), s.model).prediction.probs);
}

TEST(TentLite, ZeroStepsEqualsErmAndStepsLowerEntropy) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Scene s = random_setup(seed);
    const PropagationOperator op(s.data.graph, s.model.mode);
    const HopCache cache = featurize_hops(s.model, s.data, op);
    const SoftPrediction erm = base_predict(Erm{}, s.model, cache, s.data);
    EXPECT_EQ(base_predict(TentLite{0, 0.05}, s.model, cache, s.data).probs, erm.probs);

    NormUpdate update;
    const SoftPrediction tent = base_predict(TentLite{10, 0.05}, s.model, cache, s.data, &update);
    EXPECT_GT(update.steps_taken, 0);
    EXPECT_NEAR(update.initial_entropy, mean_entropy(erm.probs), 1e-12);
    EXPECT_LT(update.final_entropy, update.initial_entropy);
    EXPECT_NEAR(mean_entropy(tent.probs), update.final_entropy, 1e-12);

    // The updated prediction is what the model would predict with the new
    // normalization parameters; the input model is untouched.
    GprModel moved = s.model;
    moved.bn_scale = update.bn_scale;
    moved.bn_shift = update.bn_shift;
    const PropagationOperator op2(s.data.graph, s.model.mode);
    const HopCache cache2 = featurize_hops(moved, s.data, op2);
    EXPECT_LT(testing::relative_error(base_predict(Erm{}, moved, cache2, s.data).probs, tent.probs),
              1e-12);
    EXPECT_NO_THROW(check_fresh(cache, s.model, s.data.graph));
  }
}

TEST(T3aLite, NearestBlobPrototype) {
  const Scene s = blobs(3, 30);
  const PropagationOperator op(s.data.graph, s.model.mode);
  const HopCache cache = featurize_hops(s.model, s.data, op);
  const Matrix z = aggregate(cache, s.model.gamma);
  // All nodes are predicted correctly by the classifier, so with room for
  // every node the prototypes are the blob means.
  ASSERT_EQ(argmax_rows(classify(z, s.model).prediction.probs), s.data.labels);
  const Eigen::RowVectorXd m0 = z.topRows(30).colwise().mean();
  const Eigen::RowVectorXd m1 = z.bottomRows(30).colwise().mean();
  const SoftPrediction p = base_predict(T3aLite{100}, s.model, cache, s.data);
  const Eigen::VectorXi pred = argmax_rows(p.probs);
  for (Eigen::Index i = 0; i < 60; ++i) {
    const double d0 = (z.row(i) - m0).squaredNorm(), d1 = (z.row(i) - m1).squaredNorm();
    EXPECT_EQ(pred[i], d0 <= d1 ? 0 : 1) << "node " << i;
    EXPECT_NEAR(p.probs(i, 0), 1.0 / (1.0 + std::exp(d0 - d1)), 1e-12);
  }
}

TEST(T3aLite, KeepsOnlyMostConfident) {
  const Scene s = blobs(4, 30);
  const PropagationOperator op(s.data.graph, s.model.mode);
  const HopCache cache = featurize_hops(s.model, s.data, op);
  const Matrix z = aggregate(cache, s.model.gamma);
  const Matrix probs = classify(z, s.model).prediction.probs;
  // keep_per_class = 1 uses the single lowest-entropy node of each class.
  Eigen::Index best[2] = {-1, -1};
  for (Eigen::Index i = 0; i < 60; ++i) {
    const int c = probs(i, 0) >= probs(i, 1) ? 0 : 1;
    if (best[c] < 0 || probs(i, c) > probs(best[c], c)) best[c] = i;
  }
  const SoftPrediction p = base_predict(T3aLite{1}, s.model, cache, s.data);
  for (Eigen::Index i = 0; i < 60; ++i) {
    const double d0 = (z.row(i) - z.row(best[0])).squaredNorm();
    const double d1 = (z.row(i) - z.row(best[1])).squaredNorm();
    EXPECT_NEAR(p.probs(i, 0), 1.0 / (1.0 + std::exp(d0 - d1)), 1e-12);
  }
}

TEST(T3aLite, EmptyClassFallsBackToClassifierColumn) {
  Scene s = blobs(5, 10);
  s.model.b_cls << 100.0, -100.0;  // everything predicted as class 0
  const PropagationOperator op(s.data.graph, s.model.mode);
  const HopCache cache = featurize_hops(s.model, s.data, op);
  const Matrix z = aggregate(cache, s.model.gamma);
  const Eigen::RowVectorXd m0 = z.colwise().mean();
  const Eigen::RowVectorXd fallback = s.model.w_cls.col(1).transpose();
  const SoftPrediction p = base_predict(T3aLite{100}, s.model, cache, s.data);
  for (Eigen::Index i = 0; i < 20; ++i) {
    const double d0 = (z.row(i) - m0).squaredNorm(), d1 = (z.row(i) - fallback).squaredNorm();
    EXPECT_NEAR(p.probs(i, 0), 1.0 / (1.0 + std::exp(d0 - d1)), 1e-12);
  }
}

TEST(BaseTta, PredictionsAreDistributions) {
  const Scene s = random_setup(7);
  const PropagationOperator op(s.data.graph, s.model.mode);
  const HopCache cache = featurize_hops(s.model, s.data, op);
  for (const BaseTtaKind& kind : {BaseTtaKind{Erm{}}, BaseTtaKind{TentLite{}}, BaseTtaKind{T3aLite{5}}}) {
    const Matrix p = base_predict(kind, s.model, cache, s.data).probs;
    EXPECT_EQ(p.rows(), 40);
    EXPECT_TRUE((p.array() >= 0.0).all());
    EXPECT_LT((p.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12) << to_string(kind);
  }
}

TEST(BaseTta, ParseValidateAndStaleCache) {
  EXPECT_EQ(to_string(parse_base_tta("tent")), "tent");
  EXPECT_EQ(to_string(parse_base_tta("t3a")), "t3a");
  EXPECT_THROW(parse_base_tta("bn"), ConfigError);
  EXPECT_THROW(validate(TentLite{-1, 0.1}), ConfigError);
  EXPECT_THROW(validate(TentLite{1, 0.0}), ConfigError);
  EXPECT_THROW(validate(T3aLite{0}), ConfigError);

  Scene s = random_setup(8);
  const PropagationOperator op(s.data.graph, s.model.mode);
  const HopCache cache = featurize_hops(s.model, s.data, op);
  s.model.w1(0, 0) += 1.0;
  EXPECT_THROW(base_predict(Erm{}, s.model, cache, s.data), InvalidArgument);
}

}  // namespace
}  // namespace adarc
