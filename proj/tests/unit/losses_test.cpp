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

#include "adarc/losses.hpp"
#include "test_util.hpp"

namespace adarc {
namespace {

using testing::numeric_gradient;
using testing::random_hard;
using testing::random_matrix;
using testing::random_soft;
using testing::relative_error;

// Pairwise-free variance terms computed row by row with explicit loops.
struct LoopVariance {
  double total = 0.0;
  double intra = 0.0;
  double inter = 0.0;
};

LoopVariance loop_variance(const Matrix& z, const Matrix& y) {
  const Eigen::Index n = z.rows(), h = z.cols(), c = y.cols();
  LoopVariance out;
  std::vector<double> global(h, 0.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < h; ++j) global[j] += z(i, j) / n;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < h; ++j) out.total += (z(i, j) - global[j]) * (z(i, j) - global[j]);
  for (Eigen::Index k = 0; k < c; ++k) {
    double mass = 0.0;
    std::vector<double> centroid(h, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      mass += y(i, k);
      for (Eigen::Index j = 0; j < h; ++j) centroid[j] += y(i, k) * z(i, j);
    }
    if (mass <= 0.0) continue;
    for (double& v : centroid) v /= mass;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < h; ++j)
        out.intra += y(i, k) * (z(i, j) - centroid[j]) * (z(i, j) - centroid[j]);
    for (Eigen::Index j = 0; j < h; ++j)
      out.inter += mass * (centroid[j] - global[j]) * (centroid[j] - global[j]);
  }
  return out;
}

struct Instance {
  Matrix z;
  Matrix y;
};

Instance random_instance(Rng& rng, bool hard) {
  const int n = testing::uniform_int(rng, 2, 40);
  const int h = testing::uniform_int(rng, 1, 6);
  const int c = testing::uniform_int(rng, 2, 5);
  return {random_matrix(rng, n, h), hard ? random_hard(rng, n, c) : random_soft(rng, n, c)};
}

TEST(PicLoss, MatchesLoopOracle) {
  Rng rng = make_rng(51, 0);
  for (int t = 0; t < 300; ++t) {
    const Instance in = random_instance(rng, t % 2 == 0);
    const PicBreakdown pic = pic_loss(in.z, in.y);
    const LoopVariance ref = loop_variance(in.z, in.y);
    EXPECT_NEAR(pic.sigma_sq, ref.total, 1e-10 * ref.total);
    EXPECT_NEAR(pic.sigma_intra_sq, ref.intra, 1e-10 * ref.total);
    EXPECT_NEAR(pic.sigma_inter_sq, ref.inter, 1e-10 * ref.total);
    EXPECT_NEAR(pic.loss, ref.intra / ref.total, 1e-10);
  }
}

TEST(PicLoss, Examples) {
  // Two tight, well-separated clusters with matching hard labels.
  const Matrix z = (Matrix(4, 1) << -1.0, -1.0, 1.0, 1.0).finished();
  const Matrix y = (Matrix(4, 2) << 1, 0, 1, 0, 0, 1, 0, 1).finished();
  EXPECT_DOUBLE_EQ(pic_loss(z, y).loss, 0.0);
  // A single class puts all variance inside it.
  EXPECT_DOUBLE_EQ(pic_loss(z, Matrix::Ones(4, 1)).loss, 1.0);
  // Uniform soft labels: every centroid is the global mean.
  EXPECT_DOUBLE_EQ(pic_loss(z, Matrix::Constant(4, 2, 0.5)).loss, 1.0);
  // Empty class is skipped.
  const Matrix y3 = (Matrix(4, 3) << 1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 0).finished();
  EXPECT_DOUBLE_EQ(pic_loss(z, y3).loss, 0.0);
  EXPECT_TRUE(pic_loss(z, y3).centroids.row(2).isZero(0.0));
}

TEST(PicLoss, DegenerateAndShapeErrors) {
  EXPECT_THROW(pic_loss(Matrix::Constant(5, 3, 2.0), Matrix::Constant(5, 2, 0.5)),
               DegenerateRepresentation);
  EXPECT_THROW(pic_loss(Matrix::Ones(5, 3), Matrix::Ones(4, 2)), InvalidArgument);
}

TEST(PicLoss, InvariantToScaleAndTranslation) {
  Rng rng = make_rng(52, 0);
  for (int t = 0; t < 300; ++t) {
    const Instance in = random_instance(rng, t % 3 == 0);
    const double base = pic_loss(in.z, in.y).loss;
    const double c = std::exp(testing::uniform_real(rng, -3.0, 3.0)) * (t % 2 ? 1.0 : -1.0);
    const Eigen::RowVectorXd shift = random_matrix(rng, 1, in.z.cols(), 5.0);
    EXPECT_NEAR(pic_loss(Matrix(c * in.z), in.y).loss, base, 1e-10 * base + 1e-14);
    EXPECT_NEAR(pic_loss(Matrix(in.z.rowwise() + shift), in.y).loss, base, 1e-10 * base + 1e-14);
    EXPECT_GE(base, 0.0);
    EXPECT_LE(base, 1.0 + 1e-12);
  }
}

TEST(PicGrad, MatchesFiniteDifferencesWithMovingCentroids) {
  Rng rng = make_rng(53, 0);
  for (int t = 0; t < 60; ++t) {
    const Instance in = random_instance(rng, t % 2 == 0);
    const Matrix analytic = pic_grad_z(in.z, in.y);
    auto f = [&](const Matrix& z) { return pic_loss(z, in.y).loss; };
    EXPECT_LT(relative_error(analytic, numeric_gradient(f, in.z)), 1e-6) << "instance " << t;
  }
}

TEST(PicGradLogits, MatchesFiniteDifferencesAndIsBounded) {
  Rng rng = make_rng(54, 0);
  for (int t = 0; t < 60; ++t) {
    const Instance in = random_instance(rng, false);
    const Matrix logits = random_matrix(rng, in.z.rows(), in.y.cols(), 2.0);
    const Matrix analytic = pic_grad_logits(in.z, logits);
    auto f = [&](const Matrix& l) { return pic_loss(in.z, row_softmax(l)).loss; };
    EXPECT_LT(relative_error(analytic, numeric_gradient(f, logits)), 1e-6);
    EXPECT_LE(analytic.norm(), 2.0);
  }
}

// A model whose classifier is used by the entropy and pseudo-label losses.
GprModel classifier_model(Rng& rng, int h, int c) {
  GprModel m = init_model({1, h, c, 0}, 1);
  m.w_cls = random_matrix(rng, h, c);
  m.b_cls = testing::random_vector(rng, c, 0.5);
  return m;
}

double entropy_oracle(const GprModel& m, const Matrix& z) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const Eigen::RowVectorXd l = z.row(i) * m.w_cls + m.b_cls.transpose();
    const double norm = l.array().exp().sum();
    for (Eigen::Index c = 0; c < l.size(); ++c) {
      const double p = std::exp(l[c]) / norm;
      total -= p * std::log(p);
    }
  }
  return total / static_cast<double>(z.rows());
}

TEST(Surrogates, GradientsMatchFiniteDifferences) {
  Rng rng = make_rng(55, 0);
  for (LossKind kind : {LossKind::kPic, LossKind::kEntropy, LossKind::kPseudo, LossKind::kDiff}) {
    for (int t = 0; t < 30; ++t) {
      const Instance in = random_instance(rng, t % 2 == 0);
      const GprModel m = classifier_model(rng, static_cast<int>(in.z.cols()),
                                          static_cast<int>(in.y.cols()));
      const SoftPrediction pred{in.y};
      double loss = 0.0;
      const Matrix analytic = surrogate_grad_z(kind, m, in.z, pred, &loss);
      EXPECT_NEAR(loss, surrogate_loss(kind, m, in.z, pred), 1e-13 * (1.0 + std::abs(loss)))
          << to_string(kind);
      auto f = [&](const Matrix& z) { return surrogate_loss(kind, m, z, pred); };
      EXPECT_LT(relative_error(analytic, numeric_gradient(f, in.z)), 1e-6) << to_string(kind);
    }
  }
}

TEST(Surrogates, ValuesMatchOracles) {
  Rng rng = make_rng(56, 0);
  for (int t = 0; t < 50; ++t) {
    const Instance in = random_instance(rng, false);
    const GprModel m = classifier_model(rng, static_cast<int>(in.z.cols()),
                                        static_cast<int>(in.y.cols()));
    const SoftPrediction pred{in.y};
    EXPECT_NEAR(surrogate_loss(LossKind::kEntropy, m, in.z, pred), entropy_oracle(m, in.z), 1e-12);
    const LoopVariance v = loop_variance(in.z, in.y);
    EXPECT_NEAR(surrogate_loss(LossKind::kDiff, m, in.z, pred),
                (v.intra - v.inter) / static_cast<double>(in.z.rows()), 1e-10 * v.total);
    // Pseudo-label loss is the cross entropy against argmax(Yhat).
    const Eigen::VectorXi target = argmax_rows(in.y);
    double ce = 0.0;
    for (Eigen::Index i = 0; i < in.z.rows(); ++i) {
      const Eigen::RowVectorXd l = in.z.row(i) * m.w_cls + m.b_cls.transpose();
      ce += std::log(l.array().exp().sum()) - l[target[i]];
    }
    EXPECT_NEAR(surrogate_loss(LossKind::kPseudo, m, in.z, pred), ce / in.z.rows(), 1e-12);
  }
}

TEST(MeanEntropy, Examples) {
  EXPECT_DOUBLE_EQ(mean_entropy(Matrix::Constant(3, 4, 0.25)), std::log(4.0));
  EXPECT_DOUBLE_EQ(mean_entropy((Matrix(2, 2) << 1, 0, 0, 1).finished()), 0.0);
}

TEST(GammaGradient, ChainsThroughHops) {
  Rng rng = make_rng(57, 0);
  Dataset d = testing::random_dataset(rng, 20, 3, 2, 0.2);
  GprModel m = testing::random_model(rng, {3, 4, 2, 3});
  const PropagationOperator op(d.graph, m.mode);
  const HopCache cache = featurize_hops(m, d, op);
  const SoftPrediction pred{random_soft(rng, 20, 2)};
  for (LossKind kind : {LossKind::kPic, LossKind::kEntropy, LossKind::kPseudo, LossKind::kDiff}) {
    const SurrogateResult r = surrogate_loss_and_grad_gamma(kind, m, cache, pred);
    auto f = [&](const Matrix& g) {
      return surrogate_loss(kind, m, aggregate(cache, g.col(0)), pred);
    };
    EXPECT_LT(relative_error(r.grad_gamma, numeric_gradient(f, m.gamma)), 1e-6) << to_string(kind);
  }
}

TEST(LossKind, ParseRoundTrip) {
  for (LossKind kind : {LossKind::kPic, LossKind::kEntropy, LossKind::kPseudo, LossKind::kDiff})
    EXPECT_EQ(parse_loss_kind(to_string(kind)), kind);
  EXPECT_THROW(parse_loss_kind("ratio"), ConfigError);
}

}  // namespace
}  // namespace adarc
