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

#include <fstream>

#include "adarc/adapt.hpp"
#include "test_util.hpp"

namespace adarc {
namespace {

struct Scene {
  Dataset data;
  GprModel model;
};

Scene make_setup(std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  Scene s;
  s.data = testing::random_dataset(rng, 60, 5, 2, 0.08);
  s.model = testing::random_model(rng, {5, 4, 2, 4});
  return s;
}

AdaptConfig config_with(double lr, int epochs, LossKind loss = LossKind::kPic) {
  AdaptConfig c;
  c.learning_rate = lr;
  c.epochs = epochs;
  c.loss = loss;
  return c;
}

TEST(Adapt, ZeroRateLeavesGammaAndPrediction) {
  const Scene s = make_setup(1);
  const AdaptResult r = adapt(s.model, s.data, config_with(0.0, 5));
  EXPECT_EQ(r.model, s.model);
  const PropagationOperator op(s.data.graph, s.model.mode);
  const HopCache cache = featurize_hops(s.model, s.data, op);
  EXPECT_EQ(r.prediction.probs, base_predict(Erm{}, s.model, cache, s.data).probs);
  for (const EpochTrace& e : r.trace.epochs) EXPECT_EQ(e.gamma, s.model.gamma);
}

TEST(Adapt, PropagatesOnlyWhileBuildingTheCache) {
  for (LossKind loss : {LossKind::kPic, LossKind::kEntropy, LossKind::kPseudo, LossKind::kDiff}) {
    const Scene s = make_setup(2);
    const AdaptResult r = adapt(s.model, s.data, config_with(0.1, 20, loss));
    EXPECT_EQ(r.trace.propagate_calls, s.model.hops()) << to_string(loss);
    EXPECT_EQ(r.trace.epochs.size(), 20u);
    EXPECT_EQ(r.trace.stage_seconds.size(), 20u);
    // Only gamma moves.
    GprModel frozen = r.model;
    frozen.gamma = s.model.gamma;
    EXPECT_EQ(frozen, s.model);
  }
}

TEST(Adapt, StepsFollowTheGammaGradient) {
  const Scene s = make_setup(3);
  const double lr = 0.05;
  const AdaptResult r = adapt(s.model, s.data, config_with(lr, 6));
  const PropagationOperator op(s.data.graph, s.model.mode);
  const HopCache cache = featurize_hops(s.model, s.data, op);
  GprModel m = s.model;
  for (const EpochTrace& e : r.trace.epochs) {
    EXPECT_LT(testing::relative_error(e.gamma, m.gamma), 1e-12);
    const SoftPrediction pred = base_predict(Erm{}, m, cache, s.data);
    const SurrogateResult sr = surrogate_loss_and_grad_gamma(LossKind::kPic, m, cache, pred);
    EXPECT_NEAR(e.loss, sr.loss, 1e-12);
    EXPECT_NEAR(e.grad_sq_norm, sr.grad_gamma.squaredNorm(), 1e-10 * (1.0 + e.grad_sq_norm));
    EXPECT_EQ(e.accuracy.has_value(), true);
    m.gamma -= lr * sr.grad_gamma;
  }
  EXPECT_LT(testing::relative_error(r.model.gamma, m.gamma), 1e-12);
}

TEST(Adapt, SmallStepsDecreaseTheLossWithFixedPredictions) {
  // The ERM prediction moves with gamma, so each step is checked with its
  // own prediction held fixed.
  const Scene s = make_setup(4);
  const AdaptResult r = adapt(s.model, s.data, config_with(0.01, 10));
  const PropagationOperator op(s.data.graph, s.model.mode);
  const HopCache cache = featurize_hops(s.model, s.data, op);
  for (std::size_t t = 0; t + 1 < r.trace.epochs.size(); ++t) {
    GprModel m = s.model;
    m.gamma = r.trace.epochs[t].gamma;
    const SoftPrediction pred = base_predict(Erm{}, m, cache, s.data);
    const double before = surrogate_loss(LossKind::kPic, m, aggregate(cache, m.gamma), pred);
    const double after =
        surrogate_loss(LossKind::kPic, m, aggregate(cache, r.trace.epochs[t + 1].gamma), pred);
    EXPECT_LE(after, before + 1e-15) << "epoch " << t + 1;
  }
}

TEST(Adapt, ThetaAblationRebuildsTheCache) {
  const Scene s = make_setup(5);
  AdaptConfig c = config_with(0.01, 4);
  c.params = AdaptParams::kTheta;
  const AdaptResult r = adapt(s.model, s.data, c);
  EXPECT_EQ(r.model.gamma, s.model.gamma);
  EXPECT_NE(r.model.w1, s.model.w1);
  EXPECT_GT(r.trace.propagate_calls, s.model.hops());
  c.params = AdaptParams::kBoth;
  const AdaptResult both = adapt(s.model, s.data, c);
  EXPECT_NE(both.model.gamma, s.model.gamma);
  EXPECT_NE(both.model.w1, s.model.w1);
}

TEST(Adapt, BaseTtaVariantsRun) {
  const Scene s = make_setup(6);
  for (const BaseTtaKind& base : {BaseTtaKind{TentLite{}}, BaseTtaKind{T3aLite{10}}}) {
    AdaptConfig c = config_with(0.1, 5);
    c.base = base;
    const AdaptResult r = adapt(s.model, s.data, c);
    EXPECT_EQ(r.trace.propagate_calls, s.model.hops());
    EXPECT_EQ(r.model.bn_scale, s.model.bn_scale);
  }
  AdaptConfig c = config_with(0.1, 5);
  c.base = TentLite{};
  c.persist_base_tta = true;
  const AdaptResult r = adapt(s.model, s.data, c);
  EXPECT_NE(r.model.bn_scale, s.model.bn_scale);
  EXPECT_EQ(r.trace.propagate_calls, s.model.hops());
}

TEST(Adapt, DivergenceCarriesTheTrace) {
  const Scene s = make_setup(7);
  try {
    adapt(s.model, s.data, config_with(1e300, 5, LossKind::kDiff));
    FAIL() << "expected divergence";
  } catch (const AdaptDivergence& e) {
    EXPECT_GE(e.trace().epochs.size(), 1u);
    EXPECT_LE(e.trace().epochs.size(), 5u);
  }
}

TEST(Adapt, ConfigValidation) {
  const Scene s = make_setup(8);
  EXPECT_THROW(adapt(s.model, s.data, config_with(-0.1, 5)), ConfigError);
  EXPECT_THROW(adapt(s.model, s.data, config_with(0.1, 0)), ConfigError);
  EXPECT_EQ(parse_adapt_params("both"), AdaptParams::kBoth);
  EXPECT_THROW(parse_adapt_params("all"), ConfigError);
}

TEST(Adapt, Deterministic) {
  const Scene s = make_setup(9);
  const AdaptResult a = adapt(s.model, s.data, config_with(0.3, 8));
  const AdaptResult b = adapt(s.model, s.data, config_with(0.3, 8));
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.prediction.probs, b.prediction.probs);
}

TEST(ConvergenceReport, RunningMean) {
  AdaptTrace t;
  for (double g : {4.0, 3.0, 2.0, 1.0}) t.epochs.push_back({0, g, g, Vector(), std::nullopt});
  ConvergenceSummary r = convergence_report(t);
  EXPECT_DOUBLE_EQ(r.mean_sq_grad_norm, 2.5);
  EXPECT_TRUE(r.running_mean_decreasing);
  EXPECT_EQ(r.loss_curve, (std::vector<double>{4, 3, 2, 1}));
  t.epochs.push_back({0, 9.0, 9.0, Vector(), std::nullopt});
  EXPECT_FALSE(convergence_report(t).running_mean_decreasing);
  EXPECT_THROW(convergence_report(AdaptTrace{}), InvalidArgument);
}

TEST(TraceCsv, Layout) {
  const Scene s = make_setup(10);
  const AdaptResult r = adapt(s.model, s.data, config_with(0.1, 3));
  const auto dir = testing::scratch_dir("trace");
  write_trace_csv(r.trace, dir / "t.csv");
  std::ifstream in(dir / "t.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "epoch,loss,grad_sq_norm,accuracy,gamma_0,gamma_1,gamma_2,gamma_3,gamma_4");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 3);
}

}  // namespace
}  // namespace adarc
