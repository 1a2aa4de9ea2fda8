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

#include "adarc/base_tta.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adarc/losses.hpp"

namespace adarc {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

// Z as an affine function of the BN parameters:
// Z = Xbar diag(scale) + u shiftᵀ with Xbar = sum_k gamma_k Ã^k X̂ and
// u = sum_k gamma_k Ã^k 1.
struct AffineZ {
  Matrix xbar;
  Vector u;

  Matrix at(const Vector& scale, const Vector& shift) const {
    Matrix z = xbar * scale.asDiagonal();
    z.noalias() += u * shift.transpose();
    return z;
  }
};

AffineZ affine_z(const HopCache& cache, const Vector& gamma) {
  const int h = cache.width();
  Matrix acc = gamma[0] * cache.base_hop(0);
  for (int k = 1; k <= cache.hops(); ++k) acc.noalias() += gamma[k] * cache.base_hop(k);
  return {acc.leftCols(h), acc.col(h)};
}

double entropy_of(const GprModel& model, const Matrix& z) {
  return mean_entropy(classify(z, model).prediction.probs);
}

SoftPrediction tent_predict(const TentLite& tent, const GprModel& model, const HopCache& cache,
                            NormUpdate* update) {
  const AffineZ affine = affine_z(cache, model.gamma);
  Vector scale = model.bn_scale;
  Vector shift = model.bn_shift;
  Matrix z = affine.at(scale, shift);
  double loss = 0.0;
  Matrix dz = surrogate_grad_z(LossKind::kEntropy, model, z, SoftPrediction{}, &loss);
  const double initial = loss;
  int taken = 0;

  for (int step = 0; step < tent.steps; ++step) {
    const Vector g_scale = dz.cwiseProduct(affine.xbar).colwise().sum().transpose();
    const Vector g_shift = dz.transpose() * affine.u;
    if (g_scale.squaredNorm() + g_shift.squaredNorm() == 0.0) break;
    // Backtrack until the entropy drops; give up after a few halvings.
    double lr = tent.learning_rate;
    bool improved = false;
    for (int attempt = 0; attempt < 20 && !improved; ++attempt, lr *= 0.5) {
      const Vector s = scale - lr * g_scale;
      const Vector t = shift - lr * g_shift;
      const Matrix z_try = affine.at(s, t);
      const double trial = entropy_of(model, z_try);
      if (trial < loss) {
        scale = s;
        shift = t;
        z = z_try;
        improved = true;
      }
    }
    if (!improved) break;
    ++taken;
    dz = surrogate_grad_z(LossKind::kEntropy, model, z, SoftPrediction{}, &loss);
  }

  if (update != nullptr) {
    update->bn_scale = scale;
    update->bn_shift = shift;
    update->steps_taken = taken;
    update->initial_entropy = initial;
    update->final_entropy = loss;
  }
  if (taken == 0) return classify(aggregate(cache, model.gamma), model).prediction;
  return classify(z, model).prediction;
}

SoftPrediction t3a_predict(const T3aLite& t3a, const GprModel& model, const HopCache& cache) {
  const Matrix z = aggregate(cache, model.gamma);
  const Matrix probs = classify(z, model).prediction.probs;
  const Eigen::VectorXi pred = argmax_rows(probs);
  const Eigen::Index n = z.rows();
  const int c_count = model.num_classes();

  Vector entropy(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double h = 0.0;
    for (int c = 0; c < c_count; ++c)
      if (probs(i, c) > 0.0) h -= probs(i, c) * std::log(probs(i, c));
    entropy[i] = h;
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return entropy[a] < entropy[b]; });

  Matrix prototypes = Matrix::Zero(c_count, z.cols());
  std::vector<int> kept(static_cast<std::size_t>(c_count), 0);
  for (Eigen::Index i : order) {
    int& count = kept[static_cast<std::size_t>(pred[i])];
    if (count >= t3a.keep_per_class) continue;
    prototypes.row(pred[i]) += z.row(i);
    ++count;
  }
  for (int c = 0; c < c_count; ++c) {
    if (kept[static_cast<std::size_t>(c)] > 0) {
      prototypes.row(c) /= static_cast<double>(kept[static_cast<std::size_t>(c)]);
    } else {
      prototypes.row(c) = model.w_cls.col(c).transpose();
    }
  }

  Matrix neg_dist(n, c_count);
  for (int c = 0; c < c_count; ++c)
    neg_dist.col(c) = -(z.rowwise() - prototypes.row(c)).rowwise().squaredNorm();
  return {row_softmax(neg_dist)};
}

}  // namespace

std::string to_string(const BaseTtaKind& kind) {
  return std::visit(Overloaded{[](const Erm&) { return std::string("erm"); },
                               [](const TentLite&) { return std::string("tent"); },
                               [](const T3aLite&) { return std::string("t3a"); }},
                    kind);
}

BaseTtaKind parse_base_tta(const std::string& name) {
  if (name == "erm") return Erm{};
  if (name == "tent") return TentLite{};
  if (name == "t3a") return T3aLite{};
  throw ConfigError("unknown base TTA '" + name + "' (expected erm, tent or t3a)");
}

void validate(const BaseTtaKind& kind) {
  std::visit(Overloaded{[](const Erm&) {},
                        [](const TentLite& t) {
                          if (t.steps < 0 || !(t.learning_rate > 0.0))
                            throw ConfigError("tent: steps must be >= 0 and lr > 0");
                        },
                        [](const T3aLite& t) {
                          if (t.keep_per_class < 1)
                            throw ConfigError("t3a: keep_per_class must be >= 1");
                        }},
             kind);
}

SoftPrediction base_predict(const BaseTtaKind& kind, const GprModel& model,
                            const HopCache& cache, const Dataset& dataset,
                            NormUpdate* norm_update) {
  validate(kind);
  check_fresh(cache, model, dataset.graph);
  return std::visit(
      Overloaded{[&](const Erm&) {
                   return classify(aggregate(cache, model.gamma), model).prediction;
                 },
                 [&](const TentLite& t) { return tent_predict(t, model, cache, norm_update); },
                 [&](const T3aLite& t) { return t3a_predict(t, model, cache); }},
      kind);
}

}  // namespace adarc
