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

#ifndef ADARC_THEORY_HPP_
#define ADARC_THEORY_HPP_

#include <cstdint>
#include <optional>

#include "adarc/types.hpp"

// Closed forms for a single-layer GCN z_i = x_i + gamma * mean_{j~i} x_j on a
// two-class CSBM where every node has degree d and homophily h.
namespace adarc::theory {

struct TheoryPoint {
  double mu_norm = 1.0;
  double d = 1.0;
  double h = 0.5;
  double gamma = 0.0;
};

/// Standard normal CDF.
double normal_cdf(double x);

struct RepresentationDistribution {
  Vector mean;
  double variance_scale = 1.0;  // covariance is variance_scale * I
};

/// Distribution of z_i for a node of class `class_sign` (+1 or -1) when the
/// class centers are +mu and -mu. Throws InvalidArgument when d <= 0.
RepresentationDistribution representation_distribution(const TheoryPoint& point,
                                                       int class_sign, const Vector& mu);

/// Phi( sqrt(d/(d+gamma^2)) * |1 + gamma(2h-1)| * ||mu|| ).
double closed_form_accuracy(const TheoryPoint& point);

/// gamma maximizing closed_form_accuracy: d(2h-1).
double optimal_gamma(double d, double h);

/// Accuracy at optimal_gamma: Phi( sqrt(1 + (2h-1)^2 d) * ||mu|| ).
double optimal_accuracy(double d, double h, double mu_norm);

struct AttributeShiftAccuracy {
  double accuracy = 0.0;
  // False when ||delta_mu|| violates the bound under which the shifted
  // classes stay on their own side of the source decision boundary.
  bool in_regime = true;
};

/// Target accuracy of the source classifier after both class centers move by
/// delta_mu: 1/2 Phi(x0 + dx) + 1/2 Phi(x0 - dx).
AttributeShiftAccuracy attribute_shift_accuracy(const TheoryPoint& point, double cos_sim,
                                                double delta_mu_norm);

/// Fraction of `trials` samples (alternating classes) classified correctly by
/// w = sign(1 + gamma(2h-1)) mu/||mu||, b = 0. Throws InvalidArgument if
/// ||mu|| = 0.
double monte_carlo_accuracy(const TheoryPoint& point, const Vector& mu, std::int64_t trials,
                            std::uint64_t seed);

/// Same with an explicit decision direction (predict "+" iff z.w >= 0).
double monte_carlo_accuracy(const TheoryPoint& point, const Vector& mu, const Vector& w,
                            std::int64_t trials, std::uint64_t seed);

struct AttributeShift {
  double cos_sim = 1.0;
  double delta_mu_norm = 0.0;
};

struct GapDecomposition {
  double source_accuracy = 0.0;
  double best_target_accuracy = 0.0;  // sup over target classifiers
  double target_accuracy = 0.0;       // source classifier on target
  double delta_f = 0.0;               // representation degradation
  double delta_g = 0.0;               // classifier bias
};

/// Splits the source-to-target accuracy gap for a pure attribute shift
/// (identical structure, `shift` given) or a pure structure shift (same
/// ||mu|| and gamma, no `shift`). Throws InvalidArgument for mixed shifts.
GapDecomposition gap_decomposition(const TheoryPoint& source, const TheoryPoint& target,
                                   const std::optional<AttributeShift>& shift = std::nullopt);

}  // namespace adarc::theory

#endif  // ADARC_THEORY_HPP_
