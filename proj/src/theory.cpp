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

#include "adarc/theory.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "adarc/rng.hpp"

namespace adarc::theory {

namespace {

// Separation coefficient 1 + gamma(2h - 1) of the class means.
double mean_coefficient(const TheoryPoint& p) { return 1.0 + p.gamma * (2.0 * p.h - 1.0); }

double noise_shrink(const TheoryPoint& p) {
  detail::require(p.d > 0.0, "theory: degree must be positive");
  return std::sqrt(p.d / (p.d + p.gamma * p.gamma));
}

double sign_of(double x) { return x >= 0.0 ? 1.0 : -1.0; }

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

RepresentationDistribution representation_distribution(const TheoryPoint& point,
                                                       int class_sign, const Vector& mu) {
  detail::require(point.d > 0.0, "representation_distribution: degree must be positive");
  detail::require(class_sign == 1 || class_sign == -1,
                  "representation_distribution: class_sign must be +1 or -1");
  const Vector own = static_cast<double>(class_sign) * mu;
  RepresentationDistribution out;
  out.mean = (1.0 + point.gamma * point.h) * own + point.gamma * (1.0 - point.h) * (-own);
  out.variance_scale = 1.0 + point.gamma * point.gamma / point.d;
  return out;
}

double closed_form_accuracy(const TheoryPoint& point) {
  return normal_cdf(noise_shrink(point) * std::abs(mean_coefficient(point)) * point.mu_norm);
}

double optimal_gamma(double d, double h) { return d * (2.0 * h - 1.0); }

double optimal_accuracy(double d, double h, double mu_norm) {
  const double c = 2.0 * h - 1.0;
  return normal_cdf(std::sqrt(1.0 + c * c * d) * mu_norm);
}

AttributeShiftAccuracy attribute_shift_accuracy(const TheoryPoint& point, double cos_sim,
                                                double delta_mu_norm) {
  const double shrink = noise_shrink(point);
  const double x0 = shrink * std::abs(mean_coefficient(point)) * point.mu_norm;
  const double dx = shrink * std::abs(1.0 + point.gamma) * cos_sim * delta_mu_norm;
  AttributeShiftAccuracy out;
  out.accuracy = 0.5 * normal_cdf(x0 + dx) + 0.5 * normal_cdf(x0 - dx);
  const double lever = std::abs(1.0 + point.gamma);
  out.in_regime =
      lever == 0.0 || delta_mu_norm < std::abs(mean_coefficient(point)) / lever * point.mu_norm;
  return out;
}

double monte_carlo_accuracy(const TheoryPoint& point, const Vector& mu, std::int64_t trials,
                            std::uint64_t seed) {
  const double norm = mu.norm();
  detail::require(norm > 0.0, "monte_carlo_accuracy: ||mu|| must be positive");
  const Vector w = sign_of(mean_coefficient(point)) * mu / norm;
  return monte_carlo_accuracy(point, mu, w, trials, seed);
}

double monte_carlo_accuracy(const TheoryPoint& point, const Vector& mu, const Vector& w,
                            std::int64_t trials, std::uint64_t seed) {
  detail::require(trials >= 1, "monte_carlo_accuracy: trials must be >= 1");
  detail::require(w.size() == mu.size(), "monte_carlo_accuracy: w and mu differ in size");
  const RepresentationDistribution pos = representation_distribution(point, +1, mu);
  const RepresentationDistribution neg = representation_distribution(point, -1, mu);
  const double sd = std::sqrt(pos.variance_scale);

  Rng rng = make_rng(seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(mu.size());
  std::int64_t correct = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    const bool positive = (t % 2) == 0;
    const Vector& mean = positive ? pos.mean : neg.mean;
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = mean[k] + sd * normal(rng);
    const bool predicted_positive = z.dot(w) >= 0.0;
    correct += predicted_positive == positive ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(trials);
}

GapDecomposition gap_decomposition(const TheoryPoint& source, const TheoryPoint& target,
                                   const std::optional<AttributeShift>& shift) {
  const bool same_structure = source.d == target.d && source.h == target.h;
  detail::require(source.gamma == target.gamma && source.mu_norm == target.mu_norm,
                  "gap_decomposition: gamma and ||mu|| must match between source and target");
  GapDecomposition out;
  out.source_accuracy = closed_form_accuracy(source);

  if (shift.has_value() && shift->delta_mu_norm != 0.0) {
    detail::require(same_structure,
                    "gap_decomposition: mixed attribute and structure shifts are unsupported");
    // Re-fitting the bias recentres the shifted classes, so the best target
    // classifier recovers the source accuracy exactly.
    out.best_target_accuracy = out.source_accuracy;
    out.target_accuracy = attribute_shift_accuracy(source, shift->cos_sim, shift->delta_mu_norm).accuracy;
  } else {
    // Structure shift: the best classifier is the Bayes direction for the
    // target; the source classifier agrees with it up to the sign of the
    // mean coefficient.
    out.best_target_accuracy = closed_form_accuracy(target);
    const bool same_side = sign_of(mean_coefficient(source)) == sign_of(mean_coefficient(target));
    out.target_accuracy = same_side ? out.best_target_accuracy : 1.0 - out.best_target_accuracy;
  }
  out.delta_f = out.source_accuracy - out.best_target_accuracy;
  out.delta_g = out.best_target_accuracy - out.target_accuracy;
  return out;
}

}  // namespace adarc::theory
