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

#ifndef ADARC_CSBM_HPP_
#define ADARC_CSBM_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "adarc/dataset.hpp"
#include "adarc/types.hpp"

namespace adarc::csbm {

/// Two-class contextual stochastic block model.
///
/// Class 0 is the "+" class with center mu + delta_mu, class 1 the "-" class
/// with center -mu + delta_mu. Features are isotropic Gaussian with standard
/// deviation noise_std around the class center.
struct CsbmParams {
  int n = 0;  // even
  int dim = 0;
  Vector mu;
  Vector delta_mu;  // empty means zero
  double avg_degree = 0.0;
  double homophily = 0.5;
  double noise_std = 1.0;
  // Fractions of nodes assigned to the train and val masks; the rest is test.
  // Both zero means no masks are attached.
  double train_fraction = 0.0;
  double val_fraction = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EdgeProbs {
  double p = 0.0;  // same-class
  double q = 0.0;  // cross-class
};

/// p = 2dh/N, q = 2d(1-h)/N. Throws InvalidArgument when either leaves [0,1].
EdgeProbs edge_probs(const CsbmParams& params);

/// Draws a graph and features. Deterministic in params (including seed).
Dataset generate(const CsbmParams& params);

/// Removes floor(fraction * #same-label edges) same-label edges, chosen
/// uniformly without replacement. Cross-label edges are kept.
Dataset drop_homophilic_edges(const Dataset& dataset, double fraction, std::uint64_t seed);

/// Constant vector with the given per-entry value.
Vector constant_vector(int dim, double value);

/// A source/target pair of CSBM parameter sets.
struct Scenario {
  std::string name;
  CsbmParams source;
  CsbmParams target;
};

struct PresetOptions {
  int n = 5000;
  int dim = 2000;
  // Per-entry class-center value times sqrt(dim), and the attribute shift.
  double mu_scale = 0.03;
  double delta_mu_scale = 0.02;
  // Feature noise standard deviation times sqrt(dim).
  double noise_scale = 1.0;
  double train_fraction = 0.6;
  double val_fraction = 0.2;
};

/// Names accepted by make_scenario: homo2hetero, hetero2homo, high2low,
/// low2high, each optionally suffixed "+attr" (target centers shifted by
/// delta_mu), and "attr" (pure attribute shift at d=5, h=0.8).
const std::vector<std::string>& scenario_names();

/// Builds the named scenario. Source and target seeds are derived from
/// `seed`. Throws ConfigError for an unknown name.
Scenario make_scenario(const std::string& name, std::uint64_t seed,
                       const PresetOptions& options = {});

}  // namespace adarc::csbm

#endif  // ADARC_CSBM_HPP_
