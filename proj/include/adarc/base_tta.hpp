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

#ifndef ADARC_BASE_TTA_HPP_
#define ADARC_BASE_TTA_HPP_

#include <string>
#include <variant>

#include "adarc/dataset.hpp"
#include "adarc/model.hpp"

namespace adarc {

// Plain classifier output.
struct Erm {};

// Entropy minimization over the BN scale/shift, everything else frozen.
struct TentLite {
  int steps = 10;
  double learning_rate = 0.05;
};

// Nearest-prototype classifier; prototypes are the means of the
// keep_per_class lowest-entropy nodes predicted into each class.
struct T3aLite {
  int keep_per_class = 100;
};

using BaseTtaKind = std::variant<Erm, TentLite, T3aLite>;

std::string to_string(const BaseTtaKind& kind);
/// "erm", "tent" or "t3a" with default options. Throws ConfigError.
BaseTtaKind parse_base_tta(const std::string& name);
void validate(const BaseTtaKind& kind);

// BN affine parameters found by TentLite, for callers that persist them.
struct NormUpdate {
  Vector bn_scale;
  Vector bn_shift;
  int steps_taken = 0;
  double initial_entropy = 0.0;
  double final_entropy = 0.0;
};

/// Prediction of the base TTA method for the model's current gamma. Never
/// modifies the model or cache; TentLite reports its adapted parameters
/// through `norm_update` when given.
SoftPrediction base_predict(const BaseTtaKind& kind, const GprModel& model,
                            const HopCache& cache, const Dataset& dataset,
                            NormUpdate* norm_update = nullptr);

}  // namespace adarc

#endif  // ADARC_BASE_TTA_HPP_
