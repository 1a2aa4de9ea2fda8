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

#ifndef ADARC_ADAPT_HPP_
#define ADARC_ADAPT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "adarc/base_tta.hpp"
#include "adarc/dataset.hpp"
#include "adarc/losses.hpp"
#include "adarc/model.hpp"

namespace adarc {

// Which parameters the outer loop updates. Only kGamma is the supported
// method; the others exist to reproduce the forgetting ablation.
enum class AdaptParams { kGamma, kTheta, kBoth };

const char* to_string(AdaptParams params);
AdaptParams parse_adapt_params(const std::string& name);  // throws ConfigError

struct AdaptConfig {
  double learning_rate = 1.0;
  int epochs = 30;
  LossKind loss = LossKind::kPic;
  BaseTtaKind base = Erm{};
  // Write TentLite's adapted BN affine parameters back into the model.
  bool persist_base_tta = false;
  AdaptParams params = AdaptParams::kGamma;
  // Record per-epoch accuracy against the dataset labels (trace only).
  bool track_accuracy = true;
  // Accuracy mask; all nodes when null.
  const Mask* eval_mask = nullptr;

  void validate() const;
};

struct EpochTrace {
  int epoch = 0;
  double loss = 0.0;          // at the gamma before this epoch's step
  double grad_sq_norm = 0.0;  // ||dL/dgamma||^2 (all updated parameters)
  Vector gamma;               // before this epoch's step
  std::optional<double> accuracy;  // of this epoch's base prediction
};

struct StageSeconds {
  double forward = 0.0;   // aggregate + base prediction
  double loss = 0.0;      // surrogate value and dL/dZ
  double backward = 0.0;  // chain to the updated parameters
  double update = 0.0;    // parameter step

  double total() const { return forward + loss + backward + update; }
};

struct AdaptTrace {
  std::vector<EpochTrace> epochs;
  std::vector<StageSeconds> stage_seconds;  // one entry per epoch
  double initial_inference_seconds = 0.0;   // hop cache + first prediction
  std::int64_t propagate_calls = 0;
  double final_loss = 0.0;  // surrogate at the final gamma and prediction
  std::optional<double> final_accuracy;
};

struct AdaptResult {
  GprModel model;
  SoftPrediction prediction;
  AdaptTrace trace;
};

/// Raised when the loss or a gradient becomes non-finite; carries the trace
/// up to the failing epoch.
class AdaptDivergence : public NumericalError {
 public:
  AdaptDivergence(const std::string& what, AdaptTrace trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const AdaptTrace& trace() const { return trace_; }

 private:
  AdaptTrace trace_;
};

/// Builds the hop cache once, then for each epoch predicts with the base
/// TTA method and takes one gradient step on gamma; returns the base
/// prediction at the final gamma. Target labels are read only for the trace.
AdaptResult adapt(const GprModel& model, const Dataset& dataset, const AdaptConfig& config);

struct ConvergenceSummary {
  double mean_sq_grad_norm = 0.0;  // (1/T) sum_t ||grad_t||^2
  std::vector<double> loss_curve;
  // Running mean of ||grad_t||^2 is non-increasing over the last half.
  bool running_mean_decreasing = true;
};

ConvergenceSummary convergence_report(const AdaptTrace& trace);

/// epoch,loss,grad_sq_norm,accuracy,gamma_0..gamma_K
void write_trace_csv(const AdaptTrace& trace, const std::filesystem::path& path);

}  // namespace adarc

#endif  // ADARC_ADAPT_HPP_
