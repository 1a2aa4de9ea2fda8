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

#include "adarc/adapt.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "adarc/report_format.hpp"
#include "adarc/train.hpp"

namespace adarc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

const char* to_string(AdaptParams params) {
  switch (params) {
    case AdaptParams::kGamma:
      return "gamma";
    case AdaptParams::kTheta:
      return "theta";
    case AdaptParams::kBoth:
      return "both";
  }
  return "?";
}

AdaptParams parse_adapt_params(const std::string& name) {
  if (name == "gamma") return AdaptParams::kGamma;
  if (name == "theta") return AdaptParams::kTheta;
  if (name == "both") return AdaptParams::kBoth;
  throw ConfigError("unknown ablation '" + name + "' (expected gamma, theta or both)");
}

void AdaptConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("adapt: learning rate must be finite and non-negative");
  }
  if (epochs < 1) throw ConfigError("adapt: epochs must be >= 1");
  adarc::validate(base);
}

AdaptResult adapt(const GprModel& input, const Dataset& dataset, const AdaptConfig& config) {
  config.validate();
  dataset.validate();
  const bool move_gamma = config.params != AdaptParams::kTheta;
  const bool move_theta = config.params != AdaptParams::kGamma;

  AdaptResult result;
  result.model = input;
  GprModel& model = result.model;
  AdaptTrace& trace = result.trace;
  const PropagationOperator op(dataset.graph, model.mode);

  auto accuracy_of = [&](const SoftPrediction& p) -> std::optional<double> {
    if (!config.track_accuracy) return std::nullopt;
    return accuracy(p.probs, dataset.labels, config.eval_mask);
  };
  auto predict = [&](const HopCache& c) {
    NormUpdate norm;
    SoftPrediction p = base_predict(config.base, model, c, dataset, &norm);
    return std::make_pair(std::move(p), std::move(norm));
  };

  const auto t_init = Clock::now();
  HopCache cache = featurize_hops(model, dataset, op);
  auto [prediction, norm] = predict(cache);
  trace.initial_inference_seconds = seconds_since(t_init);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    StageSeconds stages;
    auto t = Clock::now();
    if (epoch > 1) {
      if (move_theta) cache = featurize_hops(model, dataset, op);
      std::tie(prediction, norm) = predict(cache);
    }
    if (config.persist_base_tta && std::holds_alternative<TentLite>(config.base) &&
        norm.steps_taken > 0) {
      model.bn_scale = norm.bn_scale;
      model.bn_shift = norm.bn_shift;
      refresh_hops(cache, model, dataset.graph);
    }
    const Matrix z = aggregate(cache, model.gamma);
    stages.forward = seconds_since(t);

    t = Clock::now();
    EpochTrace record;
    record.epoch = epoch;
    record.gamma = model.gamma;
    record.accuracy = accuracy_of(prediction);
    const Matrix dz = surrogate_grad_z(config.loss, model, z, prediction, &record.loss);
    stages.loss = seconds_since(t);

    t = Clock::now();
    Vector g_gamma;
    ModelGradients g_theta;
    if (move_theta) {
      g_theta = backward_from_z(model, cache, dataset, op, dz);
      g_gamma = g_theta.gamma;
      record.grad_sq_norm = g_theta.w1.squaredNorm() + g_theta.b1.squaredNorm() +
                            g_theta.bn_scale.squaredNorm() + g_theta.bn_shift.squaredNorm();
    } else {
      g_gamma = gamma_gradient(cache, dz);
    }
    if (move_gamma) record.grad_sq_norm += g_gamma.squaredNorm();
    stages.backward = seconds_since(t);

    const bool finite = std::isfinite(record.loss) && std::isfinite(record.grad_sq_norm);
    trace.epochs.push_back(std::move(record));
    if (!finite) {
      trace.stage_seconds.push_back(stages);
      trace.propagate_calls = op.apply_count();
      throw AdaptDivergence("adapt: non-finite loss or gradient at epoch " +
                                std::to_string(epoch),
                            trace);
    }

    t = Clock::now();
    const double lr = config.learning_rate;
    if (move_gamma) model.gamma -= lr * g_gamma;
    if (move_theta) {
      model.w1 -= lr * g_theta.w1;
      model.b1 -= lr * g_theta.b1;
      model.bn_scale -= lr * g_theta.bn_scale;
      model.bn_shift -= lr * g_theta.bn_shift;
    }
    stages.update = seconds_since(t);
    trace.stage_seconds.push_back(stages);
  }

  if (move_theta) cache = featurize_hops(model, dataset, op);
  std::tie(prediction, norm) = predict(cache);
  if (config.persist_base_tta && std::holds_alternative<TentLite>(config.base) &&
      norm.steps_taken > 0) {
    model.bn_scale = norm.bn_scale;
    model.bn_shift = norm.bn_shift;
  }
  const Matrix z = aggregate(cache, model.gamma);
  trace.final_loss = surrogate_loss(config.loss, model, z, prediction);
  if (!std::isfinite(trace.final_loss) || !all_finite(prediction.probs)) {
    trace.propagate_calls = op.apply_count();
    throw AdaptDivergence("adapt: non-finite final prediction", trace);
  }
  trace.final_accuracy = accuracy_of(prediction);
  trace.propagate_calls = op.apply_count();
  if (!move_theta && trace.propagate_calls != model.hops()) {
    throw NumericalError("adapt: hop cache was rebuilt (" +
                         std::to_string(trace.propagate_calls) + " propagations, expected " +
                         std::to_string(model.hops()) + ")");
  }
  result.prediction = std::move(prediction);
  return result;
}

ConvergenceSummary convergence_report(const AdaptTrace& trace) {
  detail::require(!trace.epochs.empty(), "convergence_report: empty trace");
  ConvergenceSummary out;
  const auto t_count = trace.epochs.size();
  double running_sum = 0.0;
  double previous_mean = 0.0;
  for (std::size_t t = 0; t < t_count; ++t) {
    const EpochTrace& e = trace.epochs[t];
    out.loss_curve.push_back(e.loss);
    running_sum += e.grad_sq_norm;
    const double mean = running_sum / static_cast<double>(t + 1);
    if (t >= t_count / 2 && t > 0 && mean > previous_mean * (1.0 + 1e-12) + 1e-300) {
      out.running_mean_decreasing = false;
    }
    previous_mean = mean;
  }
  out.mean_sq_grad_norm = running_sum / static_cast<double>(t_count);
  return out;
}

void write_trace_csv(const AdaptTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  out << "epoch,loss,grad_sq_norm,accuracy";
  const Eigen::Index k = trace.epochs.empty() ? 0 : trace.epochs.front().gamma.size();
  for (Eigen::Index i = 0; i < k; ++i) out << ",gamma_" << i;
  out << '\n';
  for (const EpochTrace& e : trace.epochs) {
    out << e.epoch << ',' << format_real(e.loss) << ',' << format_real(e.grad_sq_norm) << ',';
    if (e.accuracy) out << format_real(*e.accuracy);
    for (Eigen::Index i = 0; i < e.gamma.size(); ++i) out << ',' << format_real(e.gamma[i]);
    out << '\n';
  }
}

}  // namespace adarc
