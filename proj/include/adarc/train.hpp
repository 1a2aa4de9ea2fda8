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

#ifndef ADARC_TRAIN_HPP_
#define ADARC_TRAIN_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "adarc/dataset.hpp"
#include "adarc/model.hpp"

namespace adarc {

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 500;
  double weight_decay = 5e-4;  // on w1 and w_cls
  int patience = 50;           // epochs without val improvement; 0 disables
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // cross-entropy plus the weight-decay term
  double val_accuracy = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  GprModel model;  // best validation accuracy, parameters rounded to f32
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
};

/// Full-batch gradient descent on masked cross-entropy. When an epoch's
/// objective exceeds the previous one the step is undone and the learning
/// rate halved, so the accepted objective sequence is non-increasing.
/// Requires "train" and "val" masks. Throws NumericalError on NaN.
TrainResult train_source(const GprModel& initial, const Dataset& dataset,
                         const TrainConfig& config);

/// init_model(shape, config.seed) followed by train_source.
TrainResult pretrain(const Dataset& dataset, const ModelShape& shape, const TrainConfig& config);

/// Fraction of masked nodes (all when mask is null) whose argmax prediction
/// matches the label.
double accuracy(const Matrix& scores, const LabelVector& labels, const Mask* mask = nullptr);

/// Featurizes with the model's own normalization mode and scores argmax
/// predictions.
double evaluate(const GprModel& model, const Dataset& dataset, const Mask* mask = nullptr);

void write_history_csv(const std::vector<EpochRecord>& history,
                       const std::filesystem::path& path);

}  // namespace adarc

#endif  // ADARC_TRAIN_HPP_
