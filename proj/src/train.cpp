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

#include "adarc/train.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "adarc/report_format.hpp"

namespace adarc {

namespace {

double decay_term(const GprModel& m, double wd) {
  return 0.5 * wd * (m.w1.squaredNorm() + m.w_cls.squaredNorm());
}

void apply_step(GprModel& m, const ModelGradients& g, double lr, double wd) {
  m.w1 -= lr * (g.w1 + wd * m.w1);
  m.b1 -= lr * g.b1;
  m.bn_scale -= lr * g.bn_scale;
  m.bn_shift -= lr * g.bn_shift;
  m.gamma -= lr * g.gamma;
  m.w_cls -= lr * (g.w_cls + wd * m.w_cls);
  m.b_cls -= lr * g.b_cls;
}

}  // namespace

void TrainConfig::validate() const {
  detail::require(learning_rate > 0.0 && std::isfinite(learning_rate),
                  "train: learning_rate must be finite and positive");
  detail::require(epochs >= 1, "train: epochs must be >= 1");
  detail::require(weight_decay >= 0.0, "train: weight_decay must be non-negative");
  detail::require(patience >= 0, "train: patience must be non-negative");
}

TrainResult train_source(const GprModel& initial, const Dataset& dataset,
                         const TrainConfig& config) {
  config.validate();
  dataset.validate();
  const Mask* train = dataset.mask("train");
  const Mask* val = dataset.mask("val");
  detail::require(train != nullptr && val != nullptr,
                  "train_source: dataset needs train and val masks");
  const PropagationOperator op(dataset.graph, initial.mode);

  TrainResult result;
  GprModel current = initial;
  GprModel accepted = initial;
  double accepted_loss = std::numeric_limits<double>::infinity();
  ModelGradients accepted_grads;
  double lr = config.learning_rate;
  int since_best = 0;
  bool have_best = false;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const HopCache cache = featurize_hops(current, dataset, op);
    CrossEntropyResult ce = backward_ce(current, dataset, cache, op, train);
    const double loss = ce.loss + decay_term(current, config.weight_decay);
    if (!std::isfinite(loss)) {
      throw NumericalError("train_source: objective became non-finite at epoch " +
                           std::to_string(epoch));
    }
    if (loss > accepted_loss) {
      // Undo the step that raised the objective and retry with half the rate.
      lr *= 0.5;
      current = accepted;
      apply_step(current, accepted_grads, lr, config.weight_decay);
      continue;
    }

    const Classification cls = classify(aggregate(cache, current.gamma), current);
    const double val_acc = accuracy(cls.logits, dataset.labels, val);
    result.history.push_back({epoch, loss, val_acc, lr});
    if (!have_best || val_acc > result.best_val_accuracy) {
      have_best = true;
      result.best_val_accuracy = val_acc;
      result.best_epoch = epoch;
      result.model = current;
      result.model.bn_mean = cache.batch_mean();
      result.model.bn_var = cache.batch_var();
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }

    accepted = current;
    accepted_loss = loss;
    accepted_grads = std::move(ce.grads);
    apply_step(current, accepted_grads, lr, config.weight_decay);
  }
  round_parameters_to_f32(result.model);
  return result;
}

TrainResult pretrain(const Dataset& dataset, const ModelShape& shape, const TrainConfig& config) {
  return train_source(init_model(shape, config.seed), dataset, config);
}

double accuracy(const Matrix& scores, const LabelVector& labels, const Mask* mask) {
  detail::require(scores.rows() == labels.size(), "accuracy: label count mismatch");
  detail::require(mask == nullptr || static_cast<Eigen::Index>(mask->size()) == labels.size(),
                  "accuracy: mask length mismatch");
  const Eigen::VectorXi pred = argmax_rows(scores);
  std::int64_t hit = 0;
  std::int64_t total = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (mask != nullptr && !(*mask)[i]) continue;
    ++total;
    hit += pred[i] == labels[i] ? 1 : 0;
  }
  detail::require(total > 0, "accuracy: empty mask");
  return static_cast<double>(hit) / static_cast<double>(total);
}

double evaluate(const GprModel& model, const Dataset& dataset, const Mask* mask) {
  const PropagationOperator op(dataset.graph, model.mode);
  const HopCache cache = featurize_hops(model, dataset, op);
  return accuracy(classify(aggregate(cache, model.gamma), model).logits, dataset.labels, mask);
}

void write_history_csv(const std::vector<EpochRecord>& history,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  out << "epoch,train_loss,val_acc\n";
  for (const EpochRecord& r : history) {
    out << r.epoch << ',' << format_real(r.train_loss) << ',' << format_real(r.val_accuracy)
        << '\n';
  }
}

}  // namespace adarc
