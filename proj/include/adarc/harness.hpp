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

#ifndef ADARC_HARNESS_HPP_
#define ADARC_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adarc/adapt.hpp"
#include "adarc/csbm.hpp"
#include "adarc/train.hpp"
#include "json.hpp"

namespace adarc::harness {

using Json = nlohmann::ordered_json;

/// A target-side method: a base TTA routine, optionally wrapped by the
/// gamma adaptation loop. Named "erm", "tent", "t3a", each optionally
/// suffixed "+adarc".
struct Method {
  std::string name;
  BaseTtaKind base = Erm{};
  bool adapt_gamma = false;
};

Method parse_method(const std::string& name);  // throws ConfigError

struct ExperimentConfig {
  std::string scenario = "homo2hetero";
  std::vector<std::string> methods = {"erm", "erm+adarc"};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  csbm::PresetOptions preset;
  // Replace the preset's source homophily / average degree.
  std::optional<double> source_homophily;
  std::optional<double> source_degree;
  int hidden_dim = 32;
  int hops = 9;
  Normalization normalization = Normalization::kSymmetric;
  TrainConfig train;  // seed is replaced by each experiment seed
  double adapt_learning_rate = 1.0;
  int adapt_epochs = 30;
  LossKind loss = LossKind::kPic;
  TentLite tent;
  T3aLite t3a;
  // Linear probe used by decompose_gap.
  int probe_max_iterations = 5000;
  double probe_tolerance = 1e-6;
  // Adds wall-clock fields to reports; they make reports non-reproducible.
  bool report_timing = false;

  void validate() const;  // throws ConfigError
};

/// Sets one key. Keys are listed by config_keys_help(). Throws ConfigError
/// on an unknown key or malformed value.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Plain-text "key = value" lines; '#' starts a comment.
void apply_config_text(ExperimentConfig& config, const std::string& text);
void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path);

std::string config_keys_help();

Json to_json(const ExperimentConfig& config);

/// Source and target parameters of the configured scenario for one seed,
/// with the source overrides applied.
csbm::Scenario scenario_for(const ExperimentConfig& config, std::uint64_t seed);

AdaptConfig adapt_config_for(const ExperimentConfig& config, const Method& method);

/// Pretrained models keyed by everything that determines them (source
/// parameters, model shape, training config). Lets sweeps and repeated
/// scenarios share one pretraining run per source graph.
class ModelCache {
 public:
  // `source` must be the dataset generated from `params`.
  const TrainResult& get(const csbm::CsbmParams& params, const Dataset& source,
                         const ExperimentConfig& config, std::uint64_t seed);
  std::size_t size() const { return entries_.size(); }
  int misses() const { return misses_; }

 private:
  std::map<std::string, TrainResult> entries_;
  int misses_ = 0;
};

struct SeedTiming {
  double generate_seconds = 0.0;
  double pretrain_seconds = 0.0;
  std::map<std::string, double> method_seconds;
};

struct MethodResult {
  std::string method;
  std::vector<double> accuracies;  // one per seed, in seed order
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; NaN for one seed
};

struct ExperimentReport {
  std::string scenario;
  std::vector<std::uint64_t> seeds;
  std::vector<double> source_test_accuracies;
  std::vector<MethodResult> methods;
  ExperimentConfig config;
  std::vector<SeedTiming> timing;

  const MethodResult& method(const std::string& name) const;  // throws InvalidArgument
};

double mean_of(const std::vector<double>& xs);
double sample_sd(const std::vector<double>& xs);

/// Pretrains on each seed's source graph and scores every method on its
/// target graph (all nodes).
ExperimentReport run_scenario(const ExperimentConfig& config, ModelCache* cache = nullptr);

Json to_json(const ExperimentReport& report);

enum class SweepAxis { kShiftLevel, kLrEpochs, kHopsK, kLossKind };

SweepAxis parse_sweep_axis(const std::string& name);  // throws ConfigError
const char* to_string(SweepAxis axis);

struct SweepPoint {
  std::string value;
  ExperimentReport report;
};

/// One report per grid value. Grid values by axis:
///   shift_level  source homophily for homo2hetero/hetero2homo (and the
///                attribute presets), source degree for high2low/low2high
///   lr_epochs    "lr:epochs"
///   hops_K       integer K
///   loss_kind    pic, entropy, pseudo or diff
std::vector<SweepPoint> sweep(SweepAxis axis, const std::vector<std::string>& grid,
                              const ExperimentConfig& base, ModelCache* cache = nullptr);

Json to_json(SweepAxis axis, const std::vector<SweepPoint>& points);
/// axis,value,method,mean,sd,acc_<seed>...
void write_sweep_csv(SweepAxis axis, const std::vector<SweepPoint>& points,
                     const std::filesystem::path& path);

struct ProbeOptions {
  int max_iterations = 5000;
  double tolerance = 1e-6;  // on the gradient norm
};

struct GapReport {
  double source_accuracy = 0.0;       // source classifier, source test nodes
  double target_accuracy = 0.0;       // source classifier, target nodes
  double probe_accuracy = 0.0;        // fresh linear probe fit on target
  double best_target_accuracy = 0.0;  // max(probe, target)
  double delta_f = 0.0;               // source - best target
  double delta_g = 0.0;               // best target - target
  int probe_iterations = 0;
  double probe_grad_norm = 0.0;
  bool probe_converged = false;
  ProbeOptions probe;
};

/// Splits the source-to-target accuracy gap at the best accuracy any linear
/// classifier reaches on the frozen target representation. Uses target
/// labels; a diagnostic, never part of adaptation.
GapReport decompose_gap(const GprModel& model, const Dataset& source, const Dataset& target,
                        const ProbeOptions& options = {});

Json to_json(const GapReport& report);

struct ProbeFit {
  Matrix weights;  // (H + 1) x C over standardized features plus a bias row
  double accuracy = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

/// Multinomial logistic regression by full-batch gradient descent with step
/// 1/L on column-standardized features. Throws DegenerateRepresentation
/// when every column is constant.
ProbeFit fit_linear_probe(const Matrix& z, const LabelVector& labels, int num_classes,
                          const ProbeOptions& options);

struct BenchReport {
  int repetitions = 0;
  int epochs = 0;
  // Medians over repetitions, in seconds.
  double initial_inference = 0.0;
  StageSeconds epoch_stages;   // per adaptation epoch
  double epoch_total = 0.0;
  double cached_forward = 0.0;  // aggregate from the hop cache
  double cold_forward = 0.0;    // featurize + K propagations + aggregate
  std::int64_t propagate_calls = 0;  // per adapt run

  double epoch_to_initial_ratio() const { return epoch_total / initial_inference; }
};

/// Times the configured scenario's adaptation on the first seed.
BenchReport bench(const ExperimentConfig& config, int repetitions, ModelCache* cache = nullptr);

Json to_json(const BenchReport& report);

void write_json(const Json& json, const std::filesystem::path& path);

}  // namespace adarc::harness

#endif  // ADARC_HARNESS_HPP_
