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

#include "adarc/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "adarc/report_format.hpp"

namespace adarc::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  T value{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("config: bad value '" + text + "' for key '" + key + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("config: bad boolean '" + text + "' for key '" + key + "'");
}

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) hash_ = (hash_ ^ p[i]) * 0x100000001b3ULL;
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::uint64_t hash_vector(const Vector& v) {
  Fnv1a h;
  const auto n = v.size();
  h.bytes(&n, sizeof(n));
  h.bytes(v.data(), static_cast<std::size_t>(n) * sizeof(double));
  return h.value();
}

Json seconds_json(const StageSeconds& s) {
  return Json{{"forward", s.forward},
              {"loss", s.loss},
              {"backward", s.backward},
              {"update", s.update},
              {"total", s.total()}};
}

double median(std::vector<double> xs) {
  detail::require(!xs.empty(), "median of empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 == 1 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

bool is_homophily_scenario(const std::string& name) {
  return name.starts_with("homo2hetero") || name.starts_with("hetero2homo") || name == "attr";
}

double accuracy_on(const SoftPrediction& p, const Dataset& dataset) {
  return accuracy(p.probs, dataset.labels);
}

}  // namespace

Method parse_method(const std::string& name) {
  Method m;
  m.name = name;
  std::string base = name;
  if (base.ends_with("+adarc")) {
    base.resize(base.size() - 6);
    m.adapt_gamma = true;
  }
  if (base != "erm" && base != "tent" && base != "t3a") {
    throw ConfigError("unknown method '" + name + "' (expected erm, tent or t3a, optionally +adarc)");
  }
  m.base = parse_base_tta(base);
  return m;
}

void ExperimentConfig::validate() const {
  const auto& names = csbm::scenario_names();
  if (std::find(names.begin(), names.end(), scenario) == names.end()) {
    throw ConfigError("unknown scenario '" + scenario + "'");
  }
  if (methods.empty()) throw ConfigError("config: methods must be nonempty");
  for (const auto& m : methods) parse_method(m);
  if (seeds.empty()) throw ConfigError("config: seeds must be nonempty");
  if (preset.n < 2 || preset.n % 2 != 0) throw ConfigError("config: n must be even and >= 2");
  if (preset.dim < 1) throw ConfigError("config: dim must be >= 1");
  if (!(preset.noise_scale > 0.0)) throw ConfigError("config: noise_scale must be positive");
  if (preset.train_fraction < 0.0 || preset.val_fraction < 0.0 ||
      preset.train_fraction + preset.val_fraction > 1.0) {
    throw ConfigError("config: train/val fractions must be non-negative and sum to <= 1");
  }
  if (source_homophily && (*source_homophily < 0.0 || *source_homophily > 1.0)) {
    throw ConfigError("config: source_homophily outside [0,1]");
  }
  if (source_degree && !(*source_degree >= 0.0)) {
    throw ConfigError("config: source_degree must be non-negative");
  }
  if (hidden_dim < 1 || hops < 1) throw ConfigError("config: hidden_dim and hops must be >= 1");
  try {
    train.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  AdaptConfig a;
  a.learning_rate = adapt_learning_rate;
  a.epochs = adapt_epochs;
  a.validate();
  adarc::validate(tent);
  adarc::validate(t3a);
  if (probe_max_iterations < 1 || !(probe_tolerance > 0.0)) {
    throw ConfigError("config: probe.max_iterations >= 1 and probe.tolerance > 0 required");
  }
}

void apply_setting(ExperimentConfig& c, const std::string& raw_key, const std::string& value) {
  const std::string key = trim(raw_key);
  const std::string v = trim(value);
  if (key == "scenario") {
    c.scenario = v;
  } else if (key == "methods") {
    c.methods = split_list(v);
  } else if (key == "seeds") {
    c.seeds.clear();
    for (const auto& s : split_list(v)) c.seeds.push_back(parse_number<std::uint64_t>(key, s));
  } else if (key == "n") {
    c.preset.n = parse_number<int>(key, v);
  } else if (key == "dim") {
    c.preset.dim = parse_number<int>(key, v);
  } else if (key == "mu_scale") {
    c.preset.mu_scale = parse_number<double>(key, v);
  } else if (key == "delta_mu_scale") {
    c.preset.delta_mu_scale = parse_number<double>(key, v);
  } else if (key == "noise_scale") {
    c.preset.noise_scale = parse_number<double>(key, v);
  } else if (key == "train_fraction") {
    c.preset.train_fraction = parse_number<double>(key, v);
  } else if (key == "val_fraction") {
    c.preset.val_fraction = parse_number<double>(key, v);
  } else if (key == "source_homophily") {
    c.source_homophily = parse_number<double>(key, v);
  } else if (key == "source_degree") {
    c.source_degree = parse_number<double>(key, v);
  } else if (key == "hidden_dim") {
    c.hidden_dim = parse_number<int>(key, v);
  } else if (key == "hops") {
    c.hops = parse_number<int>(key, v);
  } else if (key == "normalization") {
    c.normalization = parse_normalization(v);
  } else if (key == "train.learning_rate") {
    c.train.learning_rate = parse_number<double>(key, v);
  } else if (key == "train.epochs") {
    c.train.epochs = parse_number<int>(key, v);
  } else if (key == "train.weight_decay") {
    c.train.weight_decay = parse_number<double>(key, v);
  } else if (key == "train.patience") {
    c.train.patience = parse_number<int>(key, v);
  } else if (key == "adapt.learning_rate") {
    c.adapt_learning_rate = parse_number<double>(key, v);
  } else if (key == "adapt.epochs") {
    c.adapt_epochs = parse_number<int>(key, v);
  } else if (key == "adapt.loss") {
    c.loss = parse_loss_kind(v);
  } else if (key == "tent.steps") {
    c.tent.steps = parse_number<int>(key, v);
  } else if (key == "tent.learning_rate") {
    c.tent.learning_rate = parse_number<double>(key, v);
  } else if (key == "t3a.keep_per_class") {
    c.t3a.keep_per_class = parse_number<int>(key, v);
  } else if (key == "probe.max_iterations") {
    c.probe_max_iterations = parse_number<int>(key, v);
  } else if (key == "probe.tolerance") {
    c.probe_tolerance = parse_number<double>(key, v);
  } else if (key == "report_timing") {
    c.report_timing = parse_bool(key, v);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

void apply_config_text(ExperimentConfig& config, const std::string& text) {
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
  }
}

void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(config, buf.str());
}

std::string config_keys_help() {
  return R"(Config file keys (key = value, '#' comments):
  scenario              homo2hetero | hetero2homo | high2low | low2high, optional +attr; or attr
  methods               comma list of erm, tent, t3a, each optionally +adarc
  seeds                 comma list of unsigned integers
  n, dim                CSBM node count (even) and feature dimension
  mu_scale              class-center entry times sqrt(dim)
  delta_mu_scale        attribute-shift entry times sqrt(dim)
  noise_scale           feature noise std times sqrt(dim)
  train_fraction        source train mask fraction
  val_fraction          source validation mask fraction
  source_homophily      override the preset source homophily
  source_degree         override the preset source average degree
  hidden_dim, hops      model width and number of propagation hops K
  normalization         sym | row
  train.learning_rate, train.epochs, train.weight_decay, train.patience
  adapt.learning_rate, adapt.epochs, adapt.loss (pic | entropy | pseudo | diff)
  tent.steps, tent.learning_rate, t3a.keep_per_class
  probe.max_iterations, probe.tolerance   linear probe of the gap decomposition
  report_timing         true | false; wall-clock fields in reports
)";
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["scenario"] = c.scenario;
  j["methods"] = c.methods;
  j["seeds"] = c.seeds;
  j["n"] = c.preset.n;
  j["dim"] = c.preset.dim;
  j["mu_scale"] = c.preset.mu_scale;
  j["delta_mu_scale"] = c.preset.delta_mu_scale;
  j["noise_scale"] = c.preset.noise_scale;
  j["train_fraction"] = c.preset.train_fraction;
  j["val_fraction"] = c.preset.val_fraction;
  j["source_homophily"] = c.source_homophily ? Json(*c.source_homophily) : Json(nullptr);
  j["source_degree"] = c.source_degree ? Json(*c.source_degree) : Json(nullptr);
  j["hidden_dim"] = c.hidden_dim;
  j["hops"] = c.hops;
  j["normalization"] = to_string(c.normalization);
  j["train.learning_rate"] = c.train.learning_rate;
  j["train.epochs"] = c.train.epochs;
  j["train.weight_decay"] = c.train.weight_decay;
  j["train.patience"] = c.train.patience;
  j["adapt.learning_rate"] = c.adapt_learning_rate;
  j["adapt.epochs"] = c.adapt_epochs;
  j["adapt.loss"] = to_string(c.loss);
  j["tent.steps"] = c.tent.steps;
  j["tent.learning_rate"] = c.tent.learning_rate;
  j["t3a.keep_per_class"] = c.t3a.keep_per_class;
  j["probe.max_iterations"] = c.probe_max_iterations;
  j["probe.tolerance"] = c.probe_tolerance;
  j["report_timing"] = c.report_timing;
  return j;
}

csbm::Scenario scenario_for(const ExperimentConfig& config, std::uint64_t seed) {
  csbm::Scenario s = csbm::make_scenario(config.scenario, seed, config.preset);
  if (config.source_homophily) s.source.homophily = *config.source_homophily;
  if (config.source_degree) s.source.avg_degree = *config.source_degree;
  s.source.validate();
  csbm::edge_probs(s.source);
  csbm::edge_probs(s.target);
  return s;
}

AdaptConfig adapt_config_for(const ExperimentConfig& config, const Method& method) {
  AdaptConfig a;
  a.learning_rate = config.adapt_learning_rate;
  a.epochs = config.adapt_epochs;
  a.loss = config.loss;
  a.base = method.base;
  if (std::holds_alternative<TentLite>(a.base)) a.base = config.tent;
  if (std::holds_alternative<T3aLite>(a.base)) a.base = config.t3a;
  a.track_accuracy = false;
  return a;
}

const TrainResult& ModelCache::get(const csbm::CsbmParams& params, const Dataset& source,
                                   const ExperimentConfig& config, std::uint64_t seed) {
  Json key;
  key["n"] = params.n;
  key["dim"] = params.dim;
  key["mu"] = hash_vector(params.mu);
  key["delta_mu"] = hash_vector(params.delta_mu);
  key["avg_degree"] = params.avg_degree;
  key["homophily"] = params.homophily;
  key["noise_std"] = params.noise_std;
  key["train_fraction"] = params.train_fraction;
  key["val_fraction"] = params.val_fraction;
  key["data_seed"] = params.seed;
  key["seed"] = seed;
  key["hidden_dim"] = config.hidden_dim;
  key["hops"] = config.hops;
  key["normalization"] = to_string(config.normalization);
  key["lr"] = config.train.learning_rate;
  key["epochs"] = config.train.epochs;
  key["weight_decay"] = config.train.weight_decay;
  key["patience"] = config.train.patience;
  const std::string k = key.dump();
  auto it = entries_.find(k);
  if (it != entries_.end()) return it->second;

  ++misses_;
  TrainConfig train = config.train;
  train.seed = seed;
  GprModel initial = init_model(
      {static_cast<int>(source.feature_dim()), config.hidden_dim, source.num_classes, config.hops},
      seed);
  initial.mode = config.normalization;
  return entries_.emplace(k, train_source(initial, source, train)).first->second;
}

const MethodResult& ExperimentReport::method(const std::string& name) const {
  for (const auto& m : methods)
    if (m.method == name) return m;
  throw InvalidArgument("report has no method '" + name + "'");
}

double mean_of(const std::vector<double>& xs) {
  detail::require(!xs.empty(), "mean of empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

ExperimentReport run_scenario(const ExperimentConfig& config, ModelCache* cache) {
  config.validate();
  ModelCache local;
  if (cache == nullptr) cache = &local;
  std::vector<Method> methods;
  for (const auto& name : config.methods) methods.push_back(parse_method(name));

  ExperimentReport report;
  report.scenario = config.scenario;
  report.seeds = config.seeds;
  report.config = config;
  report.methods.resize(methods.size());
  for (std::size_t i = 0; i < methods.size(); ++i) report.methods[i].method = methods[i].name;

  for (std::uint64_t seed : config.seeds) {
    SeedTiming timing;
    auto t = Clock::now();
    const csbm::Scenario s = scenario_for(config, seed);
    const Dataset source = csbm::generate(s.source);
    const Dataset target = csbm::generate(s.target);
    timing.generate_seconds = seconds_since(t);

    t = Clock::now();
    const GprModel& model = cache->get(s.source, source, config, seed).model;
    timing.pretrain_seconds = seconds_since(t);
    report.source_test_accuracies.push_back(evaluate(model, source, source.mask("test")));

    for (std::size_t i = 0; i < methods.size(); ++i) {
      t = Clock::now();
      double acc = 0.0;
      if (methods[i].adapt_gamma) {
        const AdaptResult r = adapt(model, target, adapt_config_for(config, methods[i]));
        acc = accuracy_on(r.prediction, target);
      } else {
        const PropagationOperator op(target.graph, model.mode);
        const HopCache hops = featurize_hops(model, target, op);
        acc = accuracy_on(
            base_predict(adapt_config_for(config, methods[i]).base, model, hops, target), target);
      }
      timing.method_seconds[methods[i].name] = seconds_since(t);
      report.methods[i].accuracies.push_back(acc);
    }
    report.timing.push_back(std::move(timing));
  }
  for (auto& m : report.methods) {
    m.mean = mean_of(m.accuracies);
    m.sd = sample_sd(m.accuracies);
  }
  return report;
}

Json to_json(const ExperimentReport& r) {
  Json j;
  j["scenario"] = r.scenario;
  j["seeds"] = r.seeds;
  j["source_test_accuracy"] = Json{{"values", r.source_test_accuracies},
                                   {"mean", mean_of(r.source_test_accuracies)},
                                   {"sd", sample_sd(r.source_test_accuracies)}};
  Json methods = Json::array();
  for (const auto& m : r.methods) {
    methods.push_back(
        Json{{"method", m.method}, {"accuracies", m.accuracies}, {"mean", m.mean}, {"sd", m.sd}});
  }
  j["methods"] = std::move(methods);
  j["config"] = to_json(r.config);
  if (r.config.report_timing) {
    Json timing = Json::array();
    for (std::size_t i = 0; i < r.timing.size(); ++i) {
      const SeedTiming& t = r.timing[i];
      Json methods_t;
      for (const auto& [name, sec] : t.method_seconds) methods_t[name] = sec;
      timing.push_back(Json{{"seed", r.seeds[i]},
                            {"generate_seconds", t.generate_seconds},
                            {"pretrain_seconds", t.pretrain_seconds},
                            {"method_seconds", std::move(methods_t)}});
    }
    j["timing"] = std::move(timing);
  }
  return j;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "shift_level") return SweepAxis::kShiftLevel;
  if (name == "lr_epochs") return SweepAxis::kLrEpochs;
  if (name == "hops_K") return SweepAxis::kHopsK;
  if (name == "loss_kind") return SweepAxis::kLossKind;
  throw ConfigError("unknown sweep axis '" + name +
                    "' (expected shift_level, lr_epochs, hops_K or loss_kind)");
}

const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kShiftLevel:
      return "shift_level";
    case SweepAxis::kLrEpochs:
      return "lr_epochs";
    case SweepAxis::kHopsK:
      return "hops_K";
    case SweepAxis::kLossKind:
      return "loss_kind";
  }
  return "?";
}

std::vector<SweepPoint> sweep(SweepAxis axis, const std::vector<std::string>& grid,
                              const ExperimentConfig& base, ModelCache* cache) {
  if (grid.empty()) throw ConfigError("sweep: grid must be nonempty");
  ModelCache local;
  if (cache == nullptr) cache = &local;
  std::vector<ExperimentConfig> configs;
  for (const std::string& value : grid) {
    ExperimentConfig c = base;
    switch (axis) {
      case SweepAxis::kShiftLevel:
        if (is_homophily_scenario(c.scenario)) {
          c.source_homophily = parse_number<double>("shift_level", value);
        } else {
          c.source_degree = parse_number<double>("shift_level", value);
        }
        break;
      case SweepAxis::kLrEpochs: {
        const auto colon = value.find(':');
        if (colon == std::string::npos) {
          throw ConfigError("sweep: lr_epochs values look like 'lr:epochs', got '" + value + "'");
        }
        c.adapt_learning_rate = parse_number<double>("lr_epochs", value.substr(0, colon));
        c.adapt_epochs = parse_number<int>("lr_epochs", value.substr(colon + 1));
        break;
      }
      case SweepAxis::kHopsK:
        c.hops = parse_number<int>("hops_K", value);
        break;
      case SweepAxis::kLossKind:
        c.loss = parse_loss_kind(value);
        break;
    }
    c.validate();
    configs.push_back(std::move(c));
  }
  std::vector<SweepPoint> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.push_back({grid[i], run_scenario(configs[i], cache)});
  }
  return out;
}

Json to_json(SweepAxis axis, const std::vector<SweepPoint>& points) {
  Json j;
  j["axis"] = to_string(axis);
  Json arr = Json::array();
  for (const auto& p : points) arr.push_back(Json{{"value", p.value}, {"report", to_json(p.report)}});
  j["points"] = std::move(arr);
  return j;
}

void write_sweep_csv(SweepAxis axis, const std::vector<SweepPoint>& points,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  out << "axis,value,method,mean,sd";
  const auto& seeds = points.front().report.seeds;
  for (std::uint64_t s : seeds) out << ",acc_" << s;
  out << '\n';
  for (const auto& p : points) {
    for (const auto& m : p.report.methods) {
      out << to_string(axis) << ',' << p.value << ',' << m.method << ',' << format_real(m.mean)
          << ',' << (std::isnan(m.sd) ? std::string() : format_real(m.sd));
      for (double a : m.accuracies) out << ',' << format_real(a);
      out << '\n';
    }
  }
}

ProbeFit fit_linear_probe(const Matrix& z, const LabelVector& labels, int num_classes,
                          const ProbeOptions& options) {
  detail::require(z.rows() == labels.size() && z.rows() > 0, "probe: shape mismatch");
  detail::require(num_classes >= 2, "probe: need at least two classes");
  const Eigen::Index n = z.rows();
  const Eigen::Index h = z.cols();
  const double nn = static_cast<double>(n);

  const Vector mean = z.colwise().mean().transpose();
  Matrix x(n, h + 1);
  bool any_varying = false;
  for (Eigen::Index j = 0; j < h; ++j) {
    const double sd = std::sqrt((z.col(j).array() - mean[j]).square().sum() / nn);
    if (sd > 1e-12 * (1.0 + std::abs(mean[j]))) {
      x.col(j) = (z.col(j).array() - mean[j]) / sd;
      any_varying = true;
    } else {
      x.col(j).setZero();
    }
  }
  if (!any_varying) throw DegenerateRepresentation("probe: every representation column is constant");
  x.col(h).setOnes();

  Matrix onehot = Matrix::Zero(n, num_classes);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, labels[i]) = 1.0;

  // Softmax cross-entropy has Hessian below (1/2N) XᵀX in every direction.
  const Matrix gram = x.transpose() * x;
  const double lambda = Eigen::SelfAdjointEigenSolver<Matrix>(gram).eigenvalues().maxCoeff();
  const double step = 2.0 * nn / lambda;

  ProbeFit fit;
  fit.weights = Matrix::Zero(h + 1, num_classes);
  for (fit.iterations = 0; fit.iterations < options.max_iterations; ++fit.iterations) {
    const Matrix p = row_softmax(x * fit.weights);
    const Matrix g = x.transpose() * (p - onehot) / nn;
    fit.grad_norm = g.norm();
    if (fit.grad_norm < options.tolerance) {
      fit.converged = true;
      break;
    }
    fit.weights -= step * g;
  }
  if (!fit.converged) {
    fit.grad_norm = (x.transpose() * (row_softmax(x * fit.weights) - onehot) / nn).norm();
    fit.converged = fit.grad_norm < options.tolerance;
  }
  fit.accuracy = accuracy(x * fit.weights, labels);
  return fit;
}

GapReport decompose_gap(const GprModel& model, const Dataset& source, const Dataset& target,
                        const ProbeOptions& options) {
  source.validate();
  target.validate();
  detail::require(options.max_iterations >= 1 && options.tolerance > 0.0,
                  "decompose_gap: bad probe options");
  GapReport r;
  r.probe = options;
  r.source_accuracy = evaluate(model, source, source.mask("test"));

  const PropagationOperator op(target.graph, model.mode);
  const HopCache hops = featurize_hops(model, target, op);
  const Matrix z = aggregate(hops, model.gamma);
  r.target_accuracy = accuracy(classify(z, model).logits, target.labels);

  const ProbeFit fit = fit_linear_probe(z, target.labels, model.num_classes(), options);
  r.probe_accuracy = fit.accuracy;
  r.probe_iterations = fit.iterations;
  r.probe_grad_norm = fit.grad_norm;
  r.probe_converged = fit.converged;
  r.best_target_accuracy = std::max(r.probe_accuracy, r.target_accuracy);
  r.delta_f = r.source_accuracy - r.best_target_accuracy;
  r.delta_g = r.best_target_accuracy - r.target_accuracy;
  return r;
}

Json to_json(const GapReport& r) {
  return Json{{"source_accuracy", r.source_accuracy},
              {"target_accuracy", r.target_accuracy},
              {"probe_accuracy", r.probe_accuracy},
              {"best_target_accuracy", r.best_target_accuracy},
              {"delta_f", r.delta_f},
              {"delta_g", r.delta_g},
              {"probe",
               Json{{"max_iterations", r.probe.max_iterations},
                    {"tolerance", r.probe.tolerance},
                    {"iterations", r.probe_iterations},
                    {"grad_norm", r.probe_grad_norm},
                    {"converged", r.probe_converged}}}};
}

BenchReport bench(const ExperimentConfig& config, int repetitions, ModelCache* cache) {
  config.validate();
  if (repetitions < 1) throw ConfigError("bench: repetitions must be >= 1");
  ModelCache local;
  if (cache == nullptr) cache = &local;
  const std::uint64_t seed = config.seeds.front();
  const csbm::Scenario s = scenario_for(config, seed);
  const Dataset source = csbm::generate(s.source);
  const Dataset target = csbm::generate(s.target);
  const GprModel& model = cache->get(s.source, source, config, seed).model;
  const AdaptConfig adapt_cfg = adapt_config_for(config, parse_method("erm+adarc"));

  std::vector<double> initial, forward, loss, backward, update, total, cached, cold;
  BenchReport r;
  r.repetitions = repetitions;
  r.epochs = adapt_cfg.epochs;
  for (int rep = 0; rep < repetitions; ++rep) {
    const AdaptResult res = adapt(model, target, adapt_cfg);
    initial.push_back(res.trace.initial_inference_seconds);
    StageSeconds mean;
    for (const StageSeconds& st : res.trace.stage_seconds) {
      mean.forward += st.forward;
      mean.loss += st.loss;
      mean.backward += st.backward;
      mean.update += st.update;
    }
    const double t = static_cast<double>(res.trace.stage_seconds.size());
    forward.push_back(mean.forward / t);
    loss.push_back(mean.loss / t);
    backward.push_back(mean.backward / t);
    update.push_back(mean.update / t);
    total.push_back(mean.total() / t);
    r.propagate_calls = res.trace.propagate_calls;

    const PropagationOperator op(target.graph, model.mode);
    auto t0 = Clock::now();
    const HopCache hops = featurize_hops(model, target, op);
    Matrix z = aggregate(hops, model.gamma);
    cold.push_back(seconds_since(t0));
    t0 = Clock::now();
    z = aggregate(hops, res.model.gamma);
    cached.push_back(seconds_since(t0));
  }
  r.initial_inference = median(initial);
  r.epoch_stages = {median(forward), median(loss), median(backward), median(update)};
  r.epoch_total = median(total);
  r.cached_forward = median(cached);
  r.cold_forward = median(cold);
  return r;
}

Json to_json(const BenchReport& r) {
  return Json{{"repetitions", r.repetitions},
              {"epochs", r.epochs},
              {"propagate_calls", r.propagate_calls},
              {"initial_inference_seconds", r.initial_inference},
              {"epoch_seconds", seconds_json(r.epoch_stages)},
              {"epoch_median_total_seconds", r.epoch_total},
              {"epoch_to_initial_ratio", r.epoch_to_initial_ratio()},
              {"cached_forward_seconds", r.cached_forward},
              {"cold_forward_seconds", r.cold_forward}};
}

void write_json(const Json& json, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  out << json.dump(2) << '\n';
}

}  // namespace adarc::harness
