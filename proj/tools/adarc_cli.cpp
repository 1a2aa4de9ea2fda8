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

// Command-line front end: data generation, pretraining, adaptation,
// evaluation and the experiment harness.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adarc/adapt.hpp"
#include "adarc/csbm.hpp"
#include "adarc/dataset.hpp"
#include "adarc/harness.hpp"
#include "adarc/report_format.hpp"
#include "adarc/rng.hpp"
#include "adarc/theory.hpp"
#include "adarc/train.hpp"

namespace {

using adarc::harness::ExperimentConfig;
using adarc::harness::Json;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Globals {
  std::uint64_t seed = 1;
  std::string out;
  std::string config_path;
};

// Config file first, then explicit flags. Returns the merged config.
ExperimentConfig load_config(const Globals& g,
                             const std::vector<std::pair<std::string, std::string>>& flags) {
  ExperimentConfig c;
  if (!g.config_path.empty()) adarc::harness::apply_config_file(c, g.config_path);
  for (const auto& [k, v] : flags) adarc::harness::apply_setting(c, k, v);
  c.validate();
  return c;
}

void require_out(const Globals& g, const char* what) {
  if (g.out.empty()) throw adarc::ConfigError(std::string(what) + ": --out is required");
}

std::vector<double> parse_reals(const std::string& list) {
  std::vector<double> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw adarc::ConfigError("bad number '" + item + "'");
    }
  }
  if (out.empty()) throw adarc::ConfigError("empty number list");
  return out;
}

void write_predictions(const adarc::SoftPrediction& p, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw adarc::InvalidArgument("cannot open " + path + " for writing");
  const Eigen::VectorXi pred = adarc::argmax_rows(p.probs);
  out << "node,prediction";
  for (Eigen::Index c = 0; c < p.probs.cols(); ++c) out << ",prob_" << c;
  out << '\n';
  for (Eigen::Index i = 0; i < p.probs.rows(); ++i) {
    out << i << ',' << pred[i];
    for (Eigen::Index c = 0; c < p.probs.cols(); ++c) out << ',' << adarc::format_real(p.probs(i, c));
    out << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph test-time adaptation of hop-aggregation weights"};
  app.require_subcommand(1);
  app.footer(adarc::harness::config_keys_help());
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->default_val(1);
  app.add_option("--out", g.out, "Output file or directory");
  app.add_option("--config", g.config_path, "key = value config file")->check(CLI::ExistingFile);

  // Flags that map onto config keys; filled only when given.
  std::vector<std::pair<std::string, std::string>> flags;
  auto config_flag = [&flags](CLI::App* sub, const std::string& name, const std::string& key,
                              const std::string& help) {
    sub->add_option_function<std::string>(
        name, [&flags, key](const std::string& v) { flags.emplace_back(key, v); }, help);
  };

  // generate
  auto* gen = app.add_subcommand("generate", "Write a CSBM source/target pair as dataset dirs");
  config_flag(gen, "--scenario", "scenario", "Scenario preset");

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "Train a model on a labeled source dataset");
  std::string pre_data, pre_history;
  pre->add_option("--data", pre_data, "Dataset directory")->required();
  pre->add_option("--history", pre_history, "Training history CSV");

  // adapt
  auto* ada = app.add_subcommand("adapt", "Adapt hop-aggregation weights on a target dataset");
  std::string ada_ckpt, ada_data, ada_trace, ada_predictions, ada_ablation = "gamma";
  bool ada_persist = false;
  ada->add_option("--ckpt", ada_ckpt, "Pretrained checkpoint")->required();
  ada->add_option("--data", ada_data, "Target dataset directory")->required();
  std::string ada_base = "erm";
  ada->add_option("--base-tta", ada_base, "erm | tent | t3a");
  config_flag(ada, "--loss", "adapt.loss", "pic | entropy | pseudo | diff");
  config_flag(ada, "--lr", "adapt.learning_rate", "Step size on gamma");
  config_flag(ada, "--epochs", "adapt.epochs", "Adaptation epochs");
  ada->add_option("--trace", ada_trace, "Per-epoch trace CSV");
  ada->add_option("--predictions", ada_predictions, "Final prediction CSV");
  ada->add_option("--ablation", ada_ablation, "gamma | theta | both (experiment mode)");
  ada->add_flag("--persist-base-tta", ada_persist, "Keep TentLite's BN affine parameters");

  // eval
  auto* ev = app.add_subcommand("eval", "Accuracy of a checkpoint on a dataset");
  std::string ev_ckpt, ev_data, ev_mask;
  ev->add_option("--ckpt", ev_ckpt, "Checkpoint")->required();
  ev->add_option("--data", ev_data, "Dataset directory")->required();
  ev->add_option("--mask", ev_mask, "Mask name (all nodes when omitted)");

  // scenario
  auto* sc = app.add_subcommand("scenario", "Pretrain and score methods on a preset over seeds");
  config_flag(sc, "--scenario", "scenario", "Scenario preset");
  config_flag(sc, "--methods", "methods", "Comma list of methods");
  config_flag(sc, "--seeds", "seeds", "Comma list of seeds");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Run a scenario over a grid on one axis");
  std::string sw_axis, sw_grid, sw_csv;
  sw->add_option("--axis", sw_axis, "shift_level | lr_epochs | hops_K | loss_kind")->required();
  sw->add_option("--grid", sw_grid, "Comma list of grid values")->required();
  sw->add_option("--csv", sw_csv, "Also write a CSV summary");
  config_flag(sw, "--scenario", "scenario", "Scenario preset");
  config_flag(sw, "--methods", "methods", "Comma list of methods");
  config_flag(sw, "--seeds", "seeds", "Comma list of seeds");

  // decompose
  auto* dec = app.add_subcommand("decompose", "Split the accuracy gap into representation and classifier terms");
  std::string dec_ckpt, dec_source, dec_target;
  dec->add_option("--ckpt", dec_ckpt, "Checkpoint (with --source and --target)");
  dec->add_option("--source", dec_source, "Source dataset directory");
  dec->add_option("--target", dec_target, "Target dataset directory");
  config_flag(dec, "--scenario", "scenario", "Preset to generate and pretrain when no --ckpt");

  // bench
  auto* be = app.add_subcommand("bench", "Time initial inference and adaptation stages");
  int be_reps = 20;
  be->add_option("--reps", be_reps, "Repetitions")->default_val(20);
  config_flag(be, "--scenario", "scenario", "Scenario preset");

  // theory
  auto* th = app.add_subcommand("theory", "Closed-form vs Monte-Carlo accuracy grid (CSV)");
  std::string th_d = "2,5,10", th_h = "0.2,0.5,0.8";
  double th_gmin = -2.0, th_gmax = 2.0, th_mu = 1.0;
  int th_steps = 9;
  std::int64_t th_trials = 20000;
  th->add_option("--degree", th_d, "Comma list of average degrees");
  th->add_option("--homophily", th_h, "Comma list of homophily values");
  th->add_option("--gamma-min", th_gmin, "Smallest gamma");
  th->add_option("--gamma-max", th_gmax, "Largest gamma");
  th->add_option("--gamma-steps", th_steps, "Gamma grid points")->check(CLI::PositiveNumber);
  th->add_option("--mu-norm", th_mu, "Class-center norm");
  th->add_option("--trials", th_trials, "Monte-Carlo trials per point")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) {
      require_out(g, "generate");
      const ExperimentConfig c = load_config(g, flags);
      const adarc::csbm::Scenario s = adarc::harness::scenario_for(c, g.seed);
      const std::filesystem::path dir = g.out;
      adarc::save_dataset(adarc::csbm::generate(s.source), dir / "source");
      adarc::save_dataset(adarc::csbm::generate(s.target), dir / "target");
      std::cout << "wrote " << (dir / "source").string() << " and " << (dir / "target").string()
                << '\n';
    } else if (*pre) {
      require_out(g, "pretrain");
      const ExperimentConfig c = load_config(g, flags);
      const adarc::Dataset data = adarc::load_dataset(pre_data);
      adarc::TrainConfig train = c.train;
      train.seed = g.seed;
      adarc::GprModel initial = adarc::init_model(
          {static_cast<int>(data.feature_dim()), c.hidden_dim, data.num_classes, c.hops}, g.seed);
      initial.mode = c.normalization;
      const adarc::TrainResult r = adarc::train_source(initial, data, train);
      adarc::save_checkpoint(r.model, g.out);
      if (!pre_history.empty()) adarc::write_history_csv(r.history, pre_history);
      std::cout << "best epoch " << r.best_epoch << ", val accuracy "
                << adarc::format_real(r.best_val_accuracy) << '\n';
    } else if (*ada) {
      const ExperimentConfig c = load_config(g, flags);
      adarc::GprModel model = adarc::load_checkpoint(ada_ckpt);
      model.mode = c.normalization;
      const adarc::Dataset data = adarc::load_dataset(ada_data);
      adarc::harness::Method method = adarc::harness::parse_method(ada_base);
      adarc::AdaptConfig a = adarc::harness::adapt_config_for(c, method);
      a.params = adarc::parse_adapt_params(ada_ablation);
      a.persist_base_tta = ada_persist;
      a.track_accuracy = true;
      const adarc::AdaptResult r = adarc::adapt(model, data, a);
      if (!ada_trace.empty()) adarc::write_trace_csv(r.trace, ada_trace);
      if (!ada_predictions.empty()) write_predictions(r.prediction, ada_predictions);
      if (!g.out.empty()) adarc::save_checkpoint(r.model, g.out);
      std::cout << "final loss " << adarc::format_real(r.trace.final_loss) << ", accuracy "
                << adarc::format_real(*r.trace.final_accuracy) << '\n';
    } else if (*ev) {
      const ExperimentConfig c = load_config(g, flags);
      adarc::GprModel model = adarc::load_checkpoint(ev_ckpt);
      model.mode = c.normalization;
      const adarc::Dataset data = adarc::load_dataset(ev_data);
      const adarc::Mask* mask = nullptr;
      if (!ev_mask.empty()) {
        mask = data.mask(ev_mask);
        if (mask == nullptr) throw adarc::ConfigError("dataset has no mask '" + ev_mask + "'");
      }
      const double acc = adarc::evaluate(model, data, mask);
      if (!g.out.empty()) {
        adarc::harness::write_json(Json{{"accuracy", acc}, {"mask", ev_mask}}, g.out);
      }
      std::cout << "accuracy " << adarc::format_real(acc) << '\n';
    } else if (*sc) {
      require_out(g, "scenario");
      ExperimentConfig c = load_config(g, flags);
      if (sc->get_option("--seeds")->count() == 0 && app.get_option("--seed")->count() > 0) {
        c.seeds = {g.seed};
      }
      const auto report = adarc::harness::run_scenario(c);
      adarc::harness::write_json(adarc::harness::to_json(report), g.out);
      for (const auto& m : report.methods) {
        std::cout << m.method << " mean " << adarc::format_real(m.mean) << '\n';
      }
    } else if (*sw) {
      require_out(g, "sweep");
      ExperimentConfig c = load_config(g, flags);
      if (sw->get_option("--seeds")->count() == 0 && app.get_option("--seed")->count() > 0) {
        c.seeds = {g.seed};
      }
      const auto axis = adarc::harness::parse_sweep_axis(sw_axis);
      std::vector<std::string> grid;
      std::stringstream in(sw_grid);
      for (std::string item; std::getline(in, item, ',');) grid.push_back(item);
      const auto points = adarc::harness::sweep(axis, grid, c);
      adarc::harness::write_json(adarc::harness::to_json(axis, points), g.out);
      if (!sw_csv.empty()) adarc::harness::write_sweep_csv(axis, points, sw_csv);
      for (const auto& p : points) {
        std::cout << p.value << ':';
        for (const auto& m : p.report.methods)
          std::cout << ' ' << m.method << ' ' << adarc::format_real(m.mean);
        std::cout << '\n';
      }
    } else if (*dec) {
      require_out(g, "decompose");
      const ExperimentConfig c = load_config(g, flags);
      const adarc::harness::ProbeOptions probe{c.probe_max_iterations, c.probe_tolerance};
      adarc::harness::GapReport r;
      if (!dec_ckpt.empty()) {
        if (dec_source.empty() || dec_target.empty()) {
          throw adarc::ConfigError("decompose: --ckpt needs --source and --target");
        }
        adarc::GprModel model = adarc::load_checkpoint(dec_ckpt);
        model.mode = c.normalization;
        r = adarc::harness::decompose_gap(model, adarc::load_dataset(dec_source),
                                          adarc::load_dataset(dec_target), probe);
      } else {
        const adarc::csbm::Scenario s = adarc::harness::scenario_for(c, g.seed);
        const adarc::Dataset source = adarc::csbm::generate(s.source);
        const adarc::Dataset target = adarc::csbm::generate(s.target);
        adarc::harness::ModelCache cache;
        const adarc::GprModel& model = cache.get(s.source, source, c, g.seed).model;
        r = adarc::harness::decompose_gap(model, source, target, probe);
      }
      Json j = adarc::harness::to_json(r);
      j["config"] = adarc::harness::to_json(c);
      j["seed"] = g.seed;
      adarc::harness::write_json(j, g.out);
      std::cout << "delta_f " << adarc::format_real(r.delta_f) << ", delta_g "
                << adarc::format_real(r.delta_g) << '\n';
    } else if (*be) {
      require_out(g, "bench");
      ExperimentConfig c = load_config(g, flags);
      c.seeds = {g.seed};
      const auto r = adarc::harness::bench(c, be_reps);
      Json j = adarc::harness::to_json(r);
      j["config"] = adarc::harness::to_json(c);
      adarc::harness::write_json(j, g.out);
      std::cout << "epoch/initial ratio " << adarc::format_real(r.epoch_to_initial_ratio())
                << '\n';
    } else if (*th) {
      require_out(g, "theory");
      if (!(th_gmax >= th_gmin)) throw adarc::ConfigError("theory: gamma-max < gamma-min");
      const auto ds = parse_reals(th_d);
      const auto hs = parse_reals(th_h);
      std::ofstream out(g.out, std::ios::trunc);
      if (!out) throw adarc::InvalidArgument("cannot open " + g.out + " for writing");
      out << "d,h,gamma,closed_form,monte_carlo\n";
      const adarc::Vector mu = adarc::Vector::Constant(1, th_mu);
      std::uint64_t point = 0;
      for (double d : ds) {
        for (double h : hs) {
          for (int i = 0; i < th_steps; ++i) {
            const double gamma =
                th_steps == 1 ? th_gmin : th_gmin + (th_gmax - th_gmin) * i / (th_steps - 1);
            const adarc::theory::TheoryPoint p{th_mu, d, h, gamma};
            const double mc = adarc::theory::monte_carlo_accuracy(
                p, mu, th_trials, adarc::derive_seed(g.seed, point++));
            out << adarc::format_real(d) << ',' << adarc::format_real(h) << ','
                << adarc::format_real(gamma) << ','
                << adarc::format_real(adarc::theory::closed_form_accuracy(p)) << ','
                << adarc::format_real(mc) << '\n';
          }
        }
      }
      std::cout << "wrote " << g.out << '\n';
    }
  } catch (const adarc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const adarc::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitConfig;
  } catch (const adarc::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
