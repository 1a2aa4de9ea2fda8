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

#include "adarc/csbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "adarc/rng.hpp"

namespace adarc::csbm {

namespace {

enum Stream : std::uint64_t {
  kPermutation = 1,
  kEdges = 2,
  kFeatures = 3,
  kMasks = 4,
};

// k distinct values from [0, m), ascending. Floyd's algorithm; switches to
// the complement when k is more than half of m.
std::vector<std::int64_t> sample_distinct(std::int64_t m, std::int64_t k, Rng& rng) {
  if (k <= 0) return {};
  if (k >= m) {
    std::vector<std::int64_t> all(static_cast<std::size_t>(m));
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  const bool complement = k > m / 2;
  const std::int64_t draw = complement ? m - k : k;
  std::unordered_set<std::int64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(draw) * 2);
  for (std::int64_t j = m - draw; j < m; ++j) {
    std::uniform_int_distribution<std::int64_t> pick(0, j);
    const std::int64_t t = pick(rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::int64_t> out;
  if (complement) {
    out.reserve(static_cast<std::size_t>(k));
    for (std::int64_t v = 0; v < m; ++v)
      if (!chosen.contains(v)) out.push_back(v);
  } else {
    out.assign(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end());
  }
  return out;
}

// Maps a linear index over unordered pairs {i < j} of [0, m) to the pair,
// enumerating (0,1), (0,2), (1,2), (0,3), ...
std::pair<std::int64_t, std::int64_t> unrank_pair(std::int64_t idx) {
  auto j = static_cast<std::int64_t>((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(idx))) / 2.0);
  while (j * (j - 1) / 2 > idx) --j;
  while ((j + 1) * j / 2 <= idx) ++j;
  return {idx - j * (j - 1) / 2, j};
}

// Bernoulli(prob) over `pairs` candidate pairs, as a binomial count followed
// by uniform selection without replacement.
std::vector<std::int64_t> sample_pairs(std::int64_t pairs, double prob, Rng& rng) {
  if (pairs <= 0 || prob <= 0.0) return {};
  std::binomial_distribution<std::int64_t> count(pairs, std::min(prob, 1.0));
  return sample_distinct(pairs, count(rng), rng);
}

}  // namespace

void CsbmParams::validate() const {
  detail::require(n >= 2 && n % 2 == 0, "csbm: n must be even and >= 2");
  detail::require(dim >= 1, "csbm: dim must be positive");
  detail::require(mu.size() == dim, "csbm: mu has wrong dimension");
  detail::require(delta_mu.size() == 0 || delta_mu.size() == dim,
                  "csbm: delta_mu has wrong dimension");
  detail::require(avg_degree >= 0.0, "csbm: avg_degree must be non-negative");
  detail::require(homophily >= 0.0 && homophily <= 1.0, "csbm: homophily outside [0,1]");
  detail::require(noise_std >= 0.0, "csbm: noise_std must be non-negative");
  detail::require(train_fraction >= 0.0 && val_fraction >= 0.0 &&
                      train_fraction + val_fraction <= 1.0,
                  "csbm: invalid split fractions");
  edge_probs(*this);
}

EdgeProbs edge_probs(const CsbmParams& params) {
  detail::require(params.n > 0, "edge_probs: n must be positive");
  const double n = params.n;
  EdgeProbs probs{2.0 * params.avg_degree * params.homophily / n,
                  2.0 * params.avg_degree * (1.0 - params.homophily) / n};
  if (!(probs.p >= 0.0 && probs.p <= 1.0 && probs.q >= 0.0 && probs.q <= 1.0)) {
    throw InvalidArgument("edge_probs: infeasible density (p=" + std::to_string(probs.p) +
                          ", q=" + std::to_string(probs.q) + ")");
  }
  return probs;
}

Dataset generate(const CsbmParams& params) {
  params.validate();
  const EdgeProbs probs = edge_probs(params);
  const std::int64_t half = params.n / 2;

  // Canonical node c belongs to class 0 iff c < n/2; it becomes node perm[c].
  std::vector<NodeId> perm(static_cast<std::size_t>(params.n));
  std::iota(perm.begin(), perm.end(), 0);
  {
    Rng rng = make_rng(params.seed, kPermutation);
    std::shuffle(perm.begin(), perm.end(), rng);
  }

  std::vector<Edge> edges;
  {
    Rng rng = make_rng(params.seed, kEdges);
    const std::int64_t within = half * (half - 1) / 2;
    for (std::int64_t block = 0; block < 2; ++block) {
      for (std::int64_t idx : sample_pairs(within, probs.p, rng)) {
        auto [i, j] = unrank_pair(idx);
        edges.push_back({perm[block * half + i], perm[block * half + j]});
      }
    }
    for (std::int64_t idx : sample_pairs(half * half, probs.q, rng)) {
      edges.push_back({perm[idx / half], perm[half + idx % half]});
    }
  }

  Dataset ds;
  ds.num_classes = 2;
  ds.graph = build_graph(edges, params.n);
  ds.labels.resize(params.n);
  for (std::int64_t c = 0; c < params.n; ++c) ds.labels[perm[c]] = c < half ? 0 : 1;

  const Vector shift = params.delta_mu.size() ? params.delta_mu : Vector::Zero(params.dim);
  const Vector center_pos = params.mu + shift;
  const Vector center_neg = -params.mu + shift;
  ds.features.resize(params.n, params.dim);
  {
    Rng rng = make_rng(params.seed, kFeatures);
    std::normal_distribution<double> normal(0.0, 1.0);
    // Row-major draw order so the stream does not depend on storage layout.
    for (NodeId i = 0; i < params.n; ++i) {
      const Vector& center = ds.labels[i] == 0 ? center_pos : center_neg;
      for (int k = 0; k < params.dim; ++k) {
        ds.features(i, k) = center[k] + params.noise_std * normal(rng);
      }
    }
  }
  round_features_to_f32(ds.features);

  if (params.train_fraction > 0.0 || params.val_fraction > 0.0) {
    std::vector<NodeId> order(static_cast<std::size_t>(params.n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(params.seed, kMasks);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::floor(params.train_fraction * params.n));
    const auto n_val = static_cast<std::size_t>(std::floor(params.val_fraction * params.n));
    Mask train(order.size(), false), val(order.size(), false), test(order.size(), false);
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (r < n_train) {
        train[order[r]] = true;
      } else if (r < n_train + n_val) {
        val[order[r]] = true;
      } else {
        test[order[r]] = true;
      }
    }
    ds.masks["train"] = std::move(train);
    ds.masks["val"] = std::move(val);
    ds.masks["test"] = std::move(test);
  }
  ds.validate();
  return ds;
}

Dataset drop_homophilic_edges(const Dataset& dataset, double fraction, std::uint64_t seed) {
  detail::require(fraction >= 0.0 && fraction <= 1.0,
                  "drop_homophilic_edges: fraction outside [0,1]");
  dataset.validate();
  std::vector<Edge> kept;
  std::vector<Edge> same;
  for (const Edge& e : dataset.graph.edges()) {
    (dataset.labels[e.u] == dataset.labels[e.v] ? same : kept).push_back(e);
  }
  const auto drop = static_cast<std::int64_t>(std::floor(fraction * static_cast<double>(same.size())));
  Rng rng = make_rng(seed, 0);
  std::vector<bool> dropped(same.size(), false);
  for (std::int64_t idx : sample_distinct(static_cast<std::int64_t>(same.size()), drop, rng)) {
    dropped[static_cast<std::size_t>(idx)] = true;
  }
  for (std::size_t i = 0; i < same.size(); ++i)
    if (!dropped[i]) kept.push_back(same[i]);
  return with_graph(dataset, build_graph(kept, dataset.num_nodes()));
}

Vector constant_vector(int dim, double value) { return Vector::Constant(dim, value); }

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "homo2hetero",      "hetero2homo",      "high2low",      "low2high",
      "homo2hetero+attr", "hetero2homo+attr", "high2low+attr", "low2high+attr",
      "attr"};
  return names;
}

Scenario make_scenario(const std::string& name, std::uint64_t seed, const PresetOptions& options) {
  std::string base = name;
  bool attribute_shift = false;
  if (base.size() > 5 && base.ends_with("+attr")) {
    base.resize(base.size() - 5);
    attribute_shift = true;
  }

  double d_src = 5.0, h_src = 0.8, d_tgt = 5.0, h_tgt = 0.8;
  if (base == "homo2hetero") {
    h_tgt = 0.2;
  } else if (base == "hetero2homo") {
    h_src = 0.2;
  } else if (base == "high2low") {
    d_src = 10.0;
    d_tgt = 2.0;
  } else if (base == "low2high") {
    d_src = 2.0;
    d_tgt = 10.0;
  } else if (base == "attr" && !attribute_shift) {
    attribute_shift = true;
  } else {
    throw ConfigError("unknown scenario '" + name + "'");
  }

  const double root_dim = std::sqrt(static_cast<double>(options.dim));
  CsbmParams common;
  common.n = options.n;
  common.dim = options.dim;
  common.mu = constant_vector(options.dim, options.mu_scale / root_dim);
  common.noise_std = options.noise_scale / root_dim;

  Scenario s;
  s.name = name;
  s.source = common;
  s.source.avg_degree = d_src;
  s.source.homophily = h_src;
  s.source.train_fraction = options.train_fraction;
  s.source.val_fraction = options.val_fraction;
  s.source.seed = derive_seed(seed, 101);

  s.target = common;
  s.target.avg_degree = d_tgt;
  s.target.homophily = h_tgt;
  s.target.seed = derive_seed(seed, 202);
  if (attribute_shift) {
    s.target.delta_mu = constant_vector(options.dim, options.delta_mu_scale / root_dim);
  }
  s.source.validate();
  s.target.validate();
  return s;
}

}  // namespace adarc::csbm
