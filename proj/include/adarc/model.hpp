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

#ifndef ADARC_MODEL_HPP_
#define ADARC_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "adarc/dataset.hpp"
#include "adarc/graph.hpp"
#include "adarc/types.hpp"

namespace adarc {

struct ModelShape {
  int input_dim = 0;
  int hidden_dim = 32;
  int num_classes = 2;
  int hops = 9;  // K
};

/// Linear featurizer + batch normalization, K-hop generalized PageRank
/// aggregation and a linear classifier:
///
///   H0 = BN(X W1 + b1),  Z = sum_k gamma_k Ã^k H0,  logits = Z W_cls + b_cls.
struct GprModel {
  Matrix w1;  // D x H
  Vector b1;  // H
  Vector bn_scale;
  Vector bn_shift;
  // Statistics of X W1 + b1 seen at the last featurize on the source graph.
  // Used only when freeze_norm_stats is set.
  Vector bn_mean;
  Vector bn_var;
  Vector gamma;  // K + 1
  Matrix w_cls;  // H x C
  Vector b_cls;  // C

  // Not part of the checkpoint.
  Normalization mode = Normalization::kSymmetric;
  bool freeze_norm_stats = false;

  int input_dim() const { return static_cast<int>(w1.rows()); }
  int hidden_dim() const { return static_cast<int>(w1.cols()); }
  int num_classes() const { return static_cast<int>(w_cls.cols()); }
  int hops() const { return static_cast<int>(gamma.size()) - 1; }
  ModelShape shape() const { return {input_dim(), hidden_dim(), num_classes(), hops()}; }

  void validate() const;

  friend bool operator==(const GprModel&, const GprModel&) = default;
};

inline constexpr double kBatchNormEps = 1e-5;

/// Glorot-uniform weights, zero biases, unit scale, zero shift and
/// gamma_k = a(1-a)^k.
GprModel init_model(const ModelShape& shape, std::uint64_t seed, double pagerank_alpha = 0.1);

/// Rounds every parameter to the nearest f32, as stored in a checkpoint.
void round_parameters_to_f32(GprModel& model);

// "ADRCM", u32 version = 1, u32 D, H, C, K, then f32 LE arrays in field
// order: w1 (row-major), b1, bn_scale, bn_shift, bn_mean, bn_var, gamma,
// w_cls (row-major), b_cls.
void save_checkpoint(const GprModel& model, const std::filesystem::path& path);
GprModel load_checkpoint(const std::filesystem::path& path);

/// Hash of the featurizer parameters and the graph structure. Any change to
/// either changes the fingerprint (up to hash collisions).
std::uint64_t featurizer_fingerprint(const GprModel& model, const Graph& graph);

/// Per-hop representations [H^(0), ..., H^(K)] for one graph.
///
/// Propagation is linear, so the cache keeps Ã^k X̂ and Ã^k 1 for the
/// normalized pre-activation X̂; hops for new BN scale/shift values are then
/// rebuilt without any sparse products (see refresh_hops).
class HopCache {
 public:
  int hops() const { return static_cast<int>(hops_.size()) - 1; }
  NodeId num_nodes() const { return static_cast<NodeId>(normalized_.rows()); }
  int width() const { return static_cast<int>(normalized_.cols()); }

  const Matrix& hop(int k) const { return hops_[static_cast<std::size_t>(k)]; }
  const std::vector<Matrix>& all_hops() const { return hops_; }
  // Ã^k [X̂ | 1], N x (H+1).
  const Matrix& base_hop(int k) const { return base_hops_[static_cast<std::size_t>(k)]; }
  std::uint64_t fingerprint() const { return fingerprint_; }

  // X̂ = (X W1 + b1 - mean) * inv_std, before scale/shift.
  const Matrix& normalized() const { return normalized_; }
  const Vector& inv_std() const { return inv_std_; }
  const Vector& batch_mean() const { return mean_; }
  const Vector& batch_var() const { return var_; }
  bool batch_stats() const { return batch_stats_; }

 private:
  friend HopCache featurize_hops(const GprModel&, const Dataset&, const PropagationOperator&);
  friend void refresh_hops(HopCache&, const GprModel&, const Graph&);

  std::vector<Matrix> hops_;
  std::vector<Matrix> base_hops_;  // Ã^k [X̂ | 1]
  Matrix normalized_;
  Vector inv_std_;
  Vector mean_;
  Vector var_;
  bool batch_stats_ = true;
  std::uint64_t fingerprint_ = 0;
  std::uint64_t base_fingerprint_ = 0;  // excludes bn_scale / bn_shift
};

/// H^(0) = BN(X W1 + b1), H^(k) = Ã H^(k-1). Exactly K applications of `op`.
HopCache featurize_hops(const GprModel& model, const Dataset& dataset,
                        const PropagationOperator& op);

/// Rebuilds the hops after a change of bn_scale / bn_shift only, without
/// propagation. Throws InvalidArgument if anything else changed.
void refresh_hops(HopCache& cache, const GprModel& model, const Graph& graph);

/// Throws InvalidArgument unless the cache was built from this model's
/// current featurizer on this graph.
void check_fresh(const HopCache& cache, const GprModel& model, const Graph& graph);

/// Z = sum_k gamma_k H^(k).
Matrix aggregate(const HopCache& cache, const Vector& gamma);

struct SoftPrediction {
  Matrix probs;  // N x C, rows sum to 1
};

/// Row softmax with row-max subtraction.
Matrix row_softmax(const Matrix& logits);

struct Classification {
  Matrix logits;
  SoftPrediction prediction;
};

Classification classify(const Matrix& z, const GprModel& model);

/// Argmax per row; ties go to the lowest index.
Eigen::VectorXi argmax_rows(const Matrix& m);

struct ModelGradients {
  Matrix w1;
  Vector b1;
  Vector bn_scale;
  Vector bn_shift;
  Vector gamma;
  Matrix w_cls;
  Vector b_cls;

  double squared_norm() const;
};

/// Gradients of all parameters given dL/dlogits. Uses K transposed
/// propagations for the featurizer path.
ModelGradients backward_from_logits(const GprModel& model, const HopCache& cache,
                                    const Dataset& dataset, const PropagationOperator& op,
                                    const Matrix& z, const Matrix& dlogits);

/// Same, starting from dL/dZ (no classifier contribution).
ModelGradients backward_from_z(const GprModel& model, const HopCache& cache,
                               const Dataset& dataset, const PropagationOperator& op,
                               const Matrix& dz);

/// d/dgamma_k = <H^(k), dZ>.
Vector gamma_gradient(const HopCache& cache, const Matrix& dz);

struct CrossEntropyResult {
  double loss = 0.0;  // mean over masked nodes
  ModelGradients grads;
};

/// Mean cross-entropy over masked nodes (all nodes when mask is null) and
/// its gradients. Throws InvalidArgument on a stale cache or empty mask.
CrossEntropyResult backward_ce(const GprModel& model, const Dataset& dataset,
                               const HopCache& cache, const PropagationOperator& op,
                               const Mask* mask);

}  // namespace adarc

#endif  // ADARC_MODEL_HPP_
