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

#include "adarc/model.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "adarc/binary_io.hpp"
#include "adarc/rng.hpp"

namespace adarc {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void value(const T& v) {
    bytes(&v, sizeof(T));
  }
  template <typename Derived>
  void array(const Eigen::DenseBase<Derived>& m) {
    value(m.rows());
    value(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) value(static_cast<double>(m(r, c)));
  }
  std::uint64_t digest() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

// Everything the cache depends on except the BN affine parameters.
std::uint64_t base_fingerprint(const GprModel& model, const Graph& graph) {
  Fnv1a h;
  h.array(model.w1);
  h.array(model.b1);
  h.value(static_cast<int>(model.mode));
  h.value(model.freeze_norm_stats);
  if (model.freeze_norm_stats) {
    h.array(model.bn_mean);
    h.array(model.bn_var);
  }
  const auto offsets = graph.row_offsets();
  const auto nbrs = graph.neighbor_ids();
  h.bytes(offsets.data(), offsets.size_bytes());
  h.bytes(nbrs.data(), nbrs.size_bytes());
  return h.digest();
}

std::uint64_t full_fingerprint(std::uint64_t base, const GprModel& model) {
  Fnv1a h;
  h.value(base);
  h.array(model.bn_scale);
  h.array(model.bn_shift);
  return h.digest();
}

void glorot(Matrix& w, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
}

void materialize(const std::vector<Matrix>& base, const Vector& scale, const Vector& shift,
                 std::vector<Matrix>& hops) {
  const Eigen::Index h = scale.size();
  hops.resize(base.size());
  for (std::size_t k = 0; k < base.size(); ++k) {
    hops[k] = base[k].leftCols(h) * scale.asDiagonal();
    hops[k].noalias() += base[k].col(h) * shift.transpose();
  }
}

template <typename Derived>
void round_to_f32(Eigen::MatrixBase<Derived>& m) {
  m = m.template cast<float>().template cast<double>();
}

}  // namespace

void GprModel::validate() const {
  const Eigen::Index h = w1.cols();
  detail::require(w1.rows() >= 1 && h >= 1, "model: empty featurizer");
  detail::require(b1.size() == h && bn_scale.size() == h && bn_shift.size() == h &&
                      bn_mean.size() == h && bn_var.size() == h,
                  "model: featurizer vectors must have hidden_dim entries");
  detail::require(gamma.size() >= 1, "model: gamma must have K+1 >= 1 entries");
  detail::require(w_cls.rows() == h && w_cls.cols() >= 1, "model: classifier shape mismatch");
  detail::require(b_cls.size() == w_cls.cols(), "model: classifier bias shape mismatch");
}

GprModel init_model(const ModelShape& shape, std::uint64_t seed, double pagerank_alpha) {
  detail::require(shape.input_dim >= 1 && shape.hidden_dim >= 1 && shape.num_classes >= 1 &&
                      shape.hops >= 0,
                  "init_model: invalid shape");
  GprModel m;
  m.w1.resize(shape.input_dim, shape.hidden_dim);
  m.w_cls.resize(shape.hidden_dim, shape.num_classes);
  {
    Rng rng = make_rng(seed, 1);
    glorot(m.w1, rng);
  }
  {
    Rng rng = make_rng(seed, 2);
    glorot(m.w_cls, rng);
  }
  m.b1 = Vector::Zero(shape.hidden_dim);
  m.bn_scale = Vector::Ones(shape.hidden_dim);
  m.bn_shift = Vector::Zero(shape.hidden_dim);
  m.bn_mean = Vector::Zero(shape.hidden_dim);
  m.bn_var = Vector::Ones(shape.hidden_dim);
  m.gamma.resize(shape.hops + 1);
  for (int k = 0; k <= shape.hops; ++k)
    m.gamma[k] = pagerank_alpha * std::pow(1.0 - pagerank_alpha, k);
  m.b_cls = Vector::Zero(shape.num_classes);
  return m;
}

void round_parameters_to_f32(GprModel& m) {
  round_to_f32(m.w1);
  round_to_f32(m.b1);
  round_to_f32(m.bn_scale);
  round_to_f32(m.bn_shift);
  round_to_f32(m.bn_mean);
  round_to_f32(m.bn_var);
  round_to_f32(m.gamma);
  round_to_f32(m.w_cls);
  round_to_f32(m.b_cls);
}

void save_checkpoint(const GprModel& m, const std::filesystem::path& path) {
  m.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  out.write("ADRCM", 5);
  binary::write_u32(out, kCheckpointVersion);
  binary::write_u32(out, static_cast<std::uint32_t>(m.input_dim()));
  binary::write_u32(out, static_cast<std::uint32_t>(m.hidden_dim()));
  binary::write_u32(out, static_cast<std::uint32_t>(m.num_classes()));
  binary::write_u32(out, static_cast<std::uint32_t>(m.hops()));
  binary::write_f32_rowmajor(out, m.w1);
  binary::write_f32_rowmajor(out, m.b1.transpose());
  binary::write_f32_rowmajor(out, m.bn_scale.transpose());
  binary::write_f32_rowmajor(out, m.bn_shift.transpose());
  binary::write_f32_rowmajor(out, m.bn_mean.transpose());
  binary::write_f32_rowmajor(out, m.bn_var.transpose());
  binary::write_f32_rowmajor(out, m.gamma.transpose());
  binary::write_f32_rowmajor(out, m.w_cls);
  binary::write_f32_rowmajor(out, m.b_cls.transpose());
  if (!out) throw InvalidArgument("failed writing " + path.string());
}

GprModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open checkpoint " + path.string());
  const std::string what = "checkpoint " + path.string();
  binary::expect_magic(in, "ADRCM", what);
  const std::uint32_t version = binary::read_u32(in, what);
  if (version != kCheckpointVersion) {
    throw InvalidArgument(what + ": unsupported version " + std::to_string(version));
  }
  const auto d = static_cast<Eigen::Index>(binary::read_u32(in, what));
  const auto h = static_cast<Eigen::Index>(binary::read_u32(in, what));
  const auto c = static_cast<Eigen::Index>(binary::read_u32(in, what));
  const auto k = static_cast<Eigen::Index>(binary::read_u32(in, what));
  detail::require(d >= 1 && h >= 1 && c >= 1 && d <= (1 << 24) && h <= (1 << 16) &&
                      c <= (1 << 16) && k <= (1 << 16),
                  what + ": implausible dimensions");
  GprModel m;
  auto read_vec = [&](Vector& v, Eigen::Index n) {
    v.resize(n);
    Eigen::Map<Eigen::RowVectorXd> row(v.data(), n);
    binary::read_f32_rowmajor(in, row, what);
  };
  m.w1.resize(d, h);
  binary::read_f32_rowmajor(in, m.w1, what);
  read_vec(m.b1, h);
  read_vec(m.bn_scale, h);
  read_vec(m.bn_shift, h);
  read_vec(m.bn_mean, h);
  read_vec(m.bn_var, h);
  read_vec(m.gamma, k + 1);
  m.w_cls.resize(h, c);
  binary::read_f32_rowmajor(in, m.w_cls, what);
  read_vec(m.b_cls, c);
  if (in.peek() != std::char_traits<char>::eof()) {
    throw InvalidArgument(what + ": trailing bytes");
  }
  m.validate();
  return m;
}

std::uint64_t featurizer_fingerprint(const GprModel& model, const Graph& graph) {
  return full_fingerprint(base_fingerprint(model, graph), model);
}

HopCache featurize_hops(const GprModel& model, const Dataset& dataset,
                        const PropagationOperator& op) {
  model.validate();
  detail::require(dataset.feature_dim() == model.input_dim(),
                  "featurize_hops: feature dimension does not match the model");
  detail::require(dataset.features.rows() == dataset.num_nodes(),
                  "featurize_hops: feature rows do not match the graph");
  detail::require(&op.graph() == &dataset.graph || op.graph() == dataset.graph,
                  "featurize_hops: operator built for a different graph");
  const Eigen::Index n = dataset.features.rows();
  const Eigen::Index h = model.hidden_dim();

  HopCache cache;
  Matrix u = dataset.features * model.w1;
  u.rowwise() += model.b1.transpose();
  cache.batch_stats_ = !model.freeze_norm_stats;
  if (cache.batch_stats_) {
    detail::require(n >= 1, "featurize_hops: empty graph");
    cache.mean_ = u.colwise().mean().transpose();
    u.rowwise() -= cache.mean_.transpose();
    cache.var_ = u.colwise().squaredNorm().transpose() / static_cast<double>(n);
  } else {
    cache.mean_ = model.bn_mean;
    cache.var_ = model.bn_var;
    u.rowwise() -= cache.mean_.transpose();
  }
  cache.inv_std_ = (cache.var_.array() + kBatchNormEps).rsqrt().matrix();
  u = u * cache.inv_std_.asDiagonal();
  cache.normalized_ = std::move(u);

  Matrix aug(n, h + 1);
  aug.leftCols(h) = cache.normalized_;
  aug.col(h).setOnes();
  cache.base_hops_.reserve(static_cast<std::size_t>(model.hops()) + 1);
  cache.base_hops_.push_back(std::move(aug));
  for (int k = 1; k <= model.hops(); ++k) {
    cache.base_hops_.push_back(propagate(op, cache.base_hops_.back()));
  }
  materialize(cache.base_hops_, model.bn_scale, model.bn_shift, cache.hops_);
  cache.base_fingerprint_ = base_fingerprint(model, dataset.graph);
  cache.fingerprint_ = full_fingerprint(cache.base_fingerprint_, model);
  return cache;
}

void refresh_hops(HopCache& cache, const GprModel& model, const Graph& graph) {
  detail::require(base_fingerprint(model, graph) == cache.base_fingerprint_,
                  "refresh_hops: featurizer weights or graph changed; rebuild the cache");
  detail::require(model.hops() == cache.hops(), "refresh_hops: hop count changed");
  materialize(cache.base_hops_, model.bn_scale, model.bn_shift, cache.hops_);
  cache.fingerprint_ = full_fingerprint(cache.base_fingerprint_, model);
}

void check_fresh(const HopCache& cache, const GprModel& model, const Graph& graph) {
  detail::require(cache.hops() == model.hops() && cache.width() == model.hidden_dim(),
                  "stale hop cache: shape does not match the model");
  detail::require(featurizer_fingerprint(model, graph) == cache.fingerprint(),
                  "stale hop cache: featurizer or graph changed since it was built");
}

Matrix aggregate(const HopCache& cache, const Vector& gamma) {
  detail::require(gamma.size() == cache.hops() + 1,
                  "aggregate: gamma length must equal K+1");
  Matrix z = gamma[0] * cache.hop(0);
  for (int k = 1; k <= cache.hops(); ++k) z.noalias() += gamma[k] * cache.hop(k);
  return z;
}

Matrix row_softmax(const Matrix& logits) {
  Matrix p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp().matrix();
  const Vector sums = p.rowwise().sum();
  return sums.cwiseInverse().asDiagonal() * p;
}

Classification classify(const Matrix& z, const GprModel& model) {
  detail::require(z.cols() == model.w_cls.rows(), "classify: representation width mismatch");
  Classification out;
  out.logits = z * model.w_cls;
  out.logits.rowwise() += model.b_cls.transpose();
  out.prediction.probs = row_softmax(out.logits);
  return out;
}

Eigen::VectorXi argmax_rows(const Matrix& m) {
  Eigen::VectorXi out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < m.cols(); ++c)
      if (m(i, c) > m(i, best)) best = c;
    out[i] = static_cast<int>(best);
  }
  return out;
}

double ModelGradients::squared_norm() const {
  return w1.squaredNorm() + b1.squaredNorm() + bn_scale.squaredNorm() +
         bn_shift.squaredNorm() + gamma.squaredNorm() + w_cls.squaredNorm() +
         b_cls.squaredNorm();
}

Vector gamma_gradient(const HopCache& cache, const Matrix& dz) {
  Vector g(cache.hops() + 1);
  for (int k = 0; k <= cache.hops(); ++k) g[k] = cache.hop(k).cwiseProduct(dz).sum();
  return g;
}

ModelGradients backward_from_z(const GprModel& model, const HopCache& cache,
                               const Dataset& dataset, const PropagationOperator& op,
                               const Matrix& dz) {
  detail::require(dz.rows() == cache.num_nodes() && dz.cols() == cache.width(),
                  "backward: dZ shape mismatch");
  const auto n = static_cast<double>(cache.num_nodes());
  ModelGradients g;
  g.gamma = gamma_gradient(cache, dz);
  g.w_cls = Matrix::Zero(model.w_cls.rows(), model.w_cls.cols());
  g.b_cls = Vector::Zero(model.b_cls.size());

  // dH0 = sum_k gamma_k (Ãᵀ)^k dZ, by Horner's rule.
  const int K = model.hops();
  Matrix dh0 = model.gamma[K] * dz;
  for (int k = K - 1; k >= 0; --k) {
    dh0 = propagate_transpose(op, dh0);
    dh0.noalias() += model.gamma[k] * dz;
  }

  const Matrix& xhat = cache.normalized();
  g.bn_scale = dh0.cwiseProduct(xhat).colwise().sum().transpose();
  g.bn_shift = dh0.colwise().sum().transpose();
  const Matrix dxhat = dh0 * model.bn_scale.asDiagonal();
  Matrix du;
  if (cache.batch_stats()) {
    const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
    const Eigen::RowVectorXd sum_dxhat_xhat = dxhat.cwiseProduct(xhat).colwise().sum();
    du = n * dxhat;
    du.rowwise() -= sum_dxhat;
    du -= xhat * sum_dxhat_xhat.asDiagonal();
    du = du * (cache.inv_std() / n).asDiagonal();
  } else {
    du = dxhat * cache.inv_std().asDiagonal();
  }
  g.w1.noalias() = dataset.features.transpose() * du;
  g.b1 = du.colwise().sum().transpose();
  return g;
}

ModelGradients backward_from_logits(const GprModel& model, const HopCache& cache,
                                    const Dataset& dataset, const PropagationOperator& op,
                                    const Matrix& z, const Matrix& dlogits) {
  detail::require(dlogits.rows() == z.rows() && dlogits.cols() == model.num_classes(),
                  "backward: dlogits shape mismatch");
  const Matrix dz = dlogits * model.w_cls.transpose();
  ModelGradients g = backward_from_z(model, cache, dataset, op, dz);
  g.w_cls.noalias() = z.transpose() * dlogits;
  g.b_cls = dlogits.colwise().sum().transpose();
  return g;
}

CrossEntropyResult backward_ce(const GprModel& model, const Dataset& dataset,
                               const HopCache& cache, const PropagationOperator& op,
                               const Mask* mask) {
  check_fresh(cache, model, dataset.graph);
  const Eigen::Index n = dataset.num_nodes();
  detail::require(mask == nullptr || static_cast<Eigen::Index>(mask->size()) == n,
                  "backward_ce: mask length mismatch");
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < n; ++i) count += (mask == nullptr || (*mask)[i]) ? 1 : 0;
  detail::require(count > 0, "backward_ce: empty mask");

  const Matrix z = aggregate(cache, model.gamma);
  const Classification cls = classify(z, model);
  Matrix dlogits = Matrix::Zero(n, model.num_classes());
  const double inv = 1.0 / static_cast<double>(count);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mask != nullptr && !(*mask)[i]) continue;
    const int y = dataset.labels[i];
    const double top = cls.logits.row(i).maxCoeff();
    const double lse = top + std::log((cls.logits.row(i).array() - top).exp().sum());
    loss += lse - cls.logits(i, y);
    dlogits.row(i) = inv * cls.prediction.probs.row(i);
    dlogits(i, y) -= inv;
  }
  CrossEntropyResult out;
  out.loss = loss * inv;
  out.grads = backward_from_logits(model, cache, dataset, op, z, dlogits);
  return out;
}

}  // namespace adarc
