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

#ifndef ADARC_LOSSES_HPP_
#define ADARC_LOSSES_HPP_

#include <cmath>
#include <string>

#include "adarc/model.hpp"
#include "adarc/types.hpp"

// Clustering losses over representations Z (N x H) and a soft assignment
// Yhat (N x C, rows summing to 1). The assignment is always held fixed.
namespace adarc {

template <typename Scalar>
struct PicBreakdownT {
  Scalar loss = 0;
  Scalar sigma_intra_sq = 0;
  Scalar sigma_inter_sq = 0;
  Scalar sigma_sq = 0;
  MatrixX<Scalar> centroids;       // C x H; rows of empty classes are zero
  VectorX<Scalar> class_mass;      // sum_i Yhat_ic
  VectorX<Scalar> global_centroid;  // H
};

using PicBreakdown = PicBreakdownT<double>;

/// Floor on the total variance below which the loss is undefined.
template <typename Scalar>
Scalar degenerate_floor(Eigen::Index n, Eigen::Index h) {
  return Scalar(1e-12) * static_cast<Scalar>(n) * static_cast<Scalar>(h);
}

/// loss = sigma_intra^2 / sigma^2 with
///   sigma_intra^2 = sum_i sum_c Yhat_ic ||z_i - mu_c||^2
///   sigma_inter^2 = sum_c (sum_i Yhat_ic) ||mu_c - mu_*||^2
///   sigma^2       = sum_i ||z_i - mu_*||^2
/// Throws DegenerateRepresentation when sigma^2 < 1e-12 N H.
template <typename DerivedZ, typename DerivedY>
PicBreakdownT<typename DerivedZ::Scalar> pic_loss(const Eigen::MatrixBase<DerivedZ>& z,
                                                  const Eigen::MatrixBase<DerivedY>& yhat) {
  using Scalar = typename DerivedZ::Scalar;
  detail::require(z.rows() == yhat.rows() && z.rows() >= 1, "pic_loss: row count mismatch");
  const Eigen::Index n = z.rows();
  const Eigen::Index h = z.cols();
  const Eigen::Index c = yhat.cols();
  const MatrixX<Scalar> y = yhat.template cast<Scalar>();

  PicBreakdownT<Scalar> out;
  out.global_centroid = z.colwise().mean().transpose();
  out.class_mass = y.colwise().sum().transpose();
  out.centroids = MatrixX<Scalar>::Zero(c, h);
  for (Eigen::Index k = 0; k < c; ++k) {
    if (out.class_mass[k] <= Scalar(0)) continue;
    out.centroids.row(k) = (y.col(k).transpose() * z) / out.class_mass[k];
  }

  out.sigma_sq = (z.rowwise() - out.global_centroid.transpose()).squaredNorm();
  if (!(out.sigma_sq >= degenerate_floor<Scalar>(n, h))) {
    throw DegenerateRepresentation("pic_loss: representations have (near-)zero total variance");
  }
  for (Eigen::Index k = 0; k < c; ++k) {
    if (out.class_mass[k] <= Scalar(0)) continue;
    const VectorX<Scalar> dist =
        (z.rowwise() - out.centroids.row(k)).rowwise().squaredNorm();
    out.sigma_intra_sq += y.col(k).dot(dist);
    out.sigma_inter_sq +=
        out.class_mass[k] * (out.centroids.row(k).transpose() - out.global_centroid).squaredNorm();
  }
  out.loss = out.sigma_intra_sq / out.sigma_sq;
  return out;
}

/// dL/dZ with Yhat fixed:
///   (2 / sigma^2) [ z_i - sum_c Yhat_ic mu_c - L (z_i - mu_*) ].
/// The centroids depend on Z too, but their partial derivatives cancel
/// because each mu_c minimizes its own weighted sum of squares.
template <typename Scalar, typename DerivedY>
MatrixX<Scalar> pic_grad_z(const PicBreakdownT<Scalar>& pic, const MatrixX<Scalar>& z,
                           const Eigen::MatrixBase<DerivedY>& yhat) {
  MatrixX<Scalar> g = z - yhat.template cast<Scalar>() * pic.centroids;
  g -= pic.loss * (z.rowwise() - pic.global_centroid.transpose());
  g *= Scalar(2) / pic.sigma_sq;
  return g;
}

template <typename DerivedZ, typename DerivedY>
MatrixX<typename DerivedZ::Scalar> pic_grad_z(const Eigen::MatrixBase<DerivedZ>& z,
                                              const Eigen::MatrixBase<DerivedY>& yhat) {
  using Scalar = typename DerivedZ::Scalar;
  const MatrixX<Scalar> zz = z;
  return pic_grad_z(pic_loss(zz, yhat), zz, yhat);
}

/// Gradient of L_PIC(Z, softmax(A)) with respect to the logits A, Z fixed:
///   dL/dA_ic = Yhat_ic (g_ic - sum_c' Yhat_ic' g_ic'),  g_ic = ||z_i - mu_c||^2 / sigma^2.
/// Its Frobenius norm is at most 2 L_PIC <= 2.
template <typename Scalar>
MatrixX<Scalar> pic_grad_logits(const MatrixX<Scalar>& z, const MatrixX<Scalar>& logits) {
  MatrixX<Scalar> y = logits.colwise() - logits.rowwise().maxCoeff();
  y = y.array().exp().matrix();
  const VectorX<Scalar> inv_sums = y.rowwise().sum().cwiseInverse();
  y = inv_sums.asDiagonal() * y;
  const PicBreakdownT<Scalar> pic = pic_loss(z, y);
  MatrixX<Scalar> g(z.rows(), y.cols());
  for (Eigen::Index k = 0; k < y.cols(); ++k) {
    g.col(k) = (z.rowwise() - pic.centroids.row(k)).rowwise().squaredNorm() / pic.sigma_sq;
  }
  const VectorX<Scalar> mean_g = y.cwiseProduct(g).rowwise().sum();
  return y.cwiseProduct(g.colwise() - mean_g);
}

enum class LossKind { kPic, kEntropy, kPseudo, kDiff };

const char* to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& name);  // throws ConfigError

struct SurrogateResult {
  double loss = 0.0;
  Matrix grad_z;      // dL/dZ
  Vector grad_gamma;  // dL/dgamma_k = <H^(k), dL/dZ>
};

/// Surrogate value and gradient at Z (already aggregated with the model's
/// gamma):
///   pic      sigma_intra^2 / sigma^2
///   entropy  mean row entropy of softmax(Z W_cls + b_cls)
///   pseudo   mean cross-entropy of softmax(Z W_cls + b_cls) against argmax(Yhat)
///   diff     (sigma_intra^2 - sigma_inter^2) / N
Matrix surrogate_grad_z(LossKind kind, const GprModel& model, const Matrix& z,
                        const SoftPrediction& prediction, double* loss);

double surrogate_loss(LossKind kind, const GprModel& model, const Matrix& z,
                      const SoftPrediction& prediction);

/// Evaluates the surrogate at Z = aggregate(cache, model.gamma) and chains
/// the gradient to gamma.
SurrogateResult surrogate_loss_and_grad_gamma(LossKind kind, const GprModel& model,
                                              const HopCache& cache,
                                              const SoftPrediction& prediction);

/// Mean row entropy of a row-stochastic matrix.
double mean_entropy(const Matrix& probs);

}  // namespace adarc

#endif  // ADARC_LOSSES_HPP_
