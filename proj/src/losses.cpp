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

#include "adarc/losses.hpp"

namespace adarc {

namespace {

// x log x with the 0 log 0 = 0 convention.
double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace

const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kPic:
      return "pic";
    case LossKind::kEntropy:
      return "entropy";
    case LossKind::kPseudo:
      return "pseudo";
    case LossKind::kDiff:
      return "diff";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "pic") return LossKind::kPic;
  if (name == "entropy") return LossKind::kEntropy;
  if (name == "pseudo") return LossKind::kPseudo;
  if (name == "diff") return LossKind::kDiff;
  throw ConfigError("unknown loss '" + name + "' (expected pic, entropy, pseudo or diff)");
}

double mean_entropy(const Matrix& probs) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    for (Eigen::Index c = 0; c < probs.cols(); ++c) total -= xlogx(probs(i, c));
  return total / static_cast<double>(probs.rows());
}

Matrix surrogate_grad_z(LossKind kind, const GprModel& model, const Matrix& z,
                        const SoftPrediction& prediction, double* loss) {
  const Matrix& yhat = prediction.probs;
  // The entropy loss ignores the prediction.
  detail::require(kind == LossKind::kEntropy || yhat.rows() == z.rows(),
                  "surrogate: prediction row count mismatch");
  const auto n = static_cast<double>(z.rows());

  switch (kind) {
    case LossKind::kPic: {
      const PicBreakdown pic = pic_loss(z, yhat);
      if (loss != nullptr) *loss = pic.loss;
      return pic_grad_z(pic, z, yhat);
    }
    case LossKind::kDiff: {
      // intra - inter = 2 intra - sigma^2; both partials hold the centroids
      // fixed for the same reason as in pic_grad_z.
      const PicBreakdown pic = pic_loss(z, yhat);
      if (loss != nullptr) *loss = (pic.sigma_intra_sq - pic.sigma_inter_sq) / n;
      Matrix g = 4.0 * (z - yhat * pic.centroids);
      g -= 2.0 * (z.rowwise() - pic.global_centroid.transpose());
      return g / n;
    }
    case LossKind::kEntropy: {
      const Classification cls = classify(z, model);
      const Matrix& p = cls.prediction.probs;
      Matrix dlogits(p.rows(), p.cols());
      double total = 0.0;
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        double h = 0.0;
        for (Eigen::Index c = 0; c < p.cols(); ++c) h -= xlogx(p(i, c));
        total += h;
        for (Eigen::Index c = 0; c < p.cols(); ++c) {
          const double logp = p(i, c) > 0.0 ? std::log(p(i, c)) : 0.0;
          dlogits(i, c) = -p(i, c) * (logp + h) / n;
        }
      }
      if (loss != nullptr) *loss = total / n;
      return dlogits * model.w_cls.transpose();
    }
    case LossKind::kPseudo: {
      const Classification cls = classify(z, model);
      const Eigen::VectorXi target = argmax_rows(yhat);
      Matrix dlogits = cls.prediction.probs / n;
      double total = 0.0;
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double top = cls.logits.row(i).maxCoeff();
        const double lse = top + std::log((cls.logits.row(i).array() - top).exp().sum());
        total += lse - cls.logits(i, target[i]);
        dlogits(i, target[i]) -= 1.0 / n;
      }
      if (loss != nullptr) *loss = total / n;
      return dlogits * model.w_cls.transpose();
    }
  }
  throw InvalidArgument("surrogate: unknown loss kind");
}

double surrogate_loss(LossKind kind, const GprModel& model, const Matrix& z,
                      const SoftPrediction& prediction) {
  const auto n = static_cast<double>(z.rows());
  switch (kind) {
    case LossKind::kPic:
      return pic_loss(z, prediction.probs).loss;
    case LossKind::kDiff: {
      const PicBreakdown pic = pic_loss(z, prediction.probs);
      return (pic.sigma_intra_sq - pic.sigma_inter_sq) / n;
    }
    case LossKind::kEntropy:
      return mean_entropy(classify(z, model).prediction.probs);
    case LossKind::kPseudo: {
      const Matrix logits = classify(z, model).logits;
      const Eigen::VectorXi target = argmax_rows(prediction.probs);
      double total = 0.0;
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double top = logits.row(i).maxCoeff();
        total += top + std::log((logits.row(i).array() - top).exp().sum()) - logits(i, target[i]);
      }
      return total / n;
    }
  }
  throw InvalidArgument("surrogate: unknown loss kind");
}

SurrogateResult surrogate_loss_and_grad_gamma(LossKind kind, const GprModel& model,
                                              const HopCache& cache,
                                              const SoftPrediction& prediction) {
  SurrogateResult out;
  const Matrix z = aggregate(cache, model.gamma);
  out.grad_z = surrogate_grad_z(kind, model, z, prediction, &out.loss);
  out.grad_gamma = gamma_gradient(cache, out.grad_z);
  return out;
}

}  // namespace adarc
