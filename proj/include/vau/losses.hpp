#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include <Eigen/Core>

#include "vau/timeline.hpp"

namespace vau {

inline constexpr double k_bce_epsilon = 1e-7;
inline constexpr double k_variance_floor = 1e-8;

/// Mean binary cross-entropy -(1/T) sum[y log s + (1-y) log(1-s)]. Scores at
/// or beyond 0/1 are clamped to [eps, 1-eps]; the number clamped is reported
/// through `clamped` when given.
double loss_as(const Eigen::VectorXd& scores, const FrameLabels& labels, std::size_t* clamped = nullptr);

/// max(0, |a-p| - |a-n| + margin) with Euclidean distances.
double loss_triplet(const Eigen::VectorXd& anchor, const Eigen::VectorXd& positive, const Eigen::VectorXd& negative,
                    double margin);

/// KL(N(mu, diag sigma^2) || N(0, I)) of the batch's empirical diagonal
/// Gaussian (rows are samples, population variance floored at 1e-8).
double loss_kl(const Eigen::MatrixXd& batch);

namespace detail {

template <typename Scalar>
Scalar softplus(Scalar z) {
  using std::abs;
  using std::exp;
  using std::log1p;
  return std::max(z, Scalar(0)) + log1p(exp(-abs(z)));
}

/// BCE of sigmoid(z) against y written in logit form, exact for saturated z.
template <typename Scalar, typename Derived>
Scalar bce_from_logits(const Eigen::MatrixBase<Derived>& logits, const FrameLabels& labels) {
  Scalar acc(0);
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const Scalar z = logits[i];
    acc += softplus(z) - Scalar(labels.labels[static_cast<std::size_t>(i)]) * z;
  }
  return acc / Scalar(logits.size());
}

template <typename Scalar, typename A, typename P, typename N>
Scalar triplet(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<P>& p, const Eigen::MatrixBase<N>& n,
               Scalar margin) {
  const Scalar v = (a - p).norm() - (a - n).norm() + margin;
  return v > Scalar(0) ? v : Scalar(0);
}

template <typename Scalar, typename Derived>
Scalar gaussian_kl(const Eigen::MatrixBase<Derived>& batch) {
  using std::log;
  const Scalar m = Scalar(batch.rows());
  Scalar acc(0);
  for (Eigen::Index j = 0; j < batch.cols(); ++j) {
    const Scalar mu = batch.col(j).sum() / m;
    Scalar var = (batch.col(j).array() - mu).square().sum() / m;
    if (var < Scalar(k_variance_floor)) var = Scalar(k_variance_floor);
    acc += Scalar(0.5) * (mu * mu + var - log(var) - Scalar(1));
  }
  return acc;
}

}  // namespace detail
}  // namespace vau
