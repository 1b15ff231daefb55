#include "vau/losses.hpp"

#include <sstream>

#include "vau/error.hpp"

namespace vau {

double loss_as(const Eigen::VectorXd& scores, const FrameLabels& labels, std::size_t* clamped) {
  if (static_cast<std::size_t>(scores.size()) != labels.size()) {
    std::ostringstream msg;
    msg << "loss_as: " << scores.size() << " scores vs " << labels.size() << " labels";
    throw ShapeError(msg.str());
  }
  if (scores.size() == 0) throw ShapeError("loss_as: empty input");
  std::size_t n_clamped = 0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    double s = scores[i];
    if (s <= 0.0 || s >= 1.0) ++n_clamped;
    s = std::clamp(s, k_bce_epsilon, 1.0 - k_bce_epsilon);
    const double y = labels.labels[static_cast<std::size_t>(i)];
    acc += y * std::log(s) + (1.0 - y) * std::log(1.0 - s);
  }
  if (clamped) *clamped = n_clamped;
  return -acc / static_cast<double>(scores.size());
}

double loss_triplet(const Eigen::VectorXd& anchor, const Eigen::VectorXd& positive, const Eigen::VectorXd& negative,
                    double margin) {
  if (anchor.size() != positive.size() || anchor.size() != negative.size())
    throw ShapeError("loss_triplet: vectors must share one dimension");
  if (!(margin > 0.0)) throw ParameterError("loss_triplet: margin must be > 0");
  return detail::triplet<double>(anchor, positive, negative, margin);
}

double loss_kl(const Eigen::MatrixXd& batch) {
  if (batch.rows() < 2) throw ParameterError("loss_kl: batch must hold at least 2 vectors");
  return detail::gaussian_kl<double>(batch);
}

}  // namespace vau
