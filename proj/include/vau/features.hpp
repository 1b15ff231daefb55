#pragma once

#include <string>

#include <Eigen/Core>

namespace vau {

/// One D-dim feature vector per scored frame (row i = frame i).
struct FeatureSequence {
  std::string video;
  Eigen::MatrixXd features;

  Eigen::Index frames() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

}  // namespace vau
