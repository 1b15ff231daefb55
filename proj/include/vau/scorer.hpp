#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "vau/features.hpp"
#include "vau/timeline.hpp"

namespace vau {

/// Shape of the temporal encoder and memory. With `encoder` off the frame
/// encoding is the raw feature vector and the model is a logistic head.
struct ScorerArch {
  int input_dim = 8;
  int hidden_dim = 16;
  int window = 5;  ///< local attention half-width W: frame i sees [i-W, i+W]
  int memory_slots = 8;  ///< prototypes per bank; 0 disables both banks
  bool encoder = true;
  bool global_attention = true;
  bool local_attention = true;

  bool memory() const { return memory_slots > 0; }
  int encoding_dim() const { return encoder ? hidden_dim : input_dim; }
  int head_dim() const { return memory() ? 3 * encoding_dim() : encoding_dim(); }
};

struct LossWeights {
  double as = 1.0;
  double triplet = 1.0;
  double kl = 1.0;
  double margin = 1.0;
};

/// All trainable tensors. Blocks that the architecture disables are empty.
struct ScorerParams {
  Eigen::MatrixXd w_in;   // D x h
  Eigen::VectorXd b_in;   // h
  Eigen::MatrixXd wq_global, wk_global, wv_global;  // h x h
  Eigen::MatrixXd wq_local, wk_local, wv_local;     // h x h
  Eigen::MatrixXd normal_bank;    // M x h
  Eigen::MatrixXd abnormal_bank;  // M x h
  Eigen::VectorXd head_w;  // head_dim
  double head_b = 0.0;

  /// Visits every scalar block in a fixed order; the flattened parameter
  /// vector, checkpoints and optimizers all rely on this order.
  template <typename F>
  void visit(F&& f) {
    f(w_in); f(b_in);
    f(wq_global); f(wk_global); f(wv_global);
    f(wq_local); f(wk_local); f(wv_local);
    f(normal_bank); f(abnormal_bank);
    f(head_w);
    Eigen::Map<Eigen::VectorXd> bias(&head_b, 1);
    f(bias);
  }
  template <typename F>
  void visit(F&& f) const {
    const_cast<ScorerParams*>(this)->visit([&](auto& block) { f(std::as_const(block)); });
  }

  Eigen::Index size() const;
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);
  /// Same shapes, all zeros.
  ScorerParams zeros_like() const;
};

struct ScorerModel {
  ScorerArch arch;
  ScorerParams params;
  std::uint64_t seed = 0;
};

/// Allocates and initializes parameters uniformly in +-1/sqrt(fan_in) from a
/// portable seeded generator. The score head bias starts at 0.
ScorerModel init_scorer(const ScorerArch& arch, std::uint64_t seed);

/// Intermediate tensors of one forward pass, kept for backprop.
template <typename Scalar>
struct Forward {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Mat hidden;         // input projection H
  Mat attn_global;    // softmax weights, T x T
  Mat attn_local;
  Mat v_global, v_local;
  Mat encoding;       // E
  Mat read_normal;    // R_n
  Mat read_abnormal;  // R_a
  Mat attn_normal, attn_abnormal;  // T x M
  Vec logits;         // z
  Vec scores;         // sigmoid(z)
};

template <typename Scalar>
Forward<Scalar> forward(const ScorerModel& m, const Eigen::MatrixXd& features);

/// Total weighted loss of one video; the template lets the gradient check
/// evaluate it in extended precision.
template <typename Scalar>
Scalar total_loss(const ScorerModel& m, const Eigen::MatrixXd& features, const FrameLabels& labels,
                  const LossWeights& w);

struct LossBreakdown {
  double as = 0.0;
  double triplet = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

/// Weighted loss and its gradient with respect to every parameter.
LossBreakdown loss_and_gradient(const ScorerModel& m, const Eigen::MatrixXd& features, const FrameLabels& labels,
                                const LossWeights& w, ScorerParams& grad);

/// One score per frame in (0,1). Throws ShapeError on a feature-dimension mismatch.
ScoreTimeline score(const ScorerModel& m, const FeatureSequence& f, int stride = 16, double fps = 30.0);

enum class OptimizerKind { adam, sgd_momentum };

struct TrainConfig {
  ScorerArch arch;
  LossWeights weights;
  double learning_rate = 1e-4;
  int epochs = 50;
  int batch_size = 8;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::adam;
  double momentum = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct TrainingExample {
  FeatureSequence features;
  FrameLabels labels;
};

struct TrainResult {
  ScorerModel model;
  std::vector<double> epoch_loss;  ///< mean per-video loss over each epoch
};

/// Raised when the loss becomes non-finite; carries the last finite model.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, ScorerModel last_finite, std::vector<double> curve)
      : std::runtime_error(what), model_(std::move(last_finite)), curve_(std::move(curve)) {}
  const ScorerModel& last_finite() const noexcept { return model_; }
  const std::vector<double>& curve() const noexcept { return curve_; }

 private:
  ScorerModel model_;
  std::vector<double> curve_;
};

/// Video visiting order of one training epoch (seeded Fisher-Yates).
std::vector<std::size_t> training_order(std::size_t n, std::uint64_t seed, int epoch);

/// Minibatch gradient descent over videos in a seed-determined order.
TrainResult train(const std::vector<TrainingExample>& dataset, const TrainConfig& cfg);

/// Same, starting from an existing model.
TrainResult train(const std::vector<TrainingExample>& dataset, const TrainConfig& cfg, ScorerModel start);

/// Max relative error between the analytic gradient and central differences
/// (h = 1e-5, loss evaluated in long double) over all parameters.
double grad_check(const ScorerModel& m, const TrainingExample& sample, const LossWeights& w, double h = 1e-5);

// Checkpoints: binary blob "VAUSCOR1" plus a JSON manifest at <path>.json.
inline constexpr std::uint32_t k_checkpoint_version = 1;
std::string serialize_model(const ScorerModel& m);
ScorerModel deserialize_model(std::string_view blob, const std::string& source = "<model>");
std::string model_manifest(const ScorerModel& m, const TrainConfig* cfg = nullptr);
void save_model(const std::filesystem::path& path, const ScorerModel& m, const TrainConfig* cfg = nullptr);
ScorerModel load_model(const std::filesystem::path& path);

}  // namespace vau
