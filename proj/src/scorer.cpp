#include "vau/scorer.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

#include "vau/detail/random.hpp"
#include "vau/error.hpp"
#include "vau/losses.hpp"

namespace vau {

namespace {

template <typename Scalar>
using MatT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VecT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Row-wise softmax; when window >= 0 row i only sees columns |i-j| <= window.
template <typename Scalar>
MatT<Scalar> softmax_rows(const MatT<Scalar>& logits, int window = -1) {
  using std::exp;
  MatT<Scalar> out = MatT<Scalar>::Zero(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index lo = 0, hi = logits.cols() - 1;
    if (window >= 0) {
      lo = std::max<Eigen::Index>(0, i - window);
      hi = std::min<Eigen::Index>(logits.cols() - 1, i + window);
    }
    const Scalar peak = logits.row(i).segment(lo, hi - lo + 1).maxCoeff();
    Scalar total(0);
    for (Eigen::Index j = lo; j <= hi; ++j) {
      out(i, j) = exp(logits(i, j) - peak);
      total += out(i, j);
    }
    out.row(i).segment(lo, hi - lo + 1) /= total;
  }
  return out;
}

/// Backward of a row-wise softmax: dLogits = A .* (dA - rowsum(dA .* A)).
MatT<double> softmax_rows_backward(const MatT<double>& attn, const MatT<double>& d_attn) {
  const VecT<double> inner = (d_attn.array() * attn.array()).rowwise().sum();
  return attn.array() * (d_attn.colwise() - inner).array();
}

template <typename Scalar>
MatT<Scalar> cast(const Eigen::MatrixXd& m) {
  return m.cast<Scalar>();
}

void check_dim(const ScorerModel& m, const Eigen::MatrixXd& features) {
  if (features.cols() != m.arch.input_dim) {
    std::ostringstream msg;
    msg << "feature dimension mismatch: model expects D=" << m.arch.input_dim << ", got D=" << features.cols();
    throw ShapeError(msg.str());
  }
  if (features.rows() < 1) throw ShapeError("feature sequence has no frames");
}

ScorerParams allocate_params(const ScorerArch& a) {
  const int d = a.input_dim, h = a.hidden_dim, e = a.encoding_dim();
  ScorerParams p;
  if (a.encoder) {
    p.w_in = Eigen::MatrixXd::Zero(d, h);
    p.b_in = Eigen::VectorXd::Zero(h);
    if (a.global_attention) {
      p.wq_global = p.wk_global = p.wv_global = Eigen::MatrixXd::Zero(h, h);
    }
    if (a.local_attention) {
      p.wq_local = p.wk_local = p.wv_local = Eigen::MatrixXd::Zero(h, h);
    }
  }
  if (a.memory()) {
    p.normal_bank = p.abnormal_bank = Eigen::MatrixXd::Zero(a.memory_slots, e);
  }
  p.head_w = Eigen::VectorXd::Zero(a.head_dim());
  return p;
}

void validate_arch(const ScorerArch& a) {
  if (a.input_dim < 1) throw ParameterError("input_dim must be >= 1");
  if (a.encoder && a.hidden_dim < 1) throw ParameterError("hidden_dim must be >= 1");
  if (a.window < 0) throw ParameterError("window must be >= 0");
  if (a.memory_slots < 0) throw ParameterError("memory_slots must be >= 0");
}

struct AttentionGrads {
  Eigen::MatrixXd d_hidden, d_wq, d_wk, d_wv;
};

// out = A V with A = softmax(Q K^T * scale), Q = H Wq, K = H Wk, V = H Wv
AttentionGrads attention_backward(const Eigen::MatrixXd& hidden, const Eigen::MatrixXd& wq, const Eigen::MatrixXd& wk,
                                  const Eigen::MatrixXd& wv, const Eigen::MatrixXd& attn, const Eigen::MatrixXd& v,
                                  const Eigen::MatrixXd& d_out, double scale) {
  const Eigen::MatrixXd q = hidden * wq;
  const Eigen::MatrixXd k = hidden * wk;
  const Eigen::MatrixXd d_v = attn.transpose() * d_out;
  const Eigen::MatrixXd d_attn = d_out * v.transpose();
  const Eigen::MatrixXd d_logits = softmax_rows_backward(attn, d_attn) * scale;
  const Eigen::MatrixXd d_q = d_logits * k;
  const Eigen::MatrixXd d_k = d_logits.transpose() * q;
  AttentionGrads g;
  g.d_wq = hidden.transpose() * d_q;
  g.d_wk = hidden.transpose() * d_k;
  g.d_wv = hidden.transpose() * d_v;
  g.d_hidden = d_q * wq.transpose() + d_k * wk.transpose() + d_v * wv.transpose();
  return g;
}

// R = A B with A = softmax(E B^T * scale); accumulates into d_enc and d_bank.
void memory_backward(const Eigen::MatrixXd& enc, const Eigen::MatrixXd& bank, const Eigen::MatrixXd& attn,
                     const Eigen::MatrixXd& d_read, double scale, Eigen::MatrixXd& d_enc, Eigen::MatrixXd& d_bank) {
  const Eigen::MatrixXd d_attn = d_read * bank.transpose();
  d_bank += attn.transpose() * d_read;
  const Eigen::MatrixXd d_logits = softmax_rows_backward(attn, d_attn) * scale;
  d_enc += d_logits * bank;
  d_bank += d_logits.transpose() * enc;
}

}  // namespace

Eigen::Index ScorerParams::size() const {
  Eigen::Index n = 0;
  visit([&](const auto& block) { n += block.size(); });
  return n;
}

Eigen::VectorXd ScorerParams::flatten() const {
  Eigen::VectorXd flat(size());
  Eigen::Index at = 0;
  visit([&](const auto& block) {
    for (Eigen::Index j = 0; j < block.cols(); ++j)
      for (Eigen::Index i = 0; i < block.rows(); ++i) flat[at++] = block(i, j);
  });
  return flat;
}

void ScorerParams::assign(const Eigen::VectorXd& flat) {
  if (flat.size() != size()) throw ShapeError("parameter vector size mismatch");
  Eigen::Index at = 0;
  visit([&](auto& block) {
    for (Eigen::Index j = 0; j < block.cols(); ++j)
      for (Eigen::Index i = 0; i < block.rows(); ++i) block(i, j) = flat[at++];
  });
}

ScorerParams ScorerParams::zeros_like() const {
  ScorerParams z = *this;
  z.visit([](auto& block) { block.setZero(); });
  return z;
}

ScorerModel init_scorer(const ScorerArch& arch, std::uint64_t seed) {
  validate_arch(arch);
  ScorerModel m;
  m.arch = arch;
  m.seed = seed;
  m.params = allocate_params(arch);
  detail::SplitMix64 rng(seed ^ 0x5C0AE5ull);
  auto fill = [&](Eigen::MatrixXd& block, double fan_in) {
    const double a = 1.0 / std::sqrt(fan_in);
    for (Eigen::Index j = 0; j < block.cols(); ++j)
      for (Eigen::Index i = 0; i < block.rows(); ++i) block(i, j) = rng.uniform(-a, a);
  };
  auto& p = m.params;
  if (arch.encoder) {
    fill(p.w_in, arch.input_dim);
    if (arch.global_attention) {
      fill(p.wq_global, arch.hidden_dim);
      fill(p.wk_global, arch.hidden_dim);
      fill(p.wv_global, arch.hidden_dim);
    }
    if (arch.local_attention) {
      fill(p.wq_local, arch.hidden_dim);
      fill(p.wk_local, arch.hidden_dim);
      fill(p.wv_local, arch.hidden_dim);
    }
  }
  if (arch.memory()) {
    fill(p.normal_bank, 1.0);
    fill(p.abnormal_bank, 1.0);
  }
  const double a = 1.0 / std::sqrt(static_cast<double>(arch.head_dim()));
  for (Eigen::Index i = 0; i < p.head_w.size(); ++i) p.head_w[i] = rng.uniform(-a, a);
  p.head_b = 0.0;
  return m;
}

template <typename Scalar>
Forward<Scalar> forward(const ScorerModel& m, const Eigen::MatrixXd& features) {
  using std::exp;
  using std::sqrt;
  check_dim(m, features);
  const auto& a = m.arch;
  const auto& p = m.params;
  Forward<Scalar> f;
  const MatT<Scalar> x = features.cast<Scalar>();

  if (a.encoder) {
    f.hidden = (x * cast<Scalar>(p.w_in)).rowwise() + p.b_in.cast<Scalar>().transpose();
    MatT<Scalar> pre = f.hidden;
    const Scalar scale = Scalar(1) / sqrt(Scalar(a.hidden_dim));
    if (a.global_attention) {
      const MatT<Scalar> q = f.hidden * cast<Scalar>(p.wq_global);
      const MatT<Scalar> k = f.hidden * cast<Scalar>(p.wk_global);
      f.v_global = f.hidden * cast<Scalar>(p.wv_global);
      f.attn_global = softmax_rows<Scalar>((q * k.transpose()) * scale);
      pre += f.attn_global * f.v_global;
    }
    if (a.local_attention) {
      const MatT<Scalar> q = f.hidden * cast<Scalar>(p.wq_local);
      const MatT<Scalar> k = f.hidden * cast<Scalar>(p.wk_local);
      f.v_local = f.hidden * cast<Scalar>(p.wv_local);
      f.attn_local = softmax_rows<Scalar>((q * k.transpose()) * scale, a.window);
      pre += f.attn_local * f.v_local;
    }
    f.encoding = pre.array().tanh().matrix();
  } else {
    f.encoding = x;
  }

  const Eigen::Index t = f.encoding.rows();
  const Eigen::Index e = f.encoding.cols();
  MatT<Scalar> head_in;
  if (a.memory()) {
    const Scalar scale = Scalar(1) / sqrt(Scalar(e));
    const MatT<Scalar> bank_n = cast<Scalar>(p.normal_bank);
    const MatT<Scalar> bank_a = cast<Scalar>(p.abnormal_bank);
    f.attn_normal = softmax_rows<Scalar>((f.encoding * bank_n.transpose()) * scale);
    f.attn_abnormal = softmax_rows<Scalar>((f.encoding * bank_a.transpose()) * scale);
    f.read_normal = f.attn_normal * bank_n;
    f.read_abnormal = f.attn_abnormal * bank_a;
    head_in.resize(t, 3 * e);
    head_in << f.encoding, f.read_normal, f.read_abnormal;
  } else {
    head_in = f.encoding;
  }
  f.logits = (head_in * p.head_w.cast<Scalar>()).array() + Scalar(p.head_b);
  f.scores = f.logits.unaryExpr([](Scalar z) { return Scalar(1) / (Scalar(1) + exp(-z)); });
  return f;
}

template <typename Scalar>
Scalar total_loss(const ScorerModel& m, const Eigen::MatrixXd& features, const FrameLabels& labels,
                  const LossWeights& w) {
  if (labels.size() != static_cast<std::size_t>(features.rows())) throw ShapeError("labels misaligned with features");
  const Forward<Scalar> f = forward<Scalar>(m, features);
  Scalar loss = Scalar(w.as) * detail::bce_from_logits<Scalar>(f.logits, labels);
  if (!m.arch.memory()) return loss;

  const Eigen::Index t = f.encoding.rows();
  if (w.triplet != 0.0) {
    Scalar acc(0);
    for (Eigen::Index i = 0; i < t; ++i) {
      const bool abnormal = labels.labels[static_cast<std::size_t>(i)] != 0;
      const auto& pos = abnormal ? f.read_abnormal : f.read_normal;
      const auto& neg = abnormal ? f.read_normal : f.read_abnormal;
      acc += detail::triplet<Scalar>(f.encoding.row(i), pos.row(i), neg.row(i), Scalar(w.margin));
    }
    loss += Scalar(w.triplet) * acc / Scalar(t);
  }
  if (w.kl != 0.0) {
    std::vector<Eigen::Index> normal;
    for (Eigen::Index i = 0; i < t; ++i)
      if (labels.labels[static_cast<std::size_t>(i)] == 0) normal.push_back(i);
    if (normal.size() >= 2) {
      MatT<Scalar> batch(static_cast<Eigen::Index>(normal.size()), f.read_normal.cols());
      for (std::size_t r = 0; r < normal.size(); ++r) batch.row(static_cast<Eigen::Index>(r)) = f.read_normal.row(normal[r]);
      loss += Scalar(w.kl) * detail::gaussian_kl<Scalar>(batch);
    }
  }
  return loss;
}

template Forward<double> forward<double>(const ScorerModel&, const Eigen::MatrixXd&);
template Forward<long double> forward<long double>(const ScorerModel&, const Eigen::MatrixXd&);
template double total_loss<double>(const ScorerModel&, const Eigen::MatrixXd&, const FrameLabels&, const LossWeights&);
template long double total_loss<long double>(const ScorerModel&, const Eigen::MatrixXd&, const FrameLabels&,
                                             const LossWeights&);

LossBreakdown loss_and_gradient(const ScorerModel& m, const Eigen::MatrixXd& features, const FrameLabels& labels,
                                const LossWeights& w, ScorerParams& grad) {
  if (labels.size() != static_cast<std::size_t>(features.rows())) throw ShapeError("labels misaligned with features");
  const auto& a = m.arch;
  const auto& p = m.params;
  const Forward<double> f = forward<double>(m, features);
  const Eigen::Index t = f.encoding.rows();
  const Eigen::Index e = f.encoding.cols();
  const double inv_t = 1.0 / static_cast<double>(t);

  LossBreakdown out;
  out.as = detail::bce_from_logits<double>(f.logits, labels);

  // score head
  Eigen::VectorXd d_logits(t);
  for (Eigen::Index i = 0; i < t; ++i)
    d_logits[i] = w.as * (f.scores[i] - labels.labels[static_cast<std::size_t>(i)]) * inv_t;
  Eigen::MatrixXd d_enc = d_logits * p.head_w.head(e).transpose();
  Eigen::MatrixXd head_in;
  if (a.memory()) {
    head_in.resize(t, 3 * e);
    head_in << f.encoding, f.read_normal, f.read_abnormal;
  } else {
    head_in = f.encoding;
  }
  grad.head_w += head_in.transpose() * d_logits;
  grad.head_b += d_logits.sum();

  if (a.memory()) {
    Eigen::MatrixXd d_read_n = d_logits * p.head_w.segment(e, e).transpose();
    Eigen::MatrixXd d_read_a = d_logits * p.head_w.segment(2 * e, e).transpose();

    if (w.triplet != 0.0) {
      double acc = 0.0;
      const double c = w.triplet * inv_t;
      for (Eigen::Index i = 0; i < t; ++i) {
        const bool abnormal = labels.labels[static_cast<std::size_t>(i)] != 0;
        const Eigen::RowVectorXd anchor = f.encoding.row(i);
        const Eigen::RowVectorXd pos = abnormal ? f.read_abnormal.row(i) : f.read_normal.row(i);
        const Eigen::RowVectorXd neg = abnormal ? f.read_normal.row(i) : f.read_abnormal.row(i);
        const double dp = (anchor - pos).norm();
        const double dn = (anchor - neg).norm();
        const double v = dp - dn + w.margin;
        if (v <= 0.0) continue;
        acc += v;
        Eigen::RowVectorXd g_p = Eigen::RowVectorXd::Zero(e), g_n = Eigen::RowVectorXd::Zero(e);
        if (dp > 0.0) g_p = (anchor - pos) / dp;
        if (dn > 0.0) g_n = (anchor - neg) / dn;
        d_enc.row(i) += c * (g_p - g_n);
        auto& d_pos = abnormal ? d_read_a : d_read_n;
        auto& d_neg = abnormal ? d_read_n : d_read_a;
        d_pos.row(i) -= c * g_p;
        d_neg.row(i) += c * g_n;
      }
      out.triplet = acc * inv_t;
    }

    if (w.kl != 0.0) {
      std::vector<Eigen::Index> normal;
      for (Eigen::Index i = 0; i < t; ++i)
        if (labels.labels[static_cast<std::size_t>(i)] == 0) normal.push_back(i);
      if (normal.size() >= 2) {
        const double cnt = static_cast<double>(normal.size());
        Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(e);
        for (auto i : normal) mu += f.read_normal.row(i);
        mu /= cnt;
        Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(e);
        for (auto i : normal) var += (f.read_normal.row(i) - mu).array().square().matrix();
        var /= cnt;
        double kl = 0.0;
        Eigen::RowVectorXd d_var(e);
        for (Eigen::Index j = 0; j < e; ++j) {
          double v = var[j];
          if (v < k_variance_floor) {
            v = k_variance_floor;
            d_var[j] = 0.0;
          } else {
            d_var[j] = 0.5 * (1.0 - 1.0 / v);
          }
          kl += 0.5 * (mu[j] * mu[j] + v - std::log(v) - 1.0);
        }
        out.kl = kl;
        for (auto i : normal) {
          const Eigen::RowVectorXd centered = f.read_normal.row(i) - mu;
          d_read_n.row(i) += w.kl * (mu / cnt + 2.0 / cnt * centered.cwiseProduct(d_var));
        }
      }
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(e));
    memory_backward(f.encoding, p.normal_bank, f.attn_normal, d_read_n, scale, d_enc, grad.normal_bank);
    memory_backward(f.encoding, p.abnormal_bank, f.attn_abnormal, d_read_a, scale, d_enc, grad.abnormal_bank);
  }
  out.total = w.as * out.as + (a.memory() ? w.triplet * out.triplet + w.kl * out.kl : 0.0);

  if (!a.encoder) return out;

  // E = tanh(H + G + L)
  const Eigen::MatrixXd d_pre = d_enc.array() * (1.0 - f.encoding.array().square());
  Eigen::MatrixXd d_hidden = d_pre;
  const double scale = 1.0 / std::sqrt(static_cast<double>(a.hidden_dim));
  if (a.global_attention) {
    auto g = attention_backward(f.hidden, p.wq_global, p.wk_global, p.wv_global, f.attn_global, f.v_global, d_pre,
                                scale);
    grad.wq_global += g.d_wq;
    grad.wk_global += g.d_wk;
    grad.wv_global += g.d_wv;
    d_hidden += g.d_hidden;
  }
  if (a.local_attention) {
    auto g = attention_backward(f.hidden, p.wq_local, p.wk_local, p.wv_local, f.attn_local, f.v_local, d_pre, scale);
    grad.wq_local += g.d_wq;
    grad.wk_local += g.d_wk;
    grad.wv_local += g.d_wv;
    d_hidden += g.d_hidden;
  }
  grad.w_in += features.transpose() * d_hidden;
  grad.b_in += d_hidden.colwise().sum().transpose();
  return out;
}

ScoreTimeline score(const ScorerModel& m, const FeatureSequence& f, int stride, double fps) {
  const Forward<double> fw = forward<double>(m, f.features);
  ScoreTimeline t;
  t.stride = stride;
  t.fps = fps;
  const double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  t.scores = fw.scores.unaryExpr([&](double s) { return std::clamp(s, lo, hi); });
  return t;
}

namespace {

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  detail::SplitMix64 rng(seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(epoch) + 1);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

}  // namespace

std::vector<std::size_t> training_order(std::size_t n, std::uint64_t seed, int epoch) {
  return shuffled(n, seed, epoch);
}

TrainResult train(const std::vector<TrainingExample>& dataset, const TrainConfig& cfg) {
  return train(dataset, cfg, init_scorer(cfg.arch, cfg.seed));
}

TrainResult train(const std::vector<TrainingExample>& dataset, const TrainConfig& cfg, ScorerModel start) {
  if (dataset.empty()) throw ValidationError("train: empty dataset");
  if (!(cfg.learning_rate > 0.0)) throw ParameterError("train: learning rate must be > 0");
  if (cfg.weights.as < 0 || cfg.weights.triplet < 0 || cfg.weights.kl < 0)
    throw ParameterError("train: loss weights must be >= 0");
  if (cfg.batch_size < 1 || cfg.epochs < 0) throw ParameterError("train: batch size must be >= 1, epochs >= 0");
  for (const auto& ex : dataset) {
    check_dim(start, ex.features.features);
    if (ex.labels.size() != static_cast<std::size_t>(ex.features.frames()))
      throw ValidationError("train: labels misaligned for video " + ex.features.video);
  }

  TrainResult result{std::move(start), {}};
  ScorerModel& model = result.model;
  const Eigen::Index n_params = model.params.size();
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(n_params);  // momentum / Adam first moment
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(n_params);
  long long step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled(dataset.size(), cfg.seed, epoch);
    double epoch_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      ScorerParams grad = model.params.zeros_like();
      double batch_loss = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const auto& ex = dataset[order[k]];
        batch_loss += loss_and_gradient(model, ex.features.features, ex.labels, cfg.weights, grad).total;
      }
      const double inv = 1.0 / static_cast<double>(end - begin);
      const Eigen::VectorXd g = grad.flatten() * inv;
      if (!std::isfinite(batch_loss) || !g.allFinite()) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << " (non-finite loss or gradient)";
        throw DivergenceError(msg.str(), model, result.epoch_loss);
      }
      epoch_sum += batch_loss;

      Eigen::VectorXd theta = model.params.flatten();
      ++step;
      if (cfg.optimizer == OptimizerKind::adam) {
        m1 = cfg.adam_beta1 * m1 + (1.0 - cfg.adam_beta1) * g;
        m2 = cfg.adam_beta2 * m2 + (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
        const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
        theta.array() -= cfg.learning_rate * (m1.array() / c1) / ((m2.array() / c2).sqrt() + cfg.adam_eps);
      } else {
        m1 = cfg.momentum * m1 + g;
        theta -= cfg.learning_rate * m1;
      }
      if (!theta.allFinite()) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << " (non-finite parameters)";
        throw DivergenceError(msg.str(), model, result.epoch_loss);
      }
      model.params.assign(theta);
    }
    result.epoch_loss.push_back(epoch_sum / static_cast<double>(dataset.size()));
  }
  return result;
}

double grad_check(const ScorerModel& m, const TrainingExample& sample, const LossWeights& w, double h) {
  ScorerParams grad = m.params.zeros_like();
  loss_and_gradient(m, sample.features.features, sample.labels, w, grad);
  const Eigen::VectorXd analytic = grad.flatten();
  const Eigen::VectorXd theta = m.params.flatten();

  ScorerModel probe = m;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    Eigen::VectorXd plus = theta, minus = theta;
    plus[k] += h;
    minus[k] -= h;
    probe.params.assign(plus);
    const long double lp = total_loss<long double>(probe, sample.features.features, sample.labels, w);
    probe.params.assign(minus);
    const long double lm = total_loss<long double>(probe, sample.features.features, sample.labels, w);
    const double numeric = static_cast<double>((lp - lm) / static_cast<long double>(plus[k] - minus[k]));
    const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-7});
    worst = std::max(worst, std::abs(analytic[k] - numeric) / denom);
  }
  return worst;
}

}  // namespace vau
