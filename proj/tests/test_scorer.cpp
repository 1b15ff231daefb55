#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "support/generators.hpp"
#include "vau/error.hpp"
#include "vau/io.hpp"
#include "vau/losses.hpp"
#include "vau/scorer.hpp"

using namespace vau;

namespace {

using LD = long double;
using Grid = std::vector<std::vector<LD>>;

Grid to_grid(const Eigen::MatrixXd& m) {
  Grid g(static_cast<std::size_t>(m.rows()), std::vector<LD>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) g[i][j] = m(i, j);
  return g;
}

Grid matmul(const Grid& a, const Grid& b) {
  Grid c(a.size(), std::vector<LD>(b[0].size(), 0.0L));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

// out[i] = sum_j softmax_j(q_i . k_j * scale) v_j over |i-j| <= window (window < 0: all j)
Grid attend(const Grid& q, const Grid& k, const Grid& v, LD scale, int window) {
  Grid out(q.size(), std::vector<LD>(v[0].size(), 0.0L));
  for (std::size_t i = 0; i < q.size(); ++i) {
    std::vector<LD> w(k.size(), 0.0L);
    LD total = 0.0L;
    for (std::size_t j = 0; j < k.size(); ++j) {
      const long long gap = static_cast<long long>(i) - static_cast<long long>(j);
      if (window >= 0 && std::llabs(gap) > window) continue;
      LD dot = 0.0L;
      for (std::size_t c = 0; c < q[i].size(); ++c) dot += q[i][c] * k[j][c];
      w[j] = std::exp(dot * scale);
      total += w[j];
    }
    for (std::size_t j = 0; j < k.size(); ++j)
      for (std::size_t c = 0; c < v[0].size(); ++c) out[i][c] += w[j] / total * v[j][c];
  }
  return out;
}

// Straight-line re-derivation of the scorer's forward pass in long double.
std::vector<LD> naive_scores(const ScorerModel& m, const Eigen::MatrixXd& x) {
  const auto& a = m.arch;
  const auto& p = m.params;
  Grid enc = to_grid(x);
  if (a.encoder) {
    Grid h = matmul(enc, to_grid(p.w_in));
    for (auto& row : h)
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += p.b_in[static_cast<Eigen::Index>(c)];
    Grid pre = h;
    const LD scale = 1.0L / std::sqrt(static_cast<LD>(a.hidden_dim));
    auto add = [&](const Grid& g) {
      for (std::size_t i = 0; i < pre.size(); ++i)
        for (std::size_t c = 0; c < pre[i].size(); ++c) pre[i][c] += g[i][c];
    };
    if (a.global_attention)
      add(attend(matmul(h, to_grid(p.wq_global)), matmul(h, to_grid(p.wk_global)), matmul(h, to_grid(p.wv_global)),
                 scale, -1));
    if (a.local_attention)
      add(attend(matmul(h, to_grid(p.wq_local)), matmul(h, to_grid(p.wk_local)), matmul(h, to_grid(p.wv_local)),
                 scale, a.window));
    for (auto& row : pre)
      for (auto& v : row) v = std::tanh(v);
    enc = pre;
  }
  std::vector<Grid> parts{enc};
  if (a.memory()) {
    const LD scale = 1.0L / std::sqrt(static_cast<LD>(enc[0].size()));
    const Grid bn = to_grid(p.normal_bank), ba = to_grid(p.abnormal_bank);
    parts.push_back(attend(enc, bn, bn, scale, -1));
    parts.push_back(attend(enc, ba, ba, scale, -1));
  }
  std::vector<LD> out;
  for (std::size_t i = 0; i < enc.size(); ++i) {
    LD z = p.head_b;
    std::size_t at = 0;
    for (const auto& part : parts)
      for (LD v : part[i]) z += v * static_cast<LD>(p.head_w[static_cast<Eigen::Index>(at++)]);
    out.push_back(1.0L / (1.0L + std::exp(-z)));
  }
  return out;
}

ScorerArch tiny_arch(bool memory, gen::Rng& rng) {
  ScorerArch a;
  a.input_dim = static_cast<int>(gen::between(rng, 1, 4));
  a.hidden_dim = static_cast<int>(gen::between(rng, 1, 4));
  a.window = static_cast<int>(gen::between(rng, 0, 2));
  a.memory_slots = memory ? static_cast<int>(gen::between(rng, 1, 3)) : 0;
  return a;
}

TrainingExample tiny_example(gen::Rng& rng, int dim) {
  const std::size_t t = gen::between(rng, 2, 8);
  TrainingExample ex;
  ex.labels.labels.resize(t);
  for (auto& l : ex.labels.labels) l = static_cast<std::uint8_t>(gen::below(rng, 2));
  ex.labels.labels[0] = 0;
  ex.labels.labels[1] = 0;
  ex.features.video = "tiny";
  ex.features.features.resize(static_cast<Eigen::Index>(t), dim);
  for (Eigen::Index i = 0; i < ex.features.features.size(); ++i) ex.features.features.data()[i] = gen::uniform(rng, -1.5, 1.5);
  return ex;
}

}  // namespace

TEST(Score, ZeroHeadGivesOneHalf) {
  ScorerArch a;
  auto m = init_scorer(a, 3);
  m.params.head_w.setZero();
  m.params.head_b = 0.0;
  gen::Rng rng(1);
  FrameLabels l;
  l.labels.assign(20, 0);
  const auto t = score(m, gen::separable_features(rng, l, a.input_dim, 1.0, "v"));
  ASSERT_EQ(t.size(), 20);
  for (Eigen::Index i = 0; i < t.size(); ++i) EXPECT_EQ(t.scores[i], 0.5);
}

TEST(Score, SaturatedBiasStaysInsideUnitInterval) {
  ScorerArch a;
  auto m = init_scorer(a, 3);
  m.params.head_w.setZero();
  m.params.head_b = 30.0;
  gen::Rng rng(2);
  FrameLabels l;
  l.labels.assign(10, 1);
  auto t = score(m, gen::separable_features(rng, l, a.input_dim, 1.0, "v"));
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    EXPECT_GT(t.scores[i], 0.999999);
    EXPECT_LT(t.scores[i], 1.0);
  }
  m.params.head_b = 800.0;
  t = score(m, gen::separable_features(rng, l, a.input_dim, 1.0, "v"));
  for (Eigen::Index i = 0; i < t.size(); ++i) EXPECT_LT(t.scores[i], 1.0);
  m.params.head_b = -800.0;
  t = score(m, gen::separable_features(rng, l, a.input_dim, 1.0, "v"));
  for (Eigen::Index i = 0; i < t.size(); ++i) EXPECT_GT(t.scores[i], 0.0);
}

TEST(Score, HandSetTinyModelMatchesNaiveForward) {
  ScorerArch a;
  a.input_dim = 2;
  a.hidden_dim = 2;
  a.window = 1;
  a.memory_slots = 2;
  auto m = init_scorer(a, 0);
  auto& p = m.params;
  p.w_in << 0.5, -0.25, 0.75, 1.0;
  p.b_in << 0.1, -0.2;
  p.wq_global << 1.0, 0.0, 0.0, 1.0;
  p.wk_global << 0.5, 0.5, -0.5, 0.5;
  p.wv_global << 0.2, -0.1, 0.3, 0.4;
  p.wq_local << -1.0, 0.5, 0.25, 0.75;
  p.wk_local << 0.3, 0.3, 0.3, -0.3;
  p.wv_local << 1.0, 0.0, 0.0, -1.0;
  p.normal_bank << 0.1, 0.2, -0.3, 0.4;
  p.abnormal_bank << 0.9, -0.8, 0.7, 0.6;
  p.head_w << 1.0, -1.0, 0.5, 0.5, -0.25, 2.0;
  p.head_b = 0.125;
  Eigen::MatrixXd x(3, 2);
  x << 1.0, 2.0, -0.5, 0.25, 3.0, -1.0;
  const auto got = score(m, FeatureSequence{"v", x});
  const auto want = naive_scores(m, x);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(got.scores[i], static_cast<double>(want[i]), 1e-12);
}

TEST(Score, RandomModelsMatchNaiveForward) {
  gen::Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    ScorerArch a = tiny_arch(trial % 2 == 0, rng);
    a.encoder = trial % 5 != 4;
    a.global_attention = trial % 3 != 1;
    a.local_attention = trial % 3 != 2;
    const auto m = init_scorer(a, static_cast<std::uint64_t>(trial));
    const auto ex = tiny_example(rng, a.input_dim);
    const auto got = score(m, ex.features);
    const auto want = naive_scores(m, ex.features.features);
    for (Eigen::Index i = 0; i < got.size(); ++i)
      EXPECT_NEAR(got.scores[i], static_cast<double>(want[static_cast<std::size_t>(i)]), 1e-12) << trial;
  }
}

TEST(Score, DimensionMismatchNamesBothSizes) {
  const auto m = init_scorer(ScorerArch{}, 1);
  try {
    score(m, FeatureSequence{"v", Eigen::MatrixXd::Zero(4, 3)});
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("D=8"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("D=3"), std::string::npos);
  }
}

TEST(Score, BatchOrderDoesNotMatter) {
  gen::Rng rng(4);
  const auto m = init_scorer(ScorerArch{}, 9);
  std::vector<FeatureSequence> videos;
  for (int v = 0; v < 6; ++v) {
    FrameLabels l = gen::bursts(rng, gen::between(rng, 5, 40));
    videos.push_back(gen::separable_features(rng, l, 8, 1.0, "v" + std::to_string(v)));
  }
  std::vector<Eigen::VectorXd> forward_order, reverse_order(videos.size());
  for (const auto& v : videos) forward_order.push_back(score(m, v).scores);
  for (std::size_t i = videos.size(); i-- > 0;) reverse_order[i] = score(m, videos[i]).scores;
  for (std::size_t i = 0; i < videos.size(); ++i) {
    EXPECT_EQ(forward_order[i].size(), videos[i].frames());
    EXPECT_TRUE((forward_order[i].array() == reverse_order[i].array()).all());
  }
}

TEST(Score, LocalWindowMasksDistantFrames) {
  gen::Rng rng(8);
  ScorerArch a;
  a.global_attention = false;
  a.memory_slots = 0;
  a.window = 2;
  const auto m = init_scorer(a, 5);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(20, a.input_dim);
  const auto base = forward<double>(m, x);
  const Eigen::Index i = 10;
  for (Eigen::Index j = 0; j < 20; ++j) {
    if (std::abs(j - i) <= a.window) continue;
    x.row(j).setConstant(gen::uniform(rng, -5, 5));
  }
  const auto moved = forward<double>(m, x);
  EXPECT_TRUE((base.encoding.row(i).array() == moved.encoding.row(i).array()).all());
  // and the frames inside the window do matter
  x.row(i + 1) *= -3.0;
  EXPECT_FALSE((base.encoding.row(i).array() == forward<double>(m, x).encoding.row(i).array()).all());
}

TEST(LossAs, Examples) {
  FrameLabels l{{1, 0}};
  EXPECT_NEAR(loss_as(Eigen::Vector2d(0.5, 0.5), l), std::log(2.0), 1e-15);
  std::size_t clamped = 9;
  EXPECT_LT(loss_as(Eigen::Vector2d(1 - k_bce_epsilon, k_bce_epsilon), l, &clamped), 2e-7);
  EXPECT_EQ(clamped, 0u);
  const double sat = loss_as(Eigen::Vector2d(1.0, 0.0), l, &clamped);
  EXPECT_EQ(clamped, 2u);
  EXPECT_TRUE(std::isfinite(sat));
  EXPECT_THROW(loss_as(Eigen::Vector3d(0.5, 0.5, 0.5), l), ShapeError);
}

TEST(LossAs, MatchesSecondImplementation) {
  gen::Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t t = gen::between(rng, 1, 50);
    Eigen::VectorXd s(static_cast<Eigen::Index>(t));
    FrameLabels l;
    LD acc = 0;
    for (std::size_t i = 0; i < t; ++i) {
      s[static_cast<Eigen::Index>(i)] = gen::uniform(rng, 1e-4, 1 - 1e-4);
      l.labels.push_back(static_cast<std::uint8_t>(gen::below(rng, 2)));
      const LD p = s[static_cast<Eigen::Index>(i)];
      acc += l.labels.back() ? -std::log(p) : -std::log1p(-p);
    }
    EXPECT_NEAR(loss_as(s, l), static_cast<double>(acc / t), 1e-9);
    EXPECT_GE(loss_as(s, l), 0.0);
  }
}

TEST(LossTriplet, Examples) {
  const Eigen::Vector2d a(0, 0), n(1, 0);
  EXPECT_EQ(loss_triplet(a, a, n, 1.0), 0.0);
  const Eigen::Vector2d far(3, 4);
  EXPECT_DOUBLE_EQ(loss_triplet(a, far, a, 0.5), 5.5);
  EXPECT_THROW(loss_triplet(a, Eigen::Vector3d(0, 0, 0), n, 1.0), ShapeError);
  EXPECT_THROW(loss_triplet(a, a, n, 0.0), ParameterError);
  gen::Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = static_cast<int>(gen::between(rng, 1, 6));
    Eigen::VectorXd x(d), y(d), z(d);
    LD dp = 0, dn = 0;
    for (int k = 0; k < d; ++k) {
      x[k] = gen::uniform(rng, -2, 2);
      y[k] = gen::uniform(rng, -2, 2);
      z[k] = gen::uniform(rng, -2, 2);
      dp += (LD(x[k]) - y[k]) * (LD(x[k]) - y[k]);
      dn += (LD(x[k]) - z[k]) * (LD(x[k]) - z[k]);
    }
    const LD want = std::max(0.0L, std::sqrt(dp) - std::sqrt(dn) + 0.7L);
    EXPECT_NEAR(loss_triplet(x, y, z, 0.7), static_cast<double>(want), 1e-12);
  }
}

TEST(LossKl, Examples) {
  Eigen::MatrixXd standard(2, 1);
  standard << 1.0, -1.0;
  EXPECT_EQ(loss_kl(standard), 0.0);
  Eigen::MatrixXd shifted(2, 2);
  shifted << 2.0, 1.0, 0.0, -1.0;
  EXPECT_DOUBLE_EQ(loss_kl(shifted), 0.5);
  Eigen::MatrixXd flat(3, 1);
  flat << 0.0, 0.0, 0.0;
  EXPECT_NEAR(loss_kl(flat), 0.5 * (1e-8 - std::log(1e-8) - 1.0), 1e-9);
  EXPECT_THROW(loss_kl(Eigen::MatrixXd::Zero(1, 3)), ParameterError);
}

TEST(LossKl, MatchesClosedForm) {
  gen::Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int rows = static_cast<int>(gen::between(rng, 2, 10)), cols = static_cast<int>(gen::between(rng, 1, 5));
    Eigen::MatrixXd b(rows, cols);
    LD want = 0;
    for (int j = 0; j < cols; ++j) {
      LD sum = 0, sq = 0;
      for (int i = 0; i < rows; ++i) {
        b(i, j) = gen::uniform(rng, -3, 3);
        sum += b(i, j);
        sq += LD(b(i, j)) * b(i, j);
      }
      const LD mu = sum / rows;
      const LD var = sq / rows - mu * mu;
      want += 0.5L * (mu * mu + var - std::log(var) - 1.0L);
    }
    EXPECT_NEAR(loss_kl(b), static_cast<double>(want), 1e-9);
  }
}

TEST(GradCheck, TinyModelsWithAndWithoutMemory) {
  gen::Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const bool memory = trial % 2 == 0;
    const ScorerArch a = tiny_arch(memory, rng);
    const auto m = init_scorer(a, static_cast<std::uint64_t>(100 + trial));
    const auto ex = tiny_example(rng, a.input_dim);
    LossWeights w;
    w.margin = 0.5;
    EXPECT_LT(grad_check(m, ex, w), 1e-4) << "trial " << trial << " memory " << memory;
  }
}

TEST(GradCheck, ZeroLossConfigurationIsExactlyZero) {
  gen::Rng rng(2);
  const ScorerArch a = tiny_arch(true, rng);
  const auto m = init_scorer(a, 1);
  LossWeights w{0.0, 0.0, 0.0, 1.0};
  EXPECT_EQ(grad_check(m, tiny_example(rng, a.input_dim), w), 0.0);
}

TEST(Train, LogisticBaselineMatchesStandaloneTrajectory) {
  gen::Rng rng(12);
  std::vector<TrainingExample> data;
  for (int v = 0; v < 12; ++v) {
    FrameLabels l = gen::bursts(rng, gen::between(rng, 10, 40));
    data.push_back({gen::separable_features(rng, l, 4, 0.8, "v" + std::to_string(v)), l});
  }
  TrainConfig cfg;
  cfg.arch.input_dim = 4;
  cfg.arch.encoder = false;
  cfg.arch.memory_slots = 0;
  cfg.weights.triplet = 0.0;
  cfg.weights.kl = 0.0;
  cfg.optimizer = OptimizerKind::sgd_momentum;
  cfg.learning_rate = 0.05;
  cfg.momentum = 0.9;
  cfg.epochs = 15;
  cfg.batch_size = 5;
  cfg.seed = 77;
  const auto got = train(data, cfg);

  // independent logistic regression with heavy-ball momentum
  const auto init = init_scorer(cfg.arch, cfg.seed);
  std::vector<LD> w(5, 0.0L), vel(5, 0.0L);
  for (int k = 0; k < 4; ++k) w[k] = init.params.head_w[k];
  w[4] = init.params.head_b;
  std::vector<double> curve;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = training_order(data.size(), cfg.seed, epoch);
    LD epoch_sum = 0;
    for (std::size_t b = 0; b < order.size(); b += 5) {
      const std::size_t e = std::min(order.size(), b + 5);
      std::vector<LD> g(5, 0.0L);
      for (std::size_t k = b; k < e; ++k) {
        const auto& ex = data[order[k]];
        const auto& x = ex.features.features;
        LD loss = 0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          LD z = w[4];
          for (int c = 0; c < 4; ++c) z += w[c] * x(i, c);
          const LD s = 1.0L / (1.0L + std::exp(-z));
          const LD y = ex.labels.labels[static_cast<std::size_t>(i)];
          loss -= y * std::log(s) + (1 - y) * std::log(1 - s);
          for (int c = 0; c < 4; ++c) g[c] += (s - y) * x(i, c) / x.rows();
          g[4] += (s - y) / x.rows();
        }
        epoch_sum += loss / x.rows();
      }
      for (int c = 0; c < 5; ++c) {
        vel[c] = 0.9L * vel[c] + g[c] / (e - b);
        w[c] -= 0.05L * vel[c];
      }
    }
    curve.push_back(static_cast<double>(epoch_sum / data.size()));
  }
  ASSERT_EQ(got.epoch_loss.size(), curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) EXPECT_NEAR(got.epoch_loss[i], curve[i], 1e-6) << "epoch " << i;
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(got.model.params.head_w[c], static_cast<double>(w[c]), 1e-6);
}

TEST(Train, AllNormalDataDrivesScoresDown) {
  gen::Rng rng(6);
  std::vector<TrainingExample> data;
  for (int v = 0; v < 6; ++v) {
    FrameLabels l;
    l.labels.assign(20, 0);
    data.push_back({gen::separable_features(rng, l, 3, 1.0, "n" + std::to_string(v)), l});
  }
  TrainConfig cfg;
  cfg.arch.input_dim = 3;
  cfg.arch.encoder = false;
  cfg.arch.memory_slots = 0;
  cfg.learning_rate = 0.1;
  cfg.epochs = 600;
  cfg.seed = 1;
  const auto r = train(data, cfg);
  EXPECT_LT(r.epoch_loss.back(), 0.01);
  EXPECT_LT(score(r.model, data[0].features).scores.maxCoeff(), 0.05);
}

TEST(Train, RepeatRunIsBitIdentical) {
  gen::Rng rng(13);
  std::vector<TrainingExample> data;
  for (int v = 0; v < 5; ++v) {
    FrameLabels l = gen::bursts(rng, 30);
    data.push_back({gen::separable_features(rng, l, 8, 1.0, "v" + std::to_string(v)), l});
  }
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 2;
  cfg.seed = 42;
  const auto a = train(data, cfg), b = train(data, cfg);
  EXPECT_EQ(serialize_model(a.model), serialize_model(b.model));
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  cfg.seed = 43;
  EXPECT_NE(serialize_model(train(data, cfg).model), serialize_model(a.model));
}

TEST(Train, RejectsBadConfiguration) {
  std::vector<TrainingExample> data{{FeatureSequence{"v", Eigen::MatrixXd::Zero(3, 8)}, FrameLabels{{0, 1, 0}}}};
  TrainConfig cfg;
  EXPECT_THROW(train({}, cfg), ValidationError);
  cfg.learning_rate = 0.0;
  EXPECT_THROW(train(data, cfg), ParameterError);
  cfg.learning_rate = 1e-3;
  cfg.weights.kl = -1.0;
  EXPECT_THROW(train(data, cfg), ParameterError);
  cfg.weights.kl = 1.0;
  data[0].labels.labels.pop_back();
  EXPECT_THROW(train(data, cfg), ValidationError);
}

TEST(Train, DivergenceKeepsLastFiniteModel) {
  std::vector<TrainingExample> data;
  Eigen::MatrixXd x(4, 2);
  x << 1e3, -1e3, 2e3, 5e2, -1e3, 1e3, 3e3, 3e3;
  data.push_back({FeatureSequence{"v", x}, FrameLabels{{1, 0, 1, 0}}});
  TrainConfig cfg;
  cfg.arch.input_dim = 2;
  cfg.arch.encoder = false;
  cfg.arch.memory_slots = 0;
  cfg.optimizer = OptimizerKind::sgd_momentum;
  cfg.learning_rate = 1e306;
  cfg.epochs = 5;
  try {
    train(data, cfg);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_TRUE(e.last_finite().params.flatten().allFinite());
  }
}

TEST(Checkpoint, RoundTripIsBitExact) {
  ScorerArch a;
  a.window = 3;
  a.memory_slots = 4;
  a.local_attention = false;
  const auto m = init_scorer(a, 0xDEADBEEF);
  const auto back = deserialize_model(serialize_model(m));
  EXPECT_EQ(back.arch.window, 3);
  EXPECT_FALSE(back.arch.local_attention);
  EXPECT_EQ(back.seed, 0xDEADBEEFu);
  EXPECT_EQ(serialize_model(back), serialize_model(m));

  const auto p = std::filesystem::temp_directory_path() / "vau_scorer_ckpt.bin";
  TrainConfig cfg;
  save_model(p, m, &cfg);
  EXPECT_EQ(serialize_model(load_model(p)), serialize_model(m));
  const auto manifest = io::read_file(p.string() + ".json");
  EXPECT_NE(manifest.find("\"memory_slots\""), std::string::npos);

  std::string blob = serialize_model(m);
  EXPECT_THROW(deserialize_model(blob.substr(0, blob.size() - 3)), ValidationError);
  blob[0] = 'X';
  EXPECT_THROW(deserialize_model(blob), ValidationError);
}
