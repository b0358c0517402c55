#include "eatspeed/inference.hpp"
#include "eatspeed/model.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace eatspeed {
namespace {

using MatD = RowMatrix<double>;

MatD random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  MatD m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.channels = 4;
  cfg.heads = 2;
  cfg.head_dim = 3;
  cfg.fcn_hidden = 5;
  cfg.seed = 17;
  return cfg;
}

TEST(ModelConfig, DefaultsAndReceptiveField) {
  ModelConfig cfg;
  EXPECT_EQ(cfg.d_model(), 128);
  EXPECT_EQ(cfg.receptive_field(), 1023);
  EXPECT_NO_THROW(cfg.validate());
  cfg.kernel_size = 4;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Network, ParameterCountNearBudget) {
  const Network<float> net(ModelConfig{});
  const double count = static_cast<double>(net.parameter_count());
  EXPECT_GE(count, 0.8 * 203000);
  EXPECT_LE(count, 1.2 * 203000);
}

TEST(Network, ShapesWithDefaults) {
  const Network<float> net(ModelConfig{});
  std::mt19937_64 rng(1);
  const RowMatrix<float> x = random_matrix(960, 6, rng).cast<float>();
  const auto features = net.tcn_forward(x, Mode::kEval);
  EXPECT_EQ(features.rows(), 960);
  EXPECT_EQ(features.cols(), 64);
  const auto attended = net.mha_forward(features, 960);
  EXPECT_EQ(attended.rows(), 960);
  EXPECT_EQ(attended.cols(), 128);
  const auto probs = net.fcn_forward(attended);
  EXPECT_EQ(probs.rows(), 960);
  EXPECT_EQ(probs.cols(), 3);
  EXPECT_LT((probs.rowwise().sum().array() - 1.0f).abs().maxCoeff(), 1e-5f);
}

// Span of output frames that react to a perturbation of one input frame.
Eigen::Index dependency_span(const Network<double>& net, Eigen::Index frames, Eigen::Index probe) {
  std::mt19937_64 rng(99);
  MatD x = random_matrix(frames, 6, rng);
  const auto base = net.tcn_forward(x, Mode::kEval);
  x.row(probe).array() += 0.5;
  const auto moved = net.tcn_forward(x, Mode::kEval);
  Eigen::Index lo = frames, hi = -1;
  for (Eigen::Index t = 0; t < frames; ++t) {
    if ((moved.row(t) - base.row(t)).cwiseAbs().maxCoeff() > 0.0) {
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  }
  EXPECT_LE(lo, probe);
  EXPECT_GE(hi, probe);
  return hi - lo + 1;
}

TEST(Network, ReceptiveFieldProbe) {
  for (int layers = 1; layers <= 9; ++layers) {
    ModelConfig cfg;
    cfg.layers = layers;
    cfg.channels = 16;
    cfg.seed = static_cast<std::uint64_t>(layers);
    const Network<double> net(cfg);
    const long rf = 1 + 2 * ((1L << layers) - 1);
    EXPECT_EQ(cfg.receptive_field(), rf);
    const Eigen::Index frames = rf + 40;
    EXPECT_EQ(dependency_span(net, frames, frames / 2), rf) << "L=" << layers;
  }
}

TEST(Network, SingleLayerSeesThreeFrames) {
  ModelConfig cfg;
  cfg.layers = 1;
  const Network<double> net(cfg);
  std::mt19937_64 rng(5);
  MatD x = random_matrix(20, 6, rng);
  const auto base = net.tcn_forward(x, Mode::kEval);
  x.row(10).setConstant(3.0);
  const auto moved = net.tcn_forward(x, Mode::kEval);
  for (Eigen::Index t = 0; t < 20; ++t) {
    const bool changed = (moved.row(t) - base.row(t)).cwiseAbs().maxCoeff() > 0.0;
    EXPECT_EQ(changed, t >= 9 && t <= 11) << t;
  }
}

TEST(Network, DefaultReceptiveFieldIsPlusMinus511) {
  ModelConfig cfg;
  cfg.channels = 16;
  const Network<double> net(cfg);
  EXPECT_EQ(dependency_span(net, 1100, 550), 1023);
}

// Sinusoidal encoding written out independently of the library.
MatD reference_encoding(Eigen::Index frames, int dim) {
  MatD pe(frames, dim);
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (int i = 0; i < dim / 2; ++i) {
      const double angle = t / std::pow(10000.0, 2.0 * i / dim);
      pe(t, 2 * i) = std::sin(angle);
      if (2 * i + 1 < dim) pe(t, 2 * i + 1) = std::cos(angle);
    }
  }
  return pe;
}

MatD softmax(const MatD& s) {
  MatD out(s.rows(), s.cols());
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const auto e = (s.row(r).array() - s.row(r).maxCoeff()).exp();
    out.row(r) = e / e.sum();
  }
  return out;
}

TEST(Attention, SingleHeadMatchesDirectFormula) {
  ModelConfig cfg;
  cfg.channels = 8;
  cfg.heads = 1;
  cfg.head_dim = 6;
  cfg.seed = 4;
  Network<double> net(cfg);
  std::mt19937_64 rng(8);
  const MatD x1 = random_matrix(12, 8, rng);
  const MatD x = x1 + reference_encoding(12, 8);
  auto value_of = [&](const std::string& name) -> const MatD& { return net.parameter(name).value; };
  MatD q = x * value_of("mha.query.weight");
  q.rowwise() += value_of("mha.query.bias").row(0);
  MatD k = x * value_of("mha.key.weight");
  k.rowwise() += value_of("mha.key.bias").row(0);
  MatD v = x * value_of("mha.value.weight");
  v.rowwise() += value_of("mha.value.bias").row(0);
  const MatD att = softmax(q * k.transpose() / std::sqrt(6.0));
  MatD expected = att * v * value_of("mha.output.weight");
  expected.rowwise() += value_of("mha.output.bias").row(0);
  const auto got = net.mha_forward(x1, 12);
  EXPECT_LT((got - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Attention, PositionalEncodingMatchesReference) {
  EXPECT_LT((positional_encoding(50, 16) - reference_encoding(50, 16)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Attention, WeightRowsSumToOne) {
  const Network<double> net(tiny_config());
  std::mt19937_64 rng(9);
  MhaCache<double> cache;
  net.mha_forward(random_matrix(30, 4, rng, 3.0), 30, &cache);
  ASSERT_EQ(cache.attention.size(), 2u);
  for (const auto& a : cache.attention) {
    EXPECT_LT((a.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-6);
    EXPECT_GE(a.minCoeff(), 0.0);
  }
}

TEST(Attention, PaddedKeysGetNoWeight) {
  const Network<double> net(tiny_config());
  std::mt19937_64 rng(10);
  MatD x = random_matrix(20, 4, rng);
  const auto masked = net.mha_forward(x, 12);
  x.bottomRows(8).setConstant(50.0);
  const auto changed = net.mha_forward(x, 12);
  EXPECT_LT((masked.topRows(12) - changed.topRows(12)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Classifier, ZeroWeightsGiveUniform) {
  Network<double> net(tiny_config());
  for (const char* name : {"fcn.hidden.weight", "fcn.hidden.bias", "fcn.output.weight", "fcn.output.bias"}) {
    net.parameter(name).value.setZero();
  }
  std::mt19937_64 rng(11);
  const auto probs = net.fcn_forward(random_matrix(7, 6, rng));
  EXPECT_EQ(probs.cols(), 3);
  EXPECT_LT((probs.array() - 1.0 / 3.0).abs().maxCoeff(), 1e-15);
}

TEST(Network, OutputsAreDistributionsUnderLargeInputs) {
  ModelConfig cfg;
  cfg.channels = 16;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    cfg.seed = seed;
    const Network<float> net(cfg);
    std::mt19937_64 rng(seed);
    const RowMatrix<float> x = random_matrix(200, 6, rng, 10.0).cast<float>();
    const auto probs = softmax_rows<float>(net.forward(x, Mode::kEval, 200));
    ASSERT_TRUE(probs.allFinite());
    EXPECT_GE(probs.minCoeff(), 0.0f);
    EXPECT_LE(probs.maxCoeff(), 1.0f);
    EXPECT_LT((probs.rowwise().sum().array() - 1.0f).abs().maxCoeff(), 1e-5f);
  }
}

TEST(Network, ConstantInputGivesConstantFeaturesAwayFromEdges) {
  ModelConfig cfg;
  cfg.layers = 3;
  const Network<double> net(cfg);
  const auto features = net.tcn_forward(MatD::Zero(100, 6), Mode::kEval);
  const Eigen::Index reach = (cfg.receptive_field() - 1) / 2;
  for (Eigen::Index t = reach; t < 100 - reach; ++t) {
    EXPECT_LT((features.row(t) - features.row(reach)).cwiseAbs().maxCoeff(), 1e-12) << t;
  }
}

TEST(Network, DropoutOnlyInTrainMode) {
  const Network<double> net(tiny_config());
  std::mt19937_64 rng(12);
  const MatD x = random_matrix(25, 6, rng);
  EXPECT_EQ(net.tcn_forward(x, Mode::kEval), net.tcn_forward(x, Mode::kEval));
  std::mt19937_64 a(1), b(2);
  EXPECT_NE(net.tcn_forward(x, Mode::kTrain, &a), net.tcn_forward(x, Mode::kTrain, &b));
  EXPECT_THROW(net.forward(x, Mode::kTrain, 25), Error);
}

TEST(Loss, OneHotConstantIsZero) {
  ModelConfig cfg;
  MatD logits(4, 3);
  logits.setConstant(-1000.0);
  logits.col(1).setConstant(1000.0);
  const auto v = sequence_loss<double>(logits, {1, 1, 1, 1}, 4, cfg);
  EXPECT_NEAR(v.cross_entropy, 0.0, 1e-12);
  EXPECT_NEAR(v.smoothing, 0.0, 1e-12);
}

TEST(Loss, UniformIsLn3) {
  ModelConfig cfg;
  const auto v = sequence_loss<double>(MatD::Zero(5, 3), {0, 1, 2, 2, 0}, 5, cfg);
  EXPECT_NEAR(v.cross_entropy, std::log(3.0), 1e-12);
  EXPECT_NEAR(v.total, std::log(3.0), 1e-12);
}

TEST(Loss, PaddingIsIgnored) {
  ModelConfig cfg;
  std::mt19937_64 rng(13);
  MatD logits = random_matrix(6, 3, rng);
  const auto a = sequence_loss<double>(logits, {0, 1, 2, 0, 0, 0}, 3, cfg);
  logits.bottomRows(3).setConstant(40.0);
  const auto b = sequence_loss<double>(logits, {0, 1, 2, 1, 2, 1}, 3, cfg);
  EXPECT_DOUBLE_EQ(a.total, b.total);
}

TEST(Loss, AllMaskedThrows) {
  ModelConfig cfg;
  EXPECT_THROW(sequence_loss<double>(MatD::Zero(3, 3), {0, 0, 0}, 0, cfg), Error);
}

TEST(Loss, SmoothingIsTruncatedAtTau) {
  ModelConfig cfg;
  MatD logits(2, 3);
  logits << 0, 0, 0, 100, 0, 0;
  const auto v = sequence_loss<double>(logits, {0, 0}, 2, cfg);
  // Class 0 moves by about ln 3 (< tau); classes 1 and 2 drop by ~100 (> tau).
  const double d0 = std::log(3.0);
  EXPECT_NEAR(v.smoothing, (d0 * d0 + 2 * 16.0) / 3.0, 1e-9);
}

TEST(Loss, GradientMatchesFiniteDifferencesOnLogits) {
  ModelConfig cfg;
  cfg.smoothing_lambda = 0.5;
  std::mt19937_64 rng(14);
  MatD logits = random_matrix(3, 3, rng, 2.0);
  const std::vector<std::uint8_t> y{0, 2, 1};
  MatD grad;
  sequence_loss<double>(logits, y, 3, cfg, &grad);
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double h = test::fd_step(logits.data()[i]);
    MatD plus = logits, minus = logits;
    plus.data()[i] += h;
    minus.data()[i] -= h;
    const double fd =
        (sequence_loss<double>(plus, y, 3, cfg).total - sequence_loss<double>(minus, y, 3, cfg).total) / (2 * h);
    EXPECT_LT(test::relative_error(grad.data()[i], fd), 1e-4) << i;
  }
}

double total_loss(const Network<double>& net, const MatD& x, const std::vector<std::uint8_t>& y) {
  return sequence_loss<double>(net.forward(x, Mode::kEval, x.rows()), y, x.rows(), net.config()).total;
}

TEST(Network, GradientMatchesFiniteDifferences) {
  auto cfg = tiny_config();
  cfg.smoothing_lambda = 0.5;
  Network<double> net(cfg);
  std::mt19937_64 rng(15);
  const MatD x = random_matrix(3, 6, rng);
  const std::vector<std::uint8_t> y{1, 0, 2};

  ForwardCache<double> cache;
  const auto logits = net.forward(x, Mode::kEval, 3, nullptr, &cache);
  MatD grad_logits;
  sequence_loss<double>(logits, y, 3, cfg, &grad_logits);
  net.zero_grad();
  const MatD grad_x = net.backward_with_input(cache, grad_logits);

  double worst = 0.0;
  for (auto& p : net.parameters()) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const double keep = p.value.data()[i];
      const double h = test::fd_step(keep);
      p.value.data()[i] = keep + h;
      const double up = total_loss(net, x, y);
      p.value.data()[i] = keep - h;
      const double down = total_loss(net, x, y);
      p.value.data()[i] = keep;
      const double err = test::relative_error(p.grad.data()[i], (up - down) / (2 * h));
      worst = std::max(worst, err);
      EXPECT_LT(err, 1e-4) << p.name << "[" << i << "]";
    }
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    MatD plus = x, minus = x;
    const double h = test::fd_step(x.data()[i]);
    plus.data()[i] += h;
    minus.data()[i] -= h;
    const double fd = (total_loss(net, plus, y) - total_loss(net, minus, y)) / (2 * h);
    EXPECT_LT(test::relative_error(grad_x.data()[i], fd), 1e-4) << "input " << i;
  }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(Network, FloatAndDoubleAgree) {
  ModelConfig cfg = tiny_config();
  const Network<double> d(cfg);
  Network<float> f(cfg);
  f.copy_values_from(d);
  std::mt19937_64 rng(16);
  const MatD x = random_matrix(40, 6, rng);
  const auto a = d.forward(x, Mode::kEval, 40);
  const MatD b = f.forward(x.cast<float>(), Mode::kEval, 40).cast<double>();
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Inference, PerHandLengthsMatchInput) {
  ModelConfig cfg;
  cfg.channels = 16;
  cfg.window_frames = 160;
  Checkpoint ckpt = Checkpoint::from_network(Network<float>(cfg), NormStats{});
  std::mt19937_64 rng(17);
  const Recording rec{"P", "D", test::random_series(Hand::kRight, 64 * 25 + 3, 64.0, rng, 3.0),
                      test::random_series(Hand::kLeft, 64 * 25 + 3, 64.0, rng, 3.0)};
  const auto out = predict(rec, ckpt);
  EXPECT_EQ(out.right.size(), 400);
  EXPECT_EQ(out.left.size(), 400);
  EXPECT_DOUBLE_EQ(out.right.start_s, 3.0);
  EXPECT_EQ(out.left.hand, Hand::kLeft);
  EXPECT_NO_THROW(validate(out.right));
  EXPECT_NO_THROW(validate(out.left));
  const auto single = predict_hand(rec, ckpt, Hand::kLeft);
  EXPECT_EQ(single.size(), 400);
}

TEST(Inference, OneHotIsValid) {
  const auto p = one_hot(LabelSequence({0, 1, 2, 2}, 16.0), 1.0, Hand::kRight);
  EXPECT_NO_THROW(validate(p));
  EXPECT_EQ(p.probs(2, 2), 1.0);
  EXPECT_EQ(p.probs(0, 0), 1.0);
}

}  // namespace
}  // namespace eatspeed
