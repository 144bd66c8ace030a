#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "autobias/cnn.hpp"

using namespace autobias;

namespace {

constexpr std::size_t kInputSize = static_cast<std::size_t>(kClassifierSide) * kClassifierSide;

std::vector<double> random_input(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(kInputSize);
  for (double& v : x) v = u(rng);
  return x;
}

double loss_of(const CnnParams<double>& p, const std::vector<double>& x, int label) {
  const Logits z = forward(p, std::span<const double>(x));
  const double m = std::max(z.no_flicker, z.flicker);
  const double lse = m + std::log(std::exp(z.no_flicker - m) + std::exp(z.flicker - m));
  return lse - (label == 1 ? z.flicker : z.no_flicker);
}

// Frames whose classes differ only by a global offset, plus noise.
FrameSet offset_corpus(int per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-0.5, 0.5);
  FrameSet set;
  for (int i = 0; i < 2 * per_class; ++i) {
    const int label = i % 2;
    EventFrame f(32, 32);
    for (double& v : f.data) v = noise(rng) + (label == 1 ? 1.0 : -1.0);
    set.add(f, label);
  }
  return set;
}

}  // namespace

TEST(Cnn, ShapeTableMatchesTheArchitecture) {
  const auto s = cnn_shapes();
  EXPECT_EQ(s[0].dims, (std::vector<std::uint32_t>{16, 1, 3, 3}));
  EXPECT_EQ(s[2].dims, (std::vector<std::uint32_t>{32, 16, 3, 3}));
  EXPECT_EQ(s[4].dims, (std::vector<std::uint32_t>{64, 32, 3, 3}));
  EXPECT_EQ(s[6].dims, (std::vector<std::uint32_t>{32, 64 * 28 * 28}));
  EXPECT_EQ(s[8].dims, (std::vector<std::uint32_t>{16, 32}));
  EXPECT_EQ(s[10].dims, (std::vector<std::uint32_t>{2, 16}));
  EXPECT_EQ(kFlattenSize, 50176);
  const CnnParams<float> p;
  EXPECT_EQ(p.parameter_count(), 160u + 4640u + 18496u + 1605664u + 528u + 34u);
}

TEST(Cnn, ZeroNetworkGivesZeroLogits) {
  const CnnParams<double> p;
  const auto x = random_input(1);
  const Logits z = forward(p, std::span<const double>(x));
  EXPECT_EQ(z.no_flicker, 0.0);
  EXPECT_EQ(z.flicker, 0.0);
  EXPECT_EQ(classify(p, EventFrame(64, 64)), Verdict::no_flicker);
}

TEST(Cnn, LayerShapes) {
  const CnnParams<float> p = init_params<float>(3);
  const auto x = random_input(2);
  const std::vector<float> xf(x.begin(), x.end());
  ForwardCache<float> c;
  forward(p, std::span<const float>(xf), &c);
  EXPECT_EQ(c.act[0].size(), 16u * 224 * 224);
  EXPECT_EQ(c.pooled[0].size(), 16u * 112 * 112);
  EXPECT_EQ(c.act[1].size(), 32u * 112 * 112);
  EXPECT_EQ(c.pooled[1].size(), 32u * 56 * 56);
  EXPECT_EQ(c.act[2].size(), 64u * 56 * 56);
  EXPECT_EQ(c.pooled[2].size(), 64u * 28 * 28);
  EXPECT_EQ(c.hidden[0].size(), 32u);
  EXPECT_EQ(c.hidden[1].size(), 16u);
}

TEST(Cnn, WrongInputShapeIsRejected) {
  const CnnParams<float> p;
  const std::vector<float> small(223 * 224, 0.0f);
  EXPECT_THROW(forward(p, std::span<const float>(small)), ContractViolation);
  const std::vector<float> big(kInputSize + 1, 0.0f);
  EXPECT_THROW(forward(p, std::span<const float>(big)), ContractViolation);
}

TEST(Cnn, SinglePixelReceptiveField) {
  // Channel 0 passes straight through conv2, conv3 and the dense layers, so the
  // flicker logit reads one pooled cell: the max over its 8x8 input block of
  // the conv1 response.
  CnnParams<double> p;
  const double k[9] = {0.1, -0.2, 0.3, 0.0, 0.5, 0.9, -0.4, 0.2, 0.05};
  std::copy(k, k + 9, p.conv_w(0).begin());
  p.conv_w(1)[4] = 1.0;  // out 0, in 0, centre tap
  p.conv_w(2)[4] = 1.0;
  const int cell_y = 2, cell_x = 3;
  p.fc_w(0)[cell_y * 28 + cell_x] = 1.0;  // hidden 0 <- flatten (ch 0, 2, 3)
  p.fc_w(1)[0] = 1.0;
  p.fc_w(2)[kHidden2 + 0] = 1.0;  // flicker logit <- hidden2[0]

  const double v = 0.8;
  // Bump inside the block (rows 16..23, cols 24..31), away from its edges.
  std::vector<double> x(kInputSize, 0.0);
  x[19 * 224 + 27] = v;
  Logits z = forward(p, std::span<const double>(x));
  // conv1 output at (y, x) picks up k[(19 - y + 1) * 3 + (27 - x + 1)] * v for
  // |y - 19|, |x - 27| <= 1; the largest positive tap is 0.9.
  EXPECT_DOUBLE_EQ(z.flicker, 0.9 * v);
  EXPECT_EQ(z.no_flicker, 0.0);

  // Bump next to the block: only taps that reach into it count.
  std::fill(x.begin(), x.end(), 0.0);
  x[19 * 224 + 23] = v;  // column 23 sits just left of the block
  z = forward(p, std::span<const double>(x));
  // Output column 24 sees the bump through the kx = 0 column of the kernel
  // (k[0], k[3], k[6]); the largest is 0.1.
  EXPECT_DOUBLE_EQ(z.flicker, 0.1 * v);

  std::fill(x.begin(), x.end(), 0.0);
  x[100 * 224 + 100] = v;  // far away
  EXPECT_EQ(forward(p, std::span<const double>(x)).flicker, 0.0);
}

TEST(Cnn, GradientMatchesFiniteDifferences) {
  CnnParams<double> p = init_params<double>(5);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> small(-0.05, 0.05);
  for (int l = 0; l < 3; ++l)
    for (double& b : p.conv_b(l)) b = small(rng);
  for (int l = 0; l < 3; ++l)
    for (double& b : p.fc_b(l)) b = small(rng);
  const auto x = random_input(7);

  for (int label : {0, 1}) {
    ForwardCache<double> cache;
    forward(p, std::span<const double>(x), &cache);
    CnnParams<double> grad;
    backward(p, cache, label, 1.0, grad);

    int checked = 0;
    for (std::size_t t = 0; t < kTensorCount; ++t) {
      // Pick parameters whose gradient is not negligible, so the relative error is meaningful.
      std::vector<std::size_t> candidates;
      for (std::size_t i = 0; i < grad.tensors[t].size(); ++i)
        if (std::abs(grad.tensors[t][i]) > 1e-5) candidates.push_back(i);
      ASSERT_FALSE(candidates.empty()) << "tensor " << t;
      std::shuffle(candidates.begin(), candidates.end(), rng);
      for (std::size_t j = 0; j < std::min<std::size_t>(3, candidates.size()); ++j) {
        const std::size_t i = candidates[j];
        const double w = p.tensors[t][i];
        const double h = 1e-6 * std::max(1.0, std::abs(w));
        p.tensors[t][i] = w + h;
        const double up = loss_of(p, x, label);
        p.tensors[t][i] = w - h;
        const double down = loss_of(p, x, label);
        p.tensors[t][i] = w;
        const double numeric = (up - down) / (2.0 * h);
        const double analytic = grad.tensors[t][i];
        const double rel = std::abs(numeric - analytic) / std::max(std::abs(numeric), std::abs(analytic));
        EXPECT_LE(rel, 1e-3) << "tensor " << cnn_shapes()[t].name << " index " << i;
        ++checked;
      }
    }
    EXPECT_GE(checked, 20);
  }
}

TEST(Cnn, LossMatchesSoftmaxCrossEntropy) {
  const CnnParams<double> p = init_params<double>(9);
  const auto x = random_input(10);
  ForwardCache<double> cache;
  const Logits z = forward(p, std::span<const double>(x), &cache);
  CnnParams<double> grad;
  const double loss = backward(p, cache, 1, 1.0, grad);
  const double expected = -std::log(std::exp(z.flicker) / (std::exp(z.flicker) + std::exp(z.no_flicker)));
  EXPECT_NEAR(loss, expected, 1e-12);
}

TEST(Cnn, VerdictFromLogits) {
  EXPECT_EQ(verdict_from_logits({0.0, 0.0}), Verdict::no_flicker);
  EXPECT_EQ(verdict_from_logits({-1.0, 2.0}), Verdict::flicker);
  EXPECT_EQ(verdict_from_logits({2.0, -1.0}), Verdict::no_flicker);
}

TEST(Cnn, InitIsSeededKaimingUniform) {
  const CnnParams<float> a = init_params<float>(4), b = init_params<float>(4), c = init_params<float>(5);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
  const auto shapes = cnn_shapes();
  for (std::size_t t = 0; t < kTensorCount; t += 2) {
    const double bound = std::sqrt(6.0 / static_cast<double>(shapes[t].size() / shapes[t].dims[0]));
    for (float w : a.tensors[t]) EXPECT_LE(std::abs(w), bound);
    for (float v : a.tensors[t + 1]) EXPECT_EQ(v, 0.0f);
  }
}

TEST(Adam, FirstStepMovesEachWeightByTheLearningRate) {
  TrainConfig cfg;
  CnnParams<double> p = init_params<double>(1);
  const CnnParams<double> before = p;
  CnnParams<double> g;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& t : g.tensors)
    for (double& v : t) v = u(rng);
  Adam<double> adam(cfg);
  adam.step(p, g);
  for (std::size_t t = 0; t < kTensorCount; ++t)
    for (std::size_t i = 0; i < p.tensors[t].size(); i += 97) {
      const double gi = g.tensors[t][i];
      EXPECT_NEAR(p.tensors[t][i], before.tensors[t][i] - 1e-3 * gi / (std::abs(gi) + 1e-8), 1e-12);
    }
}

TEST(Train, OffsetCorpusIsLearnedWithinThirtyEpochs) {
  const FrameSet train_set = offset_corpus(16, 1);
  const FrameSet val_set = offset_corpus(8, 2);
  TrainConfig cfg;
  const TrainResult r = train(train_set, val_set, cfg);
  ASSERT_FALSE(r.history.empty());
  EXPECT_LE(r.history.size(), 30u);
  bool perfect = false;
  for (const auto& e : r.history) perfect = perfect || e.train_accuracy == 1.0;
  EXPECT_TRUE(perfect);
  EXPECT_EQ(accuracy(r.params, train_set), 1.0);
  EXPECT_EQ(r.best_val_accuracy, 1.0);
  EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss);
}

TEST(Train, FixedSeedIsBitwiseReproducible) {
  const FrameSet train_set = offset_corpus(4, 3);
  const FrameSet val_set = offset_corpus(2, 4);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  const TrainResult a = train(train_set, val_set, cfg);
  const TrainResult b = train(train_set, val_set, cfg);
  EXPECT_TRUE(a.params == b.params);
  cfg.seed = 2;
  EXPECT_FALSE(train(train_set, val_set, cfg).params == a.params);
}

TEST(Train, RejectsUnbalancedOrEmptyCorpora) {
  FrameSet unbalanced = offset_corpus(3, 5);
  unbalanced.add(EventFrame(32, 32), 1);
  const FrameSet ok = offset_corpus(2, 6);
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train(unbalanced, ok, cfg), ContractViolation);
  EXPECT_THROW(train(FrameSet{}, ok, cfg), ContractViolation);
  EXPECT_THROW(train(ok, FrameSet{}, cfg), ContractViolation);
  cfg.epochs = 0;
  EXPECT_THROW(train(ok, ok, cfg), ContractViolation);
}

TEST(Cnn1, RoundTripAndHeader) {
  const CnnParams<float> p = init_params<float>(8);
  std::stringstream buf;
  write_cnn(buf, p);
  const std::string bytes = buf.str();
  ASSERT_GE(bytes.size(), 8u);
  EXPECT_EQ(bytes.substr(0, 4), "CNN1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 12);
  EXPECT_EQ(bytes[5], 0);
  // conv1.weight: rank 4, dims 16 1 3 3
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 4);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 16);
  std::size_t table = 8;
  for (const auto& s : cnn_shapes()) table += 4 + 4 * s.dims.size();
  EXPECT_EQ(bytes.size(), table + 4 * p.parameter_count());
  std::stringstream in(bytes);
  EXPECT_TRUE(read_cnn(in) == p);
}

TEST(Cnn1, BadStreamsAreRejected) {
  const CnnParams<float> p = init_params<float>(8);
  std::stringstream buf;
  write_cnn(buf, p);
  std::string bytes = buf.str();

  std::stringstream truncated(bytes.substr(0, bytes.size() - 1));
  EXPECT_THROW(read_cnn(truncated), ContractViolation);
  std::string bad_magic = bytes;
  bad_magic[3] = '2';
  std::stringstream m(bad_magic);
  EXPECT_THROW(read_cnn(m), ContractViolation);
  std::string bad_shape = bytes;
  bad_shape[12] = 17;
  std::stringstream s(bad_shape);
  EXPECT_THROW(read_cnn(s), ContractViolation);
  EXPECT_THROW(load_cnn("/nonexistent/model.cnn1"), ContractViolation);
}
