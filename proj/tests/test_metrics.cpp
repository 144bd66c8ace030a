#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "autobias/metrics.hpp"

using namespace autobias;

namespace {

// Literal reading of the average-gradient definition, written without
// sharing code with the library: d/dx from the neighbouring samples, halved
// when both neighbours exist.
double literal_ag(const std::vector<std::vector<double>>& f) {
  const std::size_t rows = f.size();
  const std::size_t cols = f[0].size();
  auto dx = [&](std::size_t r, std::size_t c) {
    const std::size_t lo = c == 0 ? 0 : c - 1;
    const std::size_t hi = c + 1 == cols ? c : c + 1;
    return (f[r][hi] - f[r][lo]) / static_cast<double>(hi - lo);
  };
  auto dy = [&](std::size_t r, std::size_t c) {
    const std::size_t lo = r == 0 ? 0 : r - 1;
    const std::size_t hi = r + 1 == rows ? r : r + 1;
    return (f[hi][c] - f[lo][c]) / static_cast<double>(hi - lo);
  };
  double s = 0.0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) s += std::hypot(dx(r, c), dy(r, c));
  return s / static_cast<double>(rows * cols);
}

EventFrame to_frame(const std::vector<std::vector<double>>& f) {
  EventFrame out(static_cast<int>(f[0].size()), static_cast<int>(f.size()));
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) out.at(x, y) = f[y][x];
  return out;
}

EventFrame random_frame(std::mt19937_64& rng, int w, int h, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  EventFrame f(w, h);
  for (double& v : f.data) v = d(rng);
  return f;
}

std::vector<std::vector<double>> rows_of(const EventFrame& f) {
  std::vector<std::vector<double>> r(f.height, std::vector<double>(f.width));
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) r[y][x] = f.at(x, y);
  return r;
}

EventFrame checkerboard(int w, int h) {
  EventFrame c(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) c.at(x, y) = ((x + y) % 2 == 0) ? 1.0 : -1.0;
  return c;
}

}  // namespace

TEST(AverageGradient, UniformFrameIsZero) {
  for (double v : {0.0, 1.0, -3.5, 1e6}) {
    EventFrame f(9, 7);
    std::fill(f.data.begin(), f.data.end(), v);
    EXPECT_EQ(average_gradient(f), 0.0);
  }
}

TEST(AverageGradient, StepFrameMatchesCellByCellEvaluation) {
  // 4x4, columns 0-1 are 0 and columns 2-3 are 1.
  const std::vector<std::vector<double>> step = {{0, 0, 1, 1}, {0, 0, 1, 1}, {0, 0, 1, 1}, {0, 0, 1, 1}};
  // Per row: |d/dx| = 0 (one-sided, col 0), 0.5, 0.5, 0 (one-sided, col 3); d/dy = 0.
  const double by_hand = 4.0 * (0.0 + 0.5 + 0.5 + 0.0) / 16.0;
  EXPECT_DOUBLE_EQ(by_hand, 0.25);
  EXPECT_DOUBLE_EQ(literal_ag(step), by_hand);
  EXPECT_DOUBLE_EQ(average_gradient(to_frame(step)), by_hand);
}

TEST(AverageGradient, Homogeneity) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const EventFrame f = random_frame(rng, 17, 13, -5.0, 5.0);
    const double base = average_gradient(f);
    for (double a : {-3.0, -1.0, 0.0, 0.25, 2.0, 7.5}) {
      EventFrame g = f;
      for (double& v : g.data) v *= a;
      EXPECT_NEAR(average_gradient(g), std::abs(a) * base, 1e-12 * std::max(1.0, std::abs(a) * base));
    }
  }
}

TEST(AverageGradient, MatchesLiteralOracleOnRandomFrames) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> dim(3, 40);
  for (int i = 0; i < 150; ++i) {
    const EventFrame f = random_frame(rng, dim(rng), dim(rng), -4.0, 4.0);
    EXPECT_NEAR(average_gradient(f), literal_ag(rows_of(f)), 1e-9);
  }
}

TEST(AverageGradient, NonNegative) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 50; ++i) EXPECT_GE(average_gradient(random_frame(rng, 8, 8, -10.0, 10.0)), 0.0);
}

TEST(AverageGradient, CheckerboardPerturbationRaisesAg) {
  // A pixel-period checkerboard is invisible to central differences, so only
  // the one-sided border terms change; they grow whenever the perturbation
  // dominates the frame's own border differences.
  std::mt19937_64 rng(14);
  for (int i = 0; i < 200; ++i) {
    const EventFrame f = random_frame(rng, 16, 12, -0.45, 0.45);
    const EventFrame c = checkerboard(16, 12);
    EventFrame g = f;
    for (std::size_t k = 0; k < g.data.size(); ++k) g.data[k] += c.data[k];
    EXPECT_GT(average_gradient(g), average_gradient(f));
  }
  EXPECT_GT(average_gradient(checkerboard(10, 10)), 0.0);
}

TEST(AverageGradient, CheckerboardCanCancelAnOpposingFrame) {
  // Counterexample showing the perturbation property is not universal.
  const EventFrame c = checkerboard(8, 8);
  EventFrame f = c;
  for (double& v : f.data) v = -v;
  EventFrame g = f;
  for (std::size_t k = 0; k < g.data.size(); ++k) g.data[k] += c.data[k];
  EXPECT_LT(average_gradient(g), average_gradient(f));
}

TEST(AverageGradient, DegenerateFrameIsRejected) {
  EXPECT_THROW(average_gradient(EventFrame(2, 5)), ContractViolation);
  EXPECT_THROW(average_gradient(EventFrame(5, 2)), ContractViolation);
  EXPECT_NO_THROW(average_gradient(EventFrame(3, 3)));
}

TEST(DetectionSuccess, Ratios) {
  EXPECT_EQ(detection_success(0, 10), 0.0);
  EXPECT_EQ(detection_success(10, 10), 1.0);
  EXPECT_EQ(detection_success(7, 10), 0.7);
  EXPECT_THROW(detection_success(0, 0), ContractViolation);
  EXPECT_THROW(detection_success(11, 10), ContractViolation);
}

TEST(SummarizeSecond, CountsFlickerFrames) {
  std::vector<FrameRecord> frames(10);
  for (int i = 0; i < 6; ++i) frames[i].flicker = true;
  const SecondSummary s = summarize_second(frames, 35);
  EXPECT_EQ(s.flicker_frames, 6u);
  EXPECT_EQ(s.total_frames, 10u);
  EXPECT_EQ(s.bias_fo, 35);
}

TEST(SummarizeSecond, Means) {
  std::vector<FrameRecord> same(10);
  for (auto& f : same) f.ag = 0.37;
  EXPECT_DOUBLE_EQ(summarize_second(same, 0).mean_ag, 0.37);

  std::vector<FrameRecord> ramp(10);
  for (int i = 0; i < 10; ++i) {
    ramp[i].ag = i + 1;
    ramp[i].any_conf = 0.1 * i;
    ramp[i].target_conf = 0.05 * i;
    ramp[i].detected = i >= 3;
  }
  const SecondSummary s = summarize_second(ramp, 0);
  EXPECT_DOUBLE_EQ(s.mean_ag, 5.5);
  EXPECT_NEAR(s.mean_any_conf, 0.45, 1e-12);
  EXPECT_NEAR(s.mean_face_conf, 0.225, 1e-12);
  EXPECT_EQ(s.detection_success, 0.7);
}

TEST(SummarizeSecond, PermutationInvariant) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<FrameRecord> frames(10);
  for (auto& f : frames) {
    f.ag = 5.0 * u(rng);
    f.any_conf = u(rng);
    f.target_conf = f.any_conf * u(rng);
    f.flicker = u(rng) < 0.5;
    f.detected = f.target_conf >= 0.5;
  }
  const SecondSummary ref = summarize_second(frames, 10);
  for (int k = 0; k < 20; ++k) {
    std::shuffle(frames.begin(), frames.end(), rng);
    const SecondSummary s = summarize_second(frames, 10);
    EXPECT_NEAR(s.mean_ag, ref.mean_ag, 1e-12);
    EXPECT_NEAR(s.mean_any_conf, ref.mean_any_conf, 1e-12);
    EXPECT_NEAR(s.mean_face_conf, ref.mean_face_conf, 1e-12);
    EXPECT_EQ(s.flicker_frames, ref.flicker_frames);
    EXPECT_EQ(s.detection_success, ref.detection_success);
  }
}

TEST(SummarizeSecond, EmptyInputIsRejected) {
  EXPECT_THROW(summarize_second({}, 0), ContractViolation);
}
