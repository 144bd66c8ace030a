#include <gtest/gtest.h>

#include <cmath>

#include "autobias/scene.hpp"

using namespace autobias;

namespace {

SceneConfig static_scene() {
  SceneConfig s = default_scene(64, 64, kHighLux, 5);
  s.target.sweep_amplitude = 0.0;
  return s;
}

FlickerConfig flicker(double f, Waveform w = Waveform::half_rectified_sine, double amplitude = 1.0) {
  FlickerConfig fl;
  fl.enabled = true;
  fl.frequency = f;
  fl.waveform = w;
  fl.amplitude = amplitude;
  return fl;
}

}  // namespace

TEST(Scene, StaticSceneWithoutFlickerIsTimeInvariant) {
  const SceneConfig s = static_scene();
  const FlickerConfig off;
  for (int y = 0; y < s.height; y += 7)
    for (int x = 0; x < s.width; x += 5)
      EXPECT_EQ(irradiance_at(s, off, x, y, 0.0), irradiance_at(s, off, x, y, 3.7)) << x << "," << y;
}

TEST(Scene, HalfRectifiedSineRepeatsAfterOnePeriod) {
  const FlickerConfig fl = flicker(50.0);
  EXPECT_EQ(flicker_gain(fl, 0.0), flicker_gain(fl, 0.02));
  const SceneConfig s = static_scene();
  EXPECT_EQ(irradiance_at(s, fl, 10, 10, 0.0), irradiance_at(s, fl, 10, 10, 0.02));
}

TEST(Scene, PeriodicityWithFrozenMotion) {
  const SceneConfig s = static_scene();
  for (double f : {25.0, 50.0, 150.0, 300.0, 500.0}) {
    for (Waveform w : {Waveform::half_rectified_sine, Waveform::square}) {
      const FlickerConfig fl = flicker(f, w);
      for (int k = 0; k < 200; ++k) {
        // Offset keeps samples off the square wave's jump points.
        const double t = k * 1e-4 + 1.3e-5;
        const double a = irradiance_at(s, fl, 32, 20, t);
        const double b = irradiance_at(s, fl, 32, 20, t + 1.0 / f);
        EXPECT_NEAR(a, b, 1e-9) << "f=" << f << " t=" << t;
      }
    }
  }
}

TEST(Scene, SquareWaveMeanOverOnePeriod) {
  SceneConfig s = static_scene();
  s.ambient_lux = 1000.0;  // ambient irradiance 1
  const FlickerConfig fl = flicker(25.0, Waveform::square, 1.0);
  // Corner pixel, well outside the target: reflectance 1.
  const int n = 100000;
  const double period = 1.0 / 25.0;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += irradiance_at(s, fl, 0, 0, (i + 0.5) * period / n);
  EXPECT_NEAR(sum / n, 1.5, 1e-9);
}

TEST(Scene, HalfRectifiedSineMeanMatchesAnalyticValue) {
  const FlickerConfig fl = flicker(50.0, Waveform::half_rectified_sine, 1.0);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += flicker_gain(fl, (i + 0.5) * 0.02 / n);
  EXPECT_NEAR(sum / n, 1.0 + 1.0 / std::numbers::pi, 1e-6);
}

TEST(Scene, OutputIsStrictlyPositiveWithFloor) {
  SceneConfig s = static_scene();
  s.ambient_lux = 1e-12;
  const FlickerConfig fl = flicker(50.0, Waveform::square, 0.0);
  EXPECT_EQ(irradiance_at(s, fl, 3, 3, 0.1), kIrradianceFloor);
  SceneConfig bright = static_scene();
  for (double t = 0.0; t < 0.05; t += 0.0013) EXPECT_GT(irradiance_at(bright, flicker(50.0), 40, 30, t), 0.0);
}

TEST(Scene, LuxPresetsMapLinearly) {
  EXPECT_DOUBLE_EQ(default_scene(64, 64, kHighLux, 1).ambient_irradiance(), 1.0);
  EXPECT_DOUBLE_EQ(default_scene(64, 64, kLowLux, 1).ambient_irradiance(), 0.02);
}

TEST(Scene, TargetTextureIsBrighterThanBackgroundInsideTheDisc) {
  const SceneConfig s = static_scene();
  const double c = s.target.center_x;
  const double inner = s.target.radius / (2.0 * s.target.rings);  // middle of the first ring
  EXPECT_NEAR(target_reflectance(s.target, c + inner, s.target.center_y, 0.0), s.target.contrast, 1e-9);
  EXPECT_DOUBLE_EQ(target_reflectance(s.target, c, s.target.center_y, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(target_reflectance(s.target, c + s.target.radius + 1.0, s.target.center_y, 0.0), 1.0);
}

TEST(Scene, TargetSweepsHorizontally) {
  TargetConfig t;
  t.center_x = 50.0;
  t.sweep_amplitude = 20.0;
  t.sweep_period = 8.0;
  EXPECT_DOUBLE_EQ(t.x_at(0.0), 50.0);
  EXPECT_NEAR(t.x_at(2.0), 70.0, 1e-12);
  EXPECT_NEAR(t.x_at(6.0), 30.0, 1e-12);
  EXPECT_DOUBLE_EQ(t.y_at(3.0), t.center_y);
}

TEST(Scene, Deterministic) {
  const SceneConfig a = default_scene(64, 64, kLowLux, 9);
  const SceneConfig b = default_scene(64, 64, kLowLux, 9);
  const FlickerConfig fl = flicker(150.0);
  for (double t = 0.0; t < 1.0; t += 0.0371)
    for (int x = 0; x < 64; x += 9) EXPECT_EQ(irradiance_at(a, fl, x, 31, t), irradiance_at(b, fl, x, 31, t));
}

TEST(Scene, ContractViolations) {
  const SceneConfig s = static_scene();
  const FlickerConfig off;
  EXPECT_THROW(irradiance_at(s, off, -1, 0, 0.0), ContractViolation);
  EXPECT_THROW(irradiance_at(s, off, 0, 64, 0.0), ContractViolation);
  EXPECT_THROW(irradiance_at(s, off, 0, 0, -0.1), ContractViolation);
  FlickerConfig bad = flicker(0.5);
  EXPECT_THROW(bad.validate(), ContractViolation);
  bad = flicker(1001.0);
  EXPECT_THROW(bad.validate(), ContractViolation);
  bad = flicker(50.0);
  bad.amplitude = -0.1;
  EXPECT_THROW(bad.validate(), ContractViolation);
  SceneConfig small = s;
  small.width = 16;
  EXPECT_THROW(small.validate(), ContractViolation);
  SceneConfig dark = s;
  dark.ambient_lux = 0.0;
  EXPECT_THROW(dark.validate(), ContractViolation);
}
