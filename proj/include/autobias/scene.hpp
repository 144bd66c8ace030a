#pragma once

// Ground-truth stimulus for the simulated sensor: a uniformly lit background,
// a ring-textured disc sweeping horizontally across the field, and an optional
// global flicker source that modulates the whole field multiplicatively.

#include <cmath>
#include <cstdint>
#include <numbers>

#include "autobias/contract.hpp"

namespace autobias {

enum class Waveform { half_rectified_sine, square };

struct FlickerConfig {
  bool enabled = false;
  double frequency = 50.0;  // Hz
  Waveform waveform = Waveform::half_rectified_sine;
  double amplitude = 0.5;   // relative to the unmodulated irradiance
  double phase = 0.0;       // radians

  void validate() const {
    if (!enabled) return;
    require(frequency >= 1.0 && frequency <= 1000.0, "flicker frequency must lie in [1, 1000] Hz");
    require(amplitude >= 0.0, "flicker amplitude must be non-negative");
    require(std::isfinite(phase), "flicker phase must be finite");
  }
};

// Disc target with concentric cosine rings. The reflectance rises from 1 at the
// centre and rim to `contrast` at the middle of each ring, so the disc blends
// into the background without a hard edge.
struct TargetConfig {
  double center_x = 64.0;       // centre of the sweep, pixels
  double center_y = 64.0;
  double sweep_amplitude = 32.0;  // pixels; 0 freezes the target
  double sweep_period = 8.0;      // seconds per full left-right-left cycle
  double sweep_phase = 0.0;       // radians
  double radius = 25.6;           // pixels
  double contrast = 3.0;          // peak/background reflectance ratio, >= 1
  int rings = 3;

  double x_at(double t) const {
    if (sweep_amplitude == 0.0 || sweep_period <= 0.0) return center_x;
    return center_x + sweep_amplitude * std::sin(2.0 * std::numbers::pi * t / sweep_period + sweep_phase);
  }
  double y_at(double /*t*/) const { return center_y; }
};

inline constexpr double kHighLux = 1000.0;
inline constexpr double kLowLux = 20.0;
inline constexpr double kIrradianceFloor = 1e-9;

struct SceneConfig {
  int width = 128;
  int height = 128;
  double ambient_lux = kHighLux;
  TargetConfig target;
  std::uint64_t seed = 1;

  // 1000 lux -> 1.0 irradiance units.
  double ambient_irradiance() const { return ambient_lux / 1000.0; }

  void validate() const {
    require(width >= 32 && height >= 32, "scene must be at least 32x32 pixels");
    require(ambient_lux > 0.0, "ambient_lux must be positive");
    require(target.radius > 0.0, "target radius must be positive");
    require(target.contrast >= 1.0, "target contrast ratio must be >= 1");
    require(target.rings >= 1, "target needs at least one ring");
  }
};

// Target placed relative to the frame size: radius = height/5, sweeping a
// quarter of the width either side of centre.
inline SceneConfig default_scene(int width, int height, double lux, std::uint64_t seed) {
  SceneConfig s;
  s.width = width;
  s.height = height;
  s.ambient_lux = lux;
  s.seed = seed;
  s.target.center_x = 0.5 * (width - 1);
  s.target.center_y = 0.5 * (height - 1);
  s.target.radius = height / 5.0;
  s.target.sweep_amplitude = width / 4.0;
  return s;
}

// Waveform value in [0, 1] at time t.
inline double flicker_waveform(const FlickerConfig& flicker, double t) {
  if (!flicker.enabled) return 0.0;
  // Reduce to a phase fraction first so that t and t + 1/f land on the same value.
  const double cycles = flicker.frequency * t + flicker.phase / (2.0 * std::numbers::pi);
  const double frac = cycles - std::floor(cycles);
  const double s = std::sin(2.0 * std::numbers::pi * frac);
  switch (flicker.waveform) {
    case Waveform::square:
      return frac < 0.5 ? 1.0 : 0.0;
    case Waveform::half_rectified_sine:
    default:
      return s > 0.0 ? s : 0.0;
  }
}

inline double flicker_gain(const FlickerConfig& flicker, double t) {
  return 1.0 + flicker.amplitude * flicker_waveform(flicker, t);
}

// Reflectance of the (moving) target at pixel (x, y); 1 outside the disc.
inline double target_reflectance(const TargetConfig& target, double x, double y, double t) {
  const double dx = x - target.x_at(t);
  const double dy = y - target.y_at(t);
  const double r = std::sqrt(dx * dx + dy * dy);
  if (r >= target.radius) return 1.0;
  const double ring = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * target.rings * r / target.radius));
  return 1.0 + (target.contrast - 1.0) * ring;
}

inline double irradiance_at(const SceneConfig& scene, const FlickerConfig& flicker, int x, int y, double t) {
  require(x >= 0 && x < scene.width && y >= 0 && y < scene.height, "pixel coordinates out of bounds");
  require(t >= 0.0 && std::isfinite(t), "time must be finite and non-negative");
  const double value = scene.ambient_irradiance() * target_reflectance(scene.target, x, y, t) * flicker_gain(flicker, t);
  return value > kIrradianceFloor ? value : kIrradianceFloor;
}

}  // namespace autobias
