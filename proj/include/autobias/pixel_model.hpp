#pragma once

// DVS pixel simulation: log photoreceptor (stage 1), a bias-controlled second
// low-pass stage, and a contrast-threshold change detector with a refractory
// period. Stage 2's cut-off is set by the integer bias `bias_fo`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "autobias/contract.hpp"
#include "autobias/scene.hpp"

namespace autobias {

inline constexpr int kBiasMin = -35;
inline constexpr int kBiasMax = 55;
// The moving target is redrawn into the scene cache once per millisecond;
// at the default sweep speed it moves well under 0.1 px in that time.
inline constexpr std::int64_t kMotionRefreshUs = 1000;

// f_c(b) = 10 * 2^((b + 35) / 15) Hz, i.e. 10 Hz at -35 and 640 Hz at 55.
inline double bias_to_cutoff(int bias_fo) {
  require(bias_fo >= kBiasMin && bias_fo <= kBiasMax, "bias_fo out of range [-35, 55]");
  return 10.0 * std::exp2((bias_fo + 35) / 15.0);
}

// Per-step smoothing factor of a first-order low-pass, exact for
// piecewise-constant input held over one step.
inline double lowpass_alpha(double cutoff_hz, double step_s) {
  return 1.0 - std::exp(-2.0 * std::numbers::pi * cutoff_hz * step_s);
}

struct SensorConfig {
  double stage1_cutoff = 3000.0;  // Hz
  double theta_on = 0.15;         // log-intensity
  double theta_off = 0.15;
  double refractory = 1e-3;       // s
  double sim_step = 1e-4;         // s
  int bias_fo = kBiasMax;
  // Relative standard deviation of the per-pixel fixed-pattern mismatch in
  // thresholds, refractory period and stage-2 cut-off, drawn once from the
  // scene seed. 0 gives identical pixels.
  double mismatch = 0.1;

  void validate() const {
    require(bias_fo >= kBiasMin && bias_fo <= kBiasMax, "bias_fo out of range [-35, 55]");
    require(theta_on > 0.0 && theta_off > 0.0, "contrast thresholds must be positive");
    require(refractory >= 0.0, "refractory period must be non-negative");
    require(sim_step > 0.0, "sim_step must be positive");
    require(stage1_cutoff > 0.0, "stage-1 cut-off must be positive");
    require(mismatch >= 0.0 && mismatch < 0.5, "mismatch must lie in [0, 0.5)");
  }

  std::int64_t step_us() const { return std::llround(sim_step * 1e6); }
  std::int64_t refractory_us() const { return std::llround(refractory * 1e6); }
};

struct PixelState {
  double lp1 = 0.0;
  double lp2 = 0.0;
  double ref_level = 0.0;
  double refractory_until = 0.0;  // s

  // A pixel that has been looking at a constant log intensity forever.
  static PixelState settled(double log_irradiance) {
    return PixelState{log_irradiance, log_irradiance, log_irradiance, 0.0};
  }
};

// Per-pixel values after fixed-pattern mismatch.
struct PixelParams {
  double theta_on = 0.0;
  double theta_off = 0.0;
  std::int64_t refractory_us = 0;
  double cutoff_scale = 1.0;
};

struct Event {
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int64_t t = 0;  // microseconds
  std::int8_t polarity = 1;

  friend bool operator==(const Event&, const Event&) = default;
};

namespace detail {

struct FilterCoeffs {
  double a1;
  double a2;
};

// One simulation step of one pixel; returns the emitted polarity or 0.
inline int advance_pixel(double& lp1, double& lp2, double& ref, std::int64_t& refractory_until_us,
                         double log_irradiance, FilterCoeffs c, double theta_on, double theta_off,
                         std::int64_t t_us, std::int64_t refractory_us) {
  lp1 += c.a1 * (log_irradiance - lp1);
  lp2 += c.a2 * (lp1 - lp2);
  if (t_us < refractory_until_us) return 0;
  const double diff = lp2 - ref;
  if (diff >= theta_on) {
    ref = lp2;
    refractory_until_us = t_us + refractory_us;
    return 1;
  }
  if (diff <= -theta_off) {
    ref = lp2;
    refractory_until_us = t_us + refractory_us;
    return -1;
  }
  return 0;
}

inline FilterCoeffs coeffs_for(const SensorConfig& cfg) {
  return {lowpass_alpha(cfg.stage1_cutoff, cfg.sim_step), lowpass_alpha(bias_to_cutoff(cfg.bias_fo), cfg.sim_step)};
}

// Filter update for n pixels; flags those beyond either threshold.
inline void filter_pass(std::size_t n, double lf, double a1, const double* __restrict log_scene,
                        const double* __restrict alpha2, const double* __restrict theta_on,
                        const double* __restrict theta_off, const double* __restrict ref, double* __restrict lp1,
                        double* __restrict lp2, std::int64_t* __restrict hot) {
  for (std::size_t i = 0; i < n; ++i) {
    const double x = log_scene[i] + lf;
    const double l1 = lp1[i] + a1 * (x - lp1[i]);
    const double l2 = lp2[i] + alpha2[i] * (l1 - lp2[i]);
    lp1[i] = l1;
    lp2[i] = l2;
    const double diff = l2 - ref[i];
    hot[i] = (diff >= theta_on[i]) | (diff <= -theta_off[i]);
  }
}

}  // namespace detail

struct StepResult {
  PixelState state;
  std::optional<std::int8_t> polarity;
};

// Advances one pixel by one sim_step, ending at time t (seconds).
inline StepResult step_pixel(const PixelState& state, const SensorConfig& cfg, double log_irradiance, double t) {
  require(std::isfinite(log_irradiance) && std::isfinite(t), "step_pixel input must be finite");
  require(std::isfinite(state.lp1) && std::isfinite(state.lp2) && std::isfinite(state.ref_level),
          "pixel state must be finite");
  StepResult out{state, std::nullopt};
  std::int64_t until_us = std::llround(state.refractory_until * 1e6);
  const int p = detail::advance_pixel(out.state.lp1, out.state.lp2, out.state.ref_level, until_us, log_irradiance,
                                      detail::coeffs_for(cfg), cfg.theta_on, cfg.theta_off, std::llround(t * 1e6),
                                      cfg.refractory_us());
  out.state.refractory_until = static_cast<double>(until_us) * 1e-6;
  if (p != 0) out.polarity = static_cast<std::int8_t>(p);
  return out;
}

// The full pixel array. Pixel memory persists across calls to run(), so the
// bias can be changed between seconds without resetting the sensor.
class PixelArray {
public:
  PixelArray(const SceneConfig& scene, const SensorConfig& cfg, const FlickerConfig& flicker = {}, double t0 = 0.0)
      : scene_(scene), cfg_(cfg) {
    scene_.validate();
    cfg_.validate();
    flicker.validate();
    require(t0 >= 0.0, "t0 must be non-negative");
    step_us_ = cfg_.step_us();
    require(step_us_ > 0 && std::abs(static_cast<double>(step_us_) * 1e-6 - cfg_.sim_step) < 1e-12,
            "sim_step must be a whole number of microseconds");
    step_ = std::llround(t0 * 1e6 / static_cast<double>(step_us_));
    coeffs_ = detail::coeffs_for(cfg_);

    const auto n = static_cast<std::size_t>(scene_.width) * scene_.height;
    log_scene_.assign(n, std::log(scene_.ambient_irradiance()));
    theta_on_.resize(n);
    theta_off_.resize(n);
    refractory_us_.resize(n);
    cutoff_scale_.resize(n);
    std::mt19937_64 rng(scene_.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      theta_on_[i] = cfg_.theta_on * mismatch_factor(gauss(rng));
      theta_off_[i] = cfg_.theta_off * mismatch_factor(gauss(rng));
      refractory_us_[i] = std::llround(cfg_.refractory * 1e6 * mismatch_factor(gauss(rng)));
      cutoff_scale_[i] = mismatch_factor(gauss(rng));
    }
    update_stage2();

    refresh_target(now());
    const double lf = log_flicker(flicker, now());
    lp1_.resize(n);
    for (std::size_t i = 0; i < n; ++i) lp1_[i] = log_pixel(i, lf);
    lp2_ = lp1_;
    ref_ = lp1_;
    refractory_until_us_.assign(n, 0);
  }

  const SceneConfig& scene() const { return scene_; }
  const SensorConfig& config() const { return cfg_; }
  int width() const { return scene_.width; }
  int height() const { return scene_.height; }
  double now() const { return static_cast<double>(step_ * step_us_) * 1e-6; }
  std::int64_t now_us() const { return step_ * step_us_; }

  void set_bias(int bias_fo) {
    require(bias_fo >= kBiasMin && bias_fo <= kBiasMax, "bias_fo out of range [-35, 55]");
    cfg_.bias_fo = bias_fo;
    coeffs_ = detail::coeffs_for(cfg_);
    update_stage2();
  }
  int bias() const { return cfg_.bias_fo; }

  PixelParams params(int x, int y) const {
    const std::size_t i = index(x, y);
    return {theta_on_[i], theta_off_[i], refractory_us_[i], cutoff_scale_[i]};
  }

  PixelState state(int x, int y) const {
    const std::size_t i = index(x, y);
    return {lp1_[i], lp2_[i], ref_[i], static_cast<double>(refractory_until_us_[i]) * 1e-6};
  }

  // Simulates up to time t1 (seconds), handing each event to `sink` in global
  // time order; events sharing a timestamp come out in row-major pixel order.
  template <typename Sink>
  void run(const FlickerConfig& flicker, double t1, Sink&& sink) {
    flicker.validate();
    if (flicker.enabled) {
      require(cfg_.sim_step * 4.0 * flicker.frequency <= 1.0 + 1e-9,
              "sim_step too coarse for the flicker frequency (need >= 4 samples per period)");
    }
    const std::int64_t last = std::llround(t1 * 1e6 / static_cast<double>(step_us_));
    require(last > step_, "t1 must be later than the current simulation time");
    const std::size_t n = lp1_.size();
    const int w = scene_.width;
    hot_.resize(n);
    while (step_ < last) {
      ++step_;
      const std::int64_t t_us = step_ * step_us_;
      const double t = static_cast<double>(t_us) * 1e-6;
      if (t_us % kMotionRefreshUs == 0) refresh_target(t);
      const double lf = log_flicker(flicker, t);
      // Same arithmetic as detail::advance_pixel, split so the filter pass
      // vectorizes and only threshold crossings take the slow path.
      filter_pass(lf);
      for (std::size_t i = 0; i < n; ++i) {
        if (!hot_[i] || t_us < refractory_until_us_[i]) continue;
        const std::int8_t p = lp2_[i] - ref_[i] >= theta_on_[i] ? 1 : -1;
        ref_[i] = lp2_[i];
        refractory_until_us_[i] = t_us + refractory_us_[i];
        sink(Event{static_cast<std::uint16_t>(i % w), static_cast<std::uint16_t>(i / w), t_us, p});
      }
    }
  }

  std::vector<Event> simulate(const FlickerConfig& flicker, double t0, double t1) {
    require(t1 > t0, "t1 must be later than t0");
    require(std::llround(t0 * 1e6) == now_us(), "t0 must equal the array's current time");
    std::vector<Event> events;
    run(flicker, t1, [&](const Event& e) { events.push_back(e); });
    return events;
  }

private:
  void filter_pass(double lf) {
    detail::filter_pass(lp1_.size(), lf, coeffs_.a1, log_scene_.data(), alpha2_.data(), theta_on_.data(),
                        theta_off_.data(), ref_.data(), lp1_.data(), lp2_.data(), hot_.data());
  }

  double mismatch_factor(double z) const { return std::clamp(1.0 + cfg_.mismatch * z, 0.5, 1.5); }

  void update_stage2() {
    const double fc = bias_to_cutoff(cfg_.bias_fo);
    alpha2_.resize(cutoff_scale_.size());
    for (std::size_t i = 0; i < cutoff_scale_.size(); ++i) alpha2_[i] = lowpass_alpha(fc * cutoff_scale_[i], cfg_.sim_step);
  }

  std::size_t index(int x, int y) const {
    require(x >= 0 && x < scene_.width && y >= 0 && y < scene_.height, "pixel coordinates out of bounds");
    return static_cast<std::size_t>(y) * scene_.width + x;
  }

  static double log_flicker(const FlickerConfig& flicker, double t) { return std::log(flicker_gain(flicker, t)); }

  double log_pixel(std::size_t i, double lf) const { return log_scene_[i] + lf; }

  // Rewrites the log-reflectance cache over the target's footprint.
  void refresh_target(double t) {
    const TargetConfig& tg = scene_.target;
    const bool moving = tg.sweep_amplitude != 0.0 && tg.sweep_period > 0.0;
    if (!moving && target_drawn_) return;
    const double background = std::log(scene_.ambient_irradiance());
    for (int y = box_y0_; y < box_y1_; ++y) {
      for (int x = box_x0_; x < box_x1_; ++x) log_scene_[static_cast<std::size_t>(y) * scene_.width + x] = background;
    }
    const double cx = tg.x_at(t);
    const double cy = tg.y_at(t);
    box_x0_ = std::clamp(static_cast<int>(std::floor(cx - tg.radius)), 0, scene_.width);
    box_x1_ = std::clamp(static_cast<int>(std::ceil(cx + tg.radius)) + 1, 0, scene_.width);
    box_y0_ = std::clamp(static_cast<int>(std::floor(cy - tg.radius)), 0, scene_.height);
    box_y1_ = std::clamp(static_cast<int>(std::ceil(cy + tg.radius)) + 1, 0, scene_.height);
    for (int y = box_y0_; y < box_y1_; ++y) {
      for (int x = box_x0_; x < box_x1_; ++x) {
        log_scene_[static_cast<std::size_t>(y) * scene_.width + x] = background + std::log(target_reflectance(tg, x, y, t));
      }
    }
    target_drawn_ = true;
  }

  SceneConfig scene_;
  SensorConfig cfg_;
  detail::FilterCoeffs coeffs_{};
  std::int64_t step_us_ = 100;
  std::int64_t step_ = 0;

  std::vector<double> log_scene_;  // log(ambient * reflectance), flicker excluded
  std::vector<double> theta_on_;
  std::vector<double> theta_off_;
  std::vector<std::int64_t> refractory_us_;
  std::vector<double> cutoff_scale_;
  std::vector<double> alpha2_;
  std::vector<double> lp1_;
  std::vector<double> lp2_;
  std::vector<double> ref_;
  std::vector<std::int64_t> refractory_until_us_;
  std::vector<std::int64_t> hot_;

  bool target_drawn_ = false;
  int box_x0_ = 0, box_x1_ = 0, box_y0_ = 0, box_y1_ = 0;
};

// One-shot simulation from a sensor settled to the stimulus at t0.
inline std::vector<Event> simulate(const SceneConfig& scene, const FlickerConfig& flicker, const SensorConfig& cfg,
                                   double t0, double t1) {
  require(t1 > t0, "t1 must be later than t0");
  PixelArray array(scene, cfg, flicker, t0);
  return array.simulate(flicker, t0, t1);
}

}  // namespace autobias
