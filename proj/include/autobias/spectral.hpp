#pragma once

// Spectral flicker check used as an independent reference for the CNN: look
// for a dominant line in the 20-500 Hz band of a 1 kHz event-rate series.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "autobias/contract.hpp"
#include "autobias/pixel_model.hpp"

namespace autobias {

enum class Verdict { no_flicker, flicker };

inline constexpr std::size_t kRateBins = 1000;
inline constexpr int kBandLowHz = 20;
inline constexpr int kBandHighHz = 500;
inline constexpr double kPeakToMedian = 8.0;

struct SpectralResult {
  Verdict verdict = Verdict::no_flicker;
  int peak_hz = 0;
  double peak = 0.0;
  double median = 0.0;
};

// Magnitude spectrum of the mean-removed series at integer frequencies
// [low, high]; with 1000 one-millisecond bins, bin k sits at k Hz.
inline std::vector<double> band_magnitudes(std::span<const double> series, int low, int high) {
  const std::size_t n = series.size();
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> mags;
  mags.reserve(static_cast<std::size_t>(high - low + 1));
  for (int k = low; k <= high; ++k) {
    std::complex<double> acc{0.0, 0.0};
    // Twiddle index reduced modulo n keeps the phase argument exact.
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t idx = (static_cast<std::size_t>(k) * i) % n;
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(idx) / static_cast<double>(n);
      acc += (series[i] - mean) * std::polar(1.0, angle);
    }
    mags.push_back(std::abs(acc));
  }
  return mags;
}

inline SpectralResult spectral_analysis(std::span<const double> event_rate) {
  require(event_rate.size() == kRateBins, "spectral oracle needs exactly 1000 one-millisecond bins");
  const auto mags = band_magnitudes(event_rate, kBandLowHz, kBandHighHz);
  SpectralResult r;
  const auto peak = std::max_element(mags.begin(), mags.end());
  r.peak = *peak;
  r.peak_hz = kBandLowHz + static_cast<int>(peak - mags.begin());
  std::vector<double> sorted = mags;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  r.median = sorted[sorted.size() / 2];
  // Lines at rounding-noise level say nothing about flicker.
  double scale = 0.0;
  for (double v : event_rate) scale += std::abs(v);
  const bool above_noise = r.peak > 1e-9 * scale;
  r.verdict = above_noise && r.peak > kPeakToMedian * r.median ? Verdict::flicker : Verdict::no_flicker;
  return r;
}

inline Verdict spectral_oracle(std::span<const double> event_rate) { return spectral_analysis(event_rate).verdict; }

// Events per millisecond over the second ending at `end_us`.
inline std::vector<double> event_rate(std::span<const Event> events, std::int64_t end_us) {
  std::vector<double> rate(kRateBins, 0.0);
  const std::int64_t start_us = end_us - static_cast<std::int64_t>(kRateBins) * 1000;
  for (const Event& e : events) {
    if (e.t <= start_us || e.t > end_us) continue;
    const auto bin = static_cast<std::size_t>((e.t - start_us - 1) / 1000);
    rate[bin] += 1.0;
  }
  return rate;
}

}  // namespace autobias
