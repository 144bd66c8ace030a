#pragma once

// Correlation-based stand-in for a learned face detector. It looks for the
// event signature of the ring-textured target and reports an "any object"
// confidence (best normalized cross-correlation) and a "target" confidence
// that additionally requires the match to look like rings standing out from
// the background.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "autobias/frame.hpp"
#include "autobias/scene.hpp"

namespace autobias {

inline constexpr double kDetectionThreshold = 0.5;
inline constexpr int kDetectorStride = 2;

struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Detection {
  double any_conf = 0.0;
  double target_conf = 0.0;
  std::optional<BoundingBox> bbox;
  bool detected() const { return target_conf >= kDetectionThreshold; }
};

// Expected |event density| of the target while it sweeps horizontally: the
// magnitude of the x-derivative of its log reflectance.
struct TargetTemplate {
  int size = 0;  // square, odd
  std::vector<double> values;
  std::vector<double> radial_profile;

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * size + x]; }
};

namespace detail {

inline int radial_bins(int size) { return std::max(2, size / 4); }

// Mean of `value(x, y)` in concentric annuli around the patch centre.
template <typename F>
std::vector<double> radial_means(int size, F&& value) {
  const int bins = radial_bins(size);
  const double c = 0.5 * (size - 1);
  const double r_max = 0.5 * size;
  std::vector<double> sum(bins, 0.0);
  std::vector<int> count(bins, 0);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double r = std::hypot(x - c, y - c);
      if (r >= r_max) continue;
      const int b = std::min(bins - 1, static_cast<int>(r / r_max * bins));
      sum[b] += value(x, y);
      ++count[b];
    }
  }
  for (int b = 0; b < bins; ++b) sum[b] = count[b] ? sum[b] / count[b] : 0.0;
  return sum;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace detail

inline TargetTemplate make_template(const TargetConfig& target) {
  TargetTemplate tpl;
  const int half = static_cast<int>(std::ceil(target.radius));
  tpl.size = 2 * half + 1;
  tpl.values.resize(static_cast<std::size_t>(tpl.size) * tpl.size);
  TargetConfig centred = target;
  centred.center_x = 0.0;
  centred.center_y = 0.0;
  centred.sweep_amplitude = 0.0;
  for (int y = 0; y < tpl.size; ++y) {
    for (int x = 0; x < tpl.size; ++x) {
      const double px = x - half;
      const double py = y - half;
      const double right = std::log(target_reflectance(centred, px + 0.5, py, 0.0));
      const double left = std::log(target_reflectance(centred, px - 0.5, py, 0.0));
      tpl.values[static_cast<std::size_t>(y) * tpl.size + x] = std::abs(right - left);
    }
  }
  tpl.radial_profile = detail::radial_means(tpl.size, [&](int x, int y) { return tpl.at(x, y); });
  return tpl;
}

// Writes `scale * template` into a frame with its top-left corner at (x0, y0).
inline void paste_template(EventFrame& frame, const TargetTemplate& tpl, int x0, int y0, double scale = 1.0) {
  for (int y = 0; y < tpl.size; ++y) {
    for (int x = 0; x < tpl.size; ++x) {
      const int fx = x0 + x;
      const int fy = y0 + y;
      if (fx >= 0 && fx < frame.width && fy >= 0 && fy < frame.height) frame.at(fx, fy) += scale * tpl.at(x, y);
    }
  }
}

inline Detection detect(const EventFrame& frame, const TargetTemplate& tpl) {
  Detection out;
  const int n = tpl.size;
  if (frame.width < n || frame.height < n) return out;

  double t_mean = 0.0;
  for (double v : tpl.values) t_mean += v;
  t_mean /= static_cast<double>(tpl.values.size());
  std::vector<double> t_centred(tpl.values.size());
  double t_energy = 0.0;
  for (std::size_t i = 0; i < tpl.values.size(); ++i) {
    t_centred[i] = tpl.values[i] - t_mean;
    t_energy += t_centred[i] * t_centred[i];
  }
  if (t_energy <= 0.0) return out;

  std::vector<double> mag(frame.data.size());
  double total = 0.0;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    mag[i] = std::abs(frame.data[i]);
    total += mag[i];
  }
  if (total <= 0.0) return out;

  const auto at = [&](int x, int y) { return mag[static_cast<std::size_t>(y) * frame.width + x]; };
  double best = -2.0;
  int best_x = 0, best_y = 0;
  const double area = static_cast<double>(n) * n;
  for (int y0 = 0; y0 + n <= frame.height; y0 += kDetectorStride) {
    for (int x0 = 0; x0 + n <= frame.width; x0 += kDetectorStride) {
      double sum = 0.0, sum_sq = 0.0, cross = 0.0;
      for (int y = 0; y < n; ++y) {
        const double* row = &mag[static_cast<std::size_t>(y0 + y) * frame.width + x0];
        const double* trow = &t_centred[static_cast<std::size_t>(y) * n];
        for (int x = 0; x < n; ++x) {
          sum += row[x];
          sum_sq += row[x] * row[x];
          cross += row[x] * trow[x];
        }
      }
      const double var = sum_sq - sum * sum / area;
      if (var <= 1e-12) continue;
      const double ncc = cross / std::sqrt(var * t_energy);
      if (ncc > best) {
        best = ncc;
        best_x = x0;
        best_y = y0;
      }
    }
  }
  if (best <= 0.0) return out;

  out.any_conf = std::clamp(best, 0.0, 1.0);
  out.bbox = BoundingBox{best_x, best_y, n, n};

  // Ring structure: radial profile of the match against the template's.
  const auto profile = detail::radial_means(n, [&](int x, int y) { return at(best_x + x, best_y + y); });
  const double ring_match = std::max(0.0, detail::pearson(profile, tpl.radial_profile));

  // Stand-out: how much denser the match is than everything around it.
  double inside = 0.0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) inside += at(best_x + x, best_y + y);
  const double outside_count = static_cast<double>(mag.size()) - area;
  const double mean_in = inside / area;
  const double mean_out = outside_count > 0.0 ? (total - inside) / outside_count : 0.0;
  const double standout = mean_in > 0.0 ? std::clamp((mean_in - mean_out) / mean_in, 0.0, 1.0) : 0.0;

  out.target_conf = std::min(out.any_conf, out.any_conf * ring_match * standout);
  return out;
}

}  // namespace autobias
