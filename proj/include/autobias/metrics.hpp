#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "autobias/contract.hpp"
#include "autobias/frame.hpp"

namespace autobias {

// Mean gradient magnitude over all pixels. Partial derivatives use central
// differences inside the frame and one-sided differences on the border.
inline double average_gradient(const EventFrame& frame) {
  require(frame.width >= 3 && frame.height >= 3, "average_gradient needs at least a 3x3 frame");
  const int w = frame.width;
  const int h = frame.height;
  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double gx;
      if (x == 0) gx = frame.at(1, y) - frame.at(0, y);
      else if (x == w - 1) gx = frame.at(w - 1, y) - frame.at(w - 2, y);
      else gx = 0.5 * (frame.at(x + 1, y) - frame.at(x - 1, y));
      double gy;
      if (y == 0) gy = frame.at(x, 1) - frame.at(x, 0);
      else if (y == h - 1) gy = frame.at(x, h - 1) - frame.at(x, h - 2);
      else gy = 0.5 * (frame.at(x, y + 1) - frame.at(x, y - 1));
      total += std::sqrt(gx * gx + gy * gy);
    }
  }
  return total / (static_cast<double>(w) * h);
}

inline double detection_success(std::size_t detected, std::size_t total) {
  require(total > 0, "detection_success needs at least one frame");
  require(detected <= total, "detected frames cannot exceed total frames");
  return static_cast<double>(detected) / static_cast<double>(total);
}

// What the loop knows about one frame once it has been classified, scored and
// run through the detector.
struct FrameRecord {
  double ag = 0.0;
  bool flicker = false;
  double any_conf = 0.0;
  double target_conf = 0.0;
  bool detected = false;
};

struct SecondSummary {
  double mean_ag = 0.0;
  std::size_t flicker_frames = 0;
  std::size_t total_frames = 0;
  double mean_any_conf = 0.0;
  double mean_face_conf = 0.0;
  double detection_success = 0.0;
  int bias_fo = 0;
};

inline SecondSummary summarize_second(std::span<const FrameRecord> frames, int bias_fo) {
  require(!frames.empty(), "summarize_second needs at least one frame");
  SecondSummary s;
  s.bias_fo = bias_fo;
  s.total_frames = frames.size();
  std::size_t detected = 0;
  for (const FrameRecord& f : frames) {
    require(std::isfinite(f.ag) && f.ag >= 0.0, "frame AG must be finite and non-negative");
    s.mean_ag += f.ag;
    s.mean_any_conf += f.any_conf;
    s.mean_face_conf += f.target_conf;
    if (f.flicker) ++s.flicker_frames;
    if (f.detected) ++detected;
  }
  const double n = static_cast<double>(frames.size());
  s.mean_ag /= n;
  s.mean_any_conf /= n;
  s.mean_face_conf /= n;
  s.detection_success = detection_success(detected, frames.size());
  return s;
}

}  // namespace autobias
