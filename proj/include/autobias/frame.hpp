#pragma once

// Event-to-frame conversion. A frame is the signed polarity sum per pixel over
// one window, plus `decay` times the previous frame, so flicker that shows in
// one window carries over into the next.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "autobias/contract.hpp"
#include "autobias/pixel_model.hpp"

namespace autobias {

inline constexpr double kFrameDecay = 0.1;
inline constexpr double kFrameWindow = 0.1;  // s, i.e. 10 frames per second
inline constexpr int kClassifierSide = 224;
inline constexpr double kNormalizationRange = 3.0;

struct EventFrame {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // row-major
  double t_end = 0.0;
  std::int64_t frame_index = 0;

  EventFrame() = default;
  EventFrame(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0.0) {}

  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Builds the frame covering (prev.t_end, prev.t_end + window]. Without a
// previous frame the window starts at t = 0.
inline EventFrame accumulate(std::span<const Event> events, const EventFrame* prev, double decay, double window,
                             int width, int height) {
  require(decay >= 0.0 && decay < 1.0, "decay must lie in [0, 1)");
  require(window > 0.0, "window must be positive");
  require(width > 0 && height > 0, "frame dimensions must be positive");
  const std::int64_t window_us = std::llround(window * 1e6);
  std::int64_t index = 1;
  if (prev != nullptr) {
    require(prev->width == width && prev->height == height, "previous frame has different dimensions");
    index = prev->frame_index + 1;
  }
  const std::int64_t start_us = (index - 1) * window_us;
  const std::int64_t end_us = index * window_us;

  EventFrame frame(width, height);
  frame.frame_index = index;
  frame.t_end = static_cast<double>(end_us) * 1e-6;
  if (prev != nullptr) {
    for (std::size_t i = 0; i < frame.data.size(); ++i) frame.data[i] = decay * prev->data[i];
  }
  for (const Event& e : events) {
    require(e.t > start_us && e.t <= end_us, "event falls outside the accumulation window");
    require(e.x < width && e.y < height, "event coordinates outside the frame");
    frame.at(e.x, e.y) += e.polarity;
  }
  return frame;
}

// Streaming version of accumulate(): feed time-ordered events, collect frames
// as their windows close.
class FrameBuilder {
public:
  FrameBuilder(int width, int height, double window = kFrameWindow, double decay = kFrameDecay)
      : width_(width), height_(height), decay_(decay), window_us_(std::llround(window * 1e6)),
        sums_(static_cast<std::size_t>(width) * height, 0.0) {
    require(width > 0 && height > 0, "frame dimensions must be positive");
    require(window_us_ > 0, "window must be positive");
    require(decay >= 0.0 && decay < 1.0, "decay must lie in [0, 1)");
  }

  void push(const Event& e) {
    require(e.t > last_end_us(), "event precedes the open window");
    while (e.t > last_end_us() + window_us_) close_window();
    require(e.x < width_ && e.y < height_, "event coordinates outside the frame");
    sums_[static_cast<std::size_t>(e.y) * width_ + e.x] += e.polarity;
  }

  // Closes every window ending at or before t_us.
  void advance_to(std::int64_t t_us) {
    while (last_end_us() + window_us_ <= t_us) close_window();
  }

  // Completed frames since the last call.
  std::vector<EventFrame> take_frames() { return std::exchange(ready_, {}); }

  std::int64_t window_us() const { return window_us_; }

private:
  std::int64_t last_end_us() const { return next_index_ * window_us_ - window_us_; }

  void close_window() {
    EventFrame frame(width_, height_);
    frame.frame_index = next_index_;
    frame.t_end = static_cast<double>(next_index_ * window_us_) * 1e-6;
    for (std::size_t i = 0; i < sums_.size(); ++i) {
      frame.data[i] = sums_[i] + (prev_ ? decay_ * prev_->data[i] : 0.0);
    }
    std::fill(sums_.begin(), sums_.end(), 0.0);
    prev_ = frame;
    ready_.push_back(std::move(frame));
    ++next_index_;
  }

  int width_;
  int height_;
  double decay_;
  std::int64_t window_us_;
  std::int64_t next_index_ = 1;
  std::vector<double> sums_;
  std::optional<EventFrame> prev_;
  std::vector<EventFrame> ready_;
};

// Nearest-neighbour upsampling to 224x224 followed by clip((v + 3) / 6, 0, 1).
template <typename T = float>
std::vector<T> to_classifier_input(const EventFrame& frame) {
  require(frame.width > 0 && frame.height > 0, "empty frame");
  require(frame.width <= kClassifierSide && frame.height <= kClassifierSide, "frame larger than 224x224");
  std::vector<T> out(static_cast<std::size_t>(kClassifierSide) * kClassifierSide);
  for (int oy = 0; oy < kClassifierSide; ++oy) {
    const int sy = oy * frame.height / kClassifierSide;
    for (int ox = 0; ox < kClassifierSide; ++ox) {
      const int sx = ox * frame.width / kClassifierSide;
      const double v = (frame.at(sx, sy) + kNormalizationRange) / (2.0 * kNormalizationRange);
      out[static_cast<std::size_t>(oy) * kClassifierSide + ox] = static_cast<T>(std::clamp(v, 0.0, 1.0));
    }
  }
  return out;
}

}  // namespace autobias
