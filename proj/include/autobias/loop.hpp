#pragma once

// Closed autobiasing loop: each simulated second the pixel array runs at the
// current bias, its events become 10 frames, every frame is classified,
// scored and searched for the target, and the controller picks the bias for
// the next second.

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "autobias/bias_controller.hpp"
#include "autobias/cnn.hpp"
#include "autobias/detector.hpp"
#include "autobias/frame.hpp"
#include "autobias/io.hpp"
#include "autobias/metrics.hpp"
#include "autobias/pixel_model.hpp"
#include "autobias/spectral.hpp"

namespace autobias {

// Events per millisecond over a sliding one-second window.
class RateHistory {
public:
  void add(const Event& e) {
    require(e.t > 0, "event timestamps must be positive");
    const std::int64_t ms = (e.t - 1) / 1000;  // bin k covers (k, k+1] ms
    advance(ms);
    bins_[static_cast<std::size_t>(ms % kBins)] += 1.0;
  }

  // The 1000 bins covering (end_us - 1 s, end_us]; end_us must be a whole ms.
  std::vector<double> window(std::int64_t end_us) {
    require(end_us % 1000 == 0, "window end must be a whole millisecond");
    const std::int64_t last = end_us / 1000 - 1;
    require(last >= head_, "window end precedes recorded events");
    advance(last);
    std::vector<double> out(kBins);
    for (std::int64_t k = 0; k < kBins; ++k) {
      const std::int64_t ms = last - kBins + 1 + k;
      out[static_cast<std::size_t>(k)] = ms < 0 ? 0.0 : bins_[static_cast<std::size_t>(ms % kBins)];
    }
    return out;
  }

private:
  static constexpr std::int64_t kBins = static_cast<std::int64_t>(kRateBins);

  void advance(std::int64_t ms) {
    require(ms >= head_, "events must arrive in time order");
    for (std::int64_t k = std::max(head_ + 1, ms - kBins + 1); k <= ms; ++k) bins_[static_cast<std::size_t>(k % kBins)] = 0.0;
    head_ = std::max(head_, ms);
  }

  std::vector<double> bins_ = std::vector<double>(kRateBins, 0.0);
  std::int64_t head_ = -1;
};

// Frame classifier seen by the loop. It receives the frame and the event
// rate of the second ending with it.
using FrameClassifier = std::function<Verdict(const EventFrame&, std::span<const double>)>;

inline FrameClassifier cnn_classifier(std::shared_ptr<const CnnParams<float>> params) {
  require(params != nullptr, "classifier parameters missing");
  return [params](const EventFrame& frame, std::span<const double>) { return classify(*params, frame); };
}

inline FrameClassifier oracle_classifier() {
  return [](const EventFrame&, std::span<const double> rate) { return spectral_oracle(rate); };
}

struct SecondRecord {
  int second = 0;  // 1-based; covers (second - 1, second]
  SecondSummary summary;  // summary.bias_fo is the bias in force during the second
  std::vector<FrameRecord> frames;
  bool flicker = false;
  Action action = Action::hold;
  BiasState state;  // after the decision
  std::uint64_t events = 0;
};

class ClosedLoop {
public:
  ClosedLoop(const SceneConfig& scene, const FlickerConfig& flicker, const SensorConfig& sensor,
             FrameClassifier classifier, const ControllerConfig& controller = {}, EventWriter* events_out = nullptr)
      : flicker_(flicker),
        array_(scene, sensor, flicker, 0.0),
        builder_(scene.width, scene.height),
        template_(make_template(scene.target)),
        classifier_(std::move(classifier)),
        controller_(controller),
        events_out_(events_out) {
    require(static_cast<bool>(classifier_), "a frame classifier is required");
    controller_.validate();
    state_.bias_fo = sensor.bias_fo;
  }

  const BiasState& state() const { return state_; }
  int seconds_done() const { return second_; }

  SecondRecord step() {
    SecondRecord rec;
    rec.second = ++second_;
    const int bias = state_.bias_fo;
    const std::int64_t window_us = builder_.window_us();
    const std::int64_t end_us = static_cast<std::int64_t>(second_) * 1'000'000;
    while (array_.now_us() < end_us) {
      const std::int64_t frame_end = array_.now_us() + window_us;
      array_.run(flicker_, static_cast<double>(frame_end) * 1e-6, [&](const Event& e) {
        builder_.push(e);
        rate_.add(e);
        if (events_out_) events_out_->write(e);
        ++rec.events;
      });
      builder_.advance_to(frame_end);
      const auto rate = rate_.window(frame_end);
      for (const EventFrame& frame : builder_.take_frames()) {
        FrameRecord f;
        f.ag = average_gradient(frame);
        f.flicker = classifier_(frame, rate) == Verdict::flicker;
        const Detection d = detect(frame, template_);
        f.any_conf = d.any_conf;
        f.target_conf = d.target_conf;
        f.detected = d.detected();
        rec.frames.push_back(f);
      }
    }
    rec.summary = summarize_second(rec.frames, bias);
    const Decision d = decide(state_, rec.summary, controller_);
    rec.flicker = flicker_declared(rec.summary);
    rec.action = d.action;
    rec.state = d.state;
    state_ = d.state;
    if (state_.bias_fo != array_.bias()) array_.set_bias(state_.bias_fo);
    return rec;
  }

  std::vector<SecondRecord> run(int seconds) {
    require(seconds > 0, "duration must be positive");
    std::vector<SecondRecord> out;
    out.reserve(static_cast<std::size_t>(seconds));
    for (int s = 0; s < seconds; ++s) out.push_back(step());
    return out;
  }

private:
  FlickerConfig flicker_;
  PixelArray array_;
  FrameBuilder builder_;
  TargetTemplate template_;
  FrameClassifier classifier_;
  ControllerConfig controller_;
  EventWriter* events_out_;
  RateHistory rate_;
  BiasState state_;
  int second_ = 0;
};

}  // namespace autobias
