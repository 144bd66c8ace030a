#pragma once

// Per-second bias update: lower bias_fo by one step whenever a second is
// declared flickering, raise it again after a run of clean seconds.

#include <algorithm>
#include <cstdint>
#include <span>
#include <string_view>

#include "autobias/contract.hpp"
#include "autobias/metrics.hpp"
#include "autobias/pixel_model.hpp"

namespace autobias {

enum class Action { hold, lower, raise, exhausted };

inline std::string_view action_name(Action a) {
  switch (a) {
    case Action::lower: return "lower";
    case Action::raise: return "raise";
    case Action::exhausted: return "exhausted";
    case Action::hold:
    default: return "hold";
  }
}

struct ControllerConfig {
  int step = 5;
  int clean_seconds_to_raise = 10;

  void validate() const {
    require(step > 0, "bias step must be positive");
    require(clean_seconds_to_raise > 0, "clean-second count must be positive");
  }
};

struct BiasState {
  int bias_fo = kBiasMax;
  int clean_seconds = 0;
  bool exhausted = false;

  friend bool operator==(const BiasState&, const BiasState&) = default;
};

struct Decision {
  BiasState state;
  Action action = Action::hold;
};

// Majority vote over the second's frames.
inline bool flicker_declared(const SecondSummary& s) {
  require(s.total_frames > 0, "summary covers no frames");
  require(s.flicker_frames <= s.total_frames, "summary has more flicker frames than frames");
  return 2 * s.flicker_frames > s.total_frames;
}

inline Decision decide(const BiasState& state, bool flicker, const ControllerConfig& cfg = {}) {
  cfg.validate();
  require(state.bias_fo >= kBiasMin && state.bias_fo <= kBiasMax, "bias_fo out of range [-35, 55]");
  require(state.clean_seconds >= 0, "clean_seconds must be non-negative");
  Decision d{state, Action::hold};
  if (flicker) {
    d.state.clean_seconds = 0;
    if (state.bias_fo == kBiasMin) {
      d.state.exhausted = true;
      d.action = Action::exhausted;
    } else {
      d.state.bias_fo = std::max(state.bias_fo - cfg.step, kBiasMin);
      d.state.exhausted = false;
      d.action = Action::lower;
    }
    return d;
  }
  d.state.exhausted = false;
  d.state.clean_seconds = state.clean_seconds + 1;
  if (d.state.clean_seconds >= cfg.clean_seconds_to_raise) {
    d.state.clean_seconds = 0;
    // Already at the top of the range: nothing to raise.
    if (state.bias_fo < kBiasMax) {
      d.state.bias_fo = std::min(state.bias_fo + cfg.step, kBiasMax);
      d.action = Action::raise;
    }
  }
  return d;
}

inline Decision decide(const BiasState& state, const SecondSummary& summary, const ControllerConfig& cfg = {}) {
  return decide(state, flicker_declared(summary), cfg);
}

}  // namespace autobias
