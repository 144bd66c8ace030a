#pragma once

// Experiment orchestration: labelled corpus generation, closed-loop runs over
// the frequency x lux grid and the CSV reports that summarize them.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "autobias/bias_controller.hpp"
#include "autobias/cnn.hpp"
#include "autobias/io.hpp"
#include "autobias/loop.hpp"
#include "autobias/scene.hpp"

namespace autobias {

struct ExperimentConfig {
  std::vector<double> frequencies{25.0, 50.0, 150.0, 300.0, 500.0};
  std::vector<double> lux{kHighLux, kLowLux};
  int duration = 60;  // s
  std::uint64_t seed = 1;
  int resolution = 128;
  int bias_init = kBiasMax;
  std::string out = "out";
  std::string model;       // default: <out>/model.cnn1
  std::string events_out;  // EVT1 path (run) or directory (grid); empty disables
  double amplitude = 0.5;
  Waveform waveform = Waveform::half_rectified_sine;
  std::size_t train_frames = 3560;
  std::size_t val_frames = 552;
  std::size_t test_frames = 552;
  TrainConfig train;

  std::string model_path() const { return model.empty() ? (std::filesystem::path(out) / "model.cnn1").string() : model; }

  void validate() const {
    require(!frequencies.empty(), "at least one flicker frequency is required");
    for (double f : frequencies) require(f >= 1.0 && f <= 1000.0, "flicker frequencies must lie in [1, 1000] Hz");
    require(!lux.empty(), "at least one lux preset is required");
    for (double l : lux) require(l > 0.0, "lux presets must be positive");
    require(duration >= 20, "duration must be at least 20 s");
    require(resolution >= 32 && resolution <= kClassifierSide, "resolution must lie in [32, 224]");
    require(bias_init >= kBiasMin && bias_init <= kBiasMax, "initial bias out of range [-35, 55]");
    require(amplitude >= 0.0, "flicker amplitude must be non-negative");
    for (std::size_t n : {train_frames, val_frames, test_frames})
      require(n > 0 && n % 2 == 0, "split sizes must be positive and even");
    train.validate();
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == v.size() && !v.empty(), "invalid number for " + key + ": '" + v + "'");
  return out;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == v.size() && !v.empty(), "invalid integer for " + key + ": '" + v + "'");
  return out;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  require(!out.empty(), "empty list for " + key);
  return out;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, double a, double b = 0.0) {
  return splitmix64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(std::llround(a * 1000.0)))) ^
                    static_cast<std::uint64_t>(std::llround(b * 1000.0)));
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace detail

inline Waveform parse_waveform(const std::string& v) {
  if (v == "half_rectified_sine" || v == "sine") return Waveform::half_rectified_sine;
  if (v == "square") return Waveform::square;
  throw ContractViolation("unknown waveform '" + v + "' (expected half_rectified_sine or square)");
}

// Applies one `key = value` setting.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "frequencies" || key == "freq") cfg.frequencies = parse_list(key, value);
  else if (key == "lux") cfg.lux = parse_list(key, value);
  else if (key == "duration") cfg.duration = static_cast<int>(parse_int(key, value));
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "resolution") cfg.resolution = static_cast<int>(parse_int(key, value));
  else if (key == "bias_init") cfg.bias_init = static_cast<int>(parse_int(key, value));
  else if (key == "out") cfg.out = value;
  else if (key == "model") cfg.model = value;
  else if (key == "events_out") cfg.events_out = value;
  else if (key == "amplitude") cfg.amplitude = parse_double(key, value);
  else if (key == "waveform") cfg.waveform = parse_waveform(value);
  else if (key == "train_frames") cfg.train_frames = static_cast<std::size_t>(parse_int(key, value));
  else if (key == "val_frames") cfg.val_frames = static_cast<std::size_t>(parse_int(key, value));
  else if (key == "test_frames") cfg.test_frames = static_cast<std::size_t>(parse_int(key, value));
  else if (key == "epochs") cfg.train.epochs = static_cast<int>(parse_int(key, value));
  else if (key == "batch_size") cfg.train.batch_size = static_cast<int>(parse_int(key, value));
  else if (key == "learning_rate") cfg.train.learning_rate = parse_double(key, value);
  else if (key == "patience") cfg.train.patience = static_cast<int>(parse_int(key, value));
  else if (key == "train_seed") cfg.train.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else throw ContractViolation("unknown configuration key '" + key + "'");
}

// Plain-text `key = value` lines; '#' starts a comment.
inline void apply_config_text(ExperimentConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, "config line " + std::to_string(line_no) + " is not 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    require(!key.empty(), "config line " + std::to_string(line_no) + " has an empty key");
    apply_setting(cfg, key, value);
  }
}

inline void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str());
}

// ---------------------------------------------------------------------------
// Corpus generation

inline constexpr int kClipFrames = 10;

struct ClipSpec {
  int label = 0;  // 1 = flicker
  double frequency = 0.0;
  double lux = kHighLux;
  int bias_fo = kBiasMax;
  double sweep_phase = 0.0;
  double flicker_phase = 0.0;
  std::uint64_t seed = 1;
};

struct ClipFrame {
  EventFrame frame;
  std::vector<double> rate;  // events per ms over the second ending with the frame
};

inline std::vector<int> all_biases() {
  std::vector<int> out;
  for (int b = kBiasMin; b <= kBiasMax; b += 5) out.push_back(b);
  return out;
}

// Peak-to-peak log-intensity swing of the flicker after both low-pass
// stages, taking the fundamental's attenuation for the whole waveform.
inline double attenuated_swing(const FlickerConfig& flicker, const SensorConfig& sensor, int bias_fo) {
  const double f = flicker.frequency;
  const double r1 = f / sensor.stage1_cutoff;
  const double r2 = f / bias_to_cutoff(bias_fo);
  return std::log1p(flicker.amplitude) / std::sqrt((1.0 + r1 * r1) * (1.0 + r2 * r2));
}

// Biases at which the flicker still drives pixels across the contrast
// threshold. Below these the sensor has filtered it out and a clip with the
// source switched on looks like a clean one.
inline std::vector<int> visible_biases(const FlickerConfig& flicker, const SensorConfig& sensor = {}) {
  std::vector<int> out;
  for (int b : all_biases())
    if (attenuated_swing(flicker, sensor, b) > std::min(sensor.theta_on, sensor.theta_off)) out.push_back(b);
  return out;
}

inline SceneConfig clip_scene(const ExperimentConfig& cfg, const ClipSpec& clip) {
  SceneConfig scene = default_scene(cfg.resolution, cfg.resolution, clip.lux, clip.seed);
  scene.target.sweep_phase = clip.sweep_phase;
  return scene;
}

inline FlickerConfig clip_flicker(const ExperimentConfig& cfg, const ClipSpec& clip) {
  FlickerConfig f;
  f.enabled = clip.label == 1;
  f.frequency = clip.label == 1 ? clip.frequency : 50.0;
  f.amplitude = cfg.amplitude;
  f.waveform = cfg.waveform;
  f.phase = clip.flicker_phase;
  return f;
}

// Simulates a clip and returns `frames` frames after skipping `warmup`.
inline std::vector<ClipFrame> simulate_clip(const ExperimentConfig& cfg, const ClipSpec& clip, int warmup, int frames,
                                            bool with_rates = false) {
  SensorConfig sensor;
  sensor.bias_fo = clip.bias_fo;
  const FlickerConfig flicker = clip_flicker(cfg, clip);
  PixelArray array(clip_scene(cfg, clip), sensor, flicker, 0.0);
  FrameBuilder builder(cfg.resolution, cfg.resolution);
  RateHistory rate;
  std::vector<ClipFrame> out;
  for (int k = 1; k <= warmup + frames; ++k) {
    const std::int64_t end_us = k * builder.window_us();
    array.run(flicker, static_cast<double>(end_us) * 1e-6, [&](const Event& e) {
      builder.push(e);
      if (with_rates) rate.add(e);
    });
    builder.advance_to(end_us);
    auto ready = builder.take_frames();
    if (k <= warmup) continue;
    for (auto& f : ready) out.push_back({std::move(f), with_rates ? rate.window(end_us) : std::vector<double>{}});
  }
  return out;
}

// Balanced clip plan: flicker clips cycle through every (frequency, lux)
// pair at a bias where the flicker is still visible; clean clips cycle
// through the lux presets at any bias.
inline std::vector<ClipSpec> plan_clips(const ExperimentConfig& cfg, std::size_t frames, std::uint64_t seed,
                                        bool any_bias_for_flicker = false) {
  require(frames > 0 && frames % 2 == 0, "frame count must be positive and even");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const std::size_t per_class = frames / 2;
  const std::size_t clips = (per_class + kClipFrames - 1) / kClipFrames;
  const std::size_t conditions = cfg.frequencies.size() * cfg.lux.size();
  std::vector<ClipSpec> plan;
  for (int label = 1; label >= 0; --label) {
    for (std::size_t j = 0; j < clips; ++j) {
      ClipSpec c;
      c.label = label;
      std::vector<int> biases;
      if (label == 1) {
        const std::size_t cond = j % conditions;
        c.frequency = cfg.frequencies[cond / cfg.lux.size()];
        c.lux = cfg.lux[cond % cfg.lux.size()];
        biases = any_bias_for_flicker ? all_biases() : visible_biases(clip_flicker(cfg, c));
        require(!biases.empty(), "flicker too weak to be seen at any bias");
      } else {
        c.lux = cfg.lux[j % cfg.lux.size()];
        biases = all_biases();
      }
      std::uniform_int_distribution<std::size_t> pick(0, biases.size() - 1);
      c.bias_fo = biases[pick(rng)];
      c.sweep_phase = phase(rng);
      c.flicker_phase = phase(rng);
      c.seed = rng();
      plan.push_back(c);
    }
  }
  return plan;
}

struct LabeledSplit {
  FrameSet frames;
  std::vector<FrameLabel> labels;
};

inline const char* kSplitNames[3] = {"train", "val", "test"};

struct Dataset {
  LabeledSplit train, val, test;
  LabeledSplit& split(int i) { return i == 0 ? train : (i == 1 ? val : test); }
  const LabeledSplit& split(int i) const { return i == 0 ? train : (i == 1 ? val : test); }
};

using ProgressFn = std::function<void(const std::string&)>;

inline LabeledSplit generate_split(const ExperimentConfig& cfg, std::size_t frames, std::uint64_t seed,
                                   const ProgressFn& progress = {}) {
  LabeledSplit split;
  split.frames.width = cfg.resolution;
  split.frames.height = cfg.resolution;
  const auto plan = plan_clips(cfg, frames, seed);
  const std::size_t per_class = frames / 2;
  std::size_t taken[2] = {0, 0};
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const ClipSpec& c = plan[i];
    const std::size_t want = std::min<std::size_t>(kClipFrames, per_class - taken[c.label]);
    for (const ClipFrame& f : simulate_clip(cfg, c, 1, static_cast<int>(want))) {
      split.frames.add(f.frame, c.label);
      split.labels.push_back({c.label, c.label ? c.frequency : 0.0, c.lux, c.bias_fo});
    }
    taken[c.label] += want;
    if (progress && (i + 1) % 20 == 0)
      progress("clip " + std::to_string(i + 1) + "/" + std::to_string(plan.size()));
  }
  return split;
}

inline Dataset gen_dataset(const ExperimentConfig& cfg, const ProgressFn& progress = {}) {
  cfg.validate();
  Dataset ds;
  const std::size_t sizes[3] = {cfg.train_frames, cfg.val_frames, cfg.test_frames};
  for (int s = 0; s < 3; ++s) {
    if (progress) progress(std::string("generating ") + kSplitNames[s] + " split");
    ds.split(s) = generate_split(cfg, sizes[s], detail::mix_seed(cfg.seed, 101.0 + s), progress);
  }
  return ds;
}

inline void save_dataset(const std::string& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  for (int s = 0; s < 3; ++s) {
    const auto base = std::filesystem::path(dir) / kSplitNames[s];
    write_frames(base.string() + ".frm", ds.split(s).frames);
    write_labels(base.string() + ".labels", ds.split(s).labels);
  }
}

inline Dataset load_dataset(const std::string& dir) {
  Dataset ds;
  for (int s = 0; s < 3; ++s) {
    const auto base = std::filesystem::path(dir) / kSplitNames[s];
    ds.split(s).frames = load_labeled_frames(base.string() + ".frm", base.string() + ".labels");
    ds.split(s).labels = read_labels(base.string() + ".labels");
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Closed-loop runs

struct CellResult {
  double frequency = 0.0;  // 0 = flicker disabled
  double lux = kHighLux;
  std::vector<SecondRecord> seconds;
};

inline SceneConfig cell_scene(const ExperimentConfig& cfg, double frequency, double lux) {
  return default_scene(cfg.resolution, cfg.resolution, lux, detail::mix_seed(cfg.seed, frequency, lux));
}

inline FlickerConfig cell_flicker(const ExperimentConfig& cfg, double frequency) {
  FlickerConfig f;
  f.enabled = frequency > 0.0;
  f.frequency = frequency > 0.0 ? frequency : 50.0;
  f.amplitude = cfg.amplitude;
  f.waveform = cfg.waveform;
  return f;
}

inline CellResult run_cell(const ExperimentConfig& cfg, double frequency, double lux, const FrameClassifier& classifier,
                           const std::string& events_path = {}, const ProgressFn& progress = {}) {
  cfg.validate();
  SensorConfig sensor;
  sensor.bias_fo = cfg.bias_init;
  std::unique_ptr<EventWriter> writer;
  if (!events_path.empty()) writer = std::make_unique<EventWriter>(events_path, cfg.resolution, cfg.resolution);
  ClosedLoop loop(cell_scene(cfg, frequency, lux), cell_flicker(cfg, frequency), sensor, classifier, {}, writer.get());
  CellResult cell{frequency, lux, {}};
  for (int s = 0; s < cfg.duration; ++s) {
    cell.seconds.push_back(loop.step());
    if (progress) {
      const SecondRecord& r = cell.seconds.back();
      progress("  t=" + std::to_string(r.second) + "s bias=" + std::to_string(r.summary.bias_fo) +
               " flicker_frames=" + std::to_string(r.summary.flicker_frames) + " " +
               std::string(action_name(r.action)));
    }
  }
  if (writer) writer->close();
  return cell;
}

inline const char* kSecondsHeader =
    "second,bias_fo,flicker_frames,total_frames,flicker,mean_ag,mean_any_conf,mean_target_conf,detection_success,"
    "action,next_bias_fo,clean_seconds,exhausted,events";

inline std::string seconds_csv(const CellResult& cell) {
  std::string out = std::string(kSecondsHeader) + "\n";
  for (const SecondRecord& r : cell.seconds) {
    const SecondSummary& s = r.summary;
    out += std::to_string(r.second) + "," + std::to_string(s.bias_fo) + "," + std::to_string(s.flicker_frames) + "," +
           std::to_string(s.total_frames) + "," + (r.flicker ? "1" : "0") + "," + detail::fmt(s.mean_ag) + "," +
           detail::fmt(s.mean_any_conf) + "," + detail::fmt(s.mean_face_conf) + "," +
           detail::fmt(s.detection_success) + "," + std::string(action_name(r.action)) + "," +
           std::to_string(r.state.bias_fo) + "," + std::to_string(r.state.clean_seconds) + "," +
           (r.state.exhausted ? "1" : "0") + "," + std::to_string(r.events) + "\n";
  }
  return out;
}

// Trajectory row as read back from a per-second CSV.
struct SecondRow {
  int second = 0;
  int bias_fo = 0;
  int flicker_frames = 0;
  int total_frames = 0;
  bool flicker = false;
  double mean_ag = 0.0;
  double mean_any_conf = 0.0;
  double mean_target_conf = 0.0;
  double detection_success = 0.0;
  std::string action;
  int next_bias_fo = 0;
  int clean_seconds = 0;
  bool exhausted = false;
  std::uint64_t events = 0;
};

inline std::vector<SecondRow> rows_of(const CellResult& cell) {
  std::vector<SecondRow> rows;
  for (const SecondRecord& r : cell.seconds) {
    const SecondSummary& s = r.summary;
    rows.push_back({r.second, s.bias_fo, static_cast<int>(s.flicker_frames), static_cast<int>(s.total_frames),
                    r.flicker, s.mean_ag, s.mean_any_conf, s.mean_face_conf, s.detection_success,
                    std::string(action_name(r.action)), r.state.bias_fo, r.state.clean_seconds, r.state.exhausted,
                    r.events});
  }
  return rows;
}

inline std::vector<SecondRow> parse_seconds_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && detail::trim(line) == kSecondsHeader,
          "per-second CSV has an unexpected header");
  std::vector<SecondRow> rows;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(detail::trim(item));
    require(f.size() == 14, "per-second CSV row has the wrong number of fields");
    SecondRow r;
    r.second = static_cast<int>(detail::parse_int("second", f[0]));
    r.bias_fo = static_cast<int>(detail::parse_int("bias_fo", f[1]));
    r.flicker_frames = static_cast<int>(detail::parse_int("flicker_frames", f[2]));
    r.total_frames = static_cast<int>(detail::parse_int("total_frames", f[3]));
    r.flicker = detail::parse_int("flicker", f[4]) != 0;
    r.mean_ag = detail::parse_double("mean_ag", f[5]);
    r.mean_any_conf = detail::parse_double("mean_any_conf", f[6]);
    r.mean_target_conf = detail::parse_double("mean_target_conf", f[7]);
    r.detection_success = detail::parse_double("detection_success", f[8]);
    r.action = f[9];
    r.next_bias_fo = static_cast<int>(detail::parse_int("next_bias_fo", f[10]));
    r.clean_seconds = static_cast<int>(detail::parse_int("clean_seconds", f[11]));
    r.exhausted = detail::parse_int("exhausted", f[12]) != 0;
    r.events = static_cast<std::uint64_t>(detail::parse_int("events", f[13]));
    rows.push_back(r);
  }
  return rows;
}

inline constexpr int kFinalWindow = 10;  // seconds

// Before/after summary of one trajectory: the first second against the final
// second, plus the final-window aggregates.
struct CellSummary {
  double frequency = 0.0;
  double lux = 0.0;
  double any_before = 0.0, any_after = 0.0;
  double target_before = 0.0, target_after = 0.0;
  double detection_before = 0.0, detection_after = 0.0;
  double ag_before = 0.0, ag_after = 0.0;
  double detection_final_window = 0.0;
  double target_final_window = 0.0;
  int flicker_seconds_final_window = 0;
  int final_bias = 0;
  bool exhausted = false;

  double any_change_pct() const { return 100.0 * (any_after - any_before); }
  double target_change_pct() const { return 100.0 * (target_after - target_before); }
  double detection_change_pct() const { return 100.0 * (detection_after - detection_before); }
  double ag_change_pct() const { return ag_before > 0.0 ? 100.0 * (ag_after - ag_before) / ag_before : 0.0; }
};

inline CellSummary summarize_cell(double frequency, double lux, const std::vector<SecondRow>& rows) {
  require(rows.size() >= static_cast<std::size_t>(kFinalWindow), "trajectory shorter than the final window");
  CellSummary c;
  c.frequency = frequency;
  c.lux = lux;
  const SecondRow& first = rows.front();
  const SecondRow& last = rows.back();
  c.any_before = first.mean_any_conf;
  c.any_after = last.mean_any_conf;
  c.target_before = first.mean_target_conf;
  c.target_after = last.mean_target_conf;
  c.detection_before = first.detection_success;
  c.detection_after = last.detection_success;
  c.ag_before = first.mean_ag;
  c.ag_after = last.mean_ag;
  std::size_t detected = 0, frames = 0;
  double target = 0.0;
  for (std::size_t i = rows.size() - kFinalWindow; i < rows.size(); ++i) {
    detected += static_cast<std::size_t>(std::llround(rows[i].detection_success * rows[i].total_frames));
    frames += static_cast<std::size_t>(rows[i].total_frames);
    target += rows[i].mean_target_conf;
    c.flicker_seconds_final_window += rows[i].flicker ? 1 : 0;
  }
  c.detection_final_window = detection_success(detected, frames);
  c.target_final_window = target / kFinalWindow;
  c.final_bias = last.next_bias_fo;
  c.exhausted = last.exhausted;
  return c;
}

inline const char* kGridHeader =
    "frequency_hz,lux,any_conf_change_pct,target_conf_change_pct,detection_change_pct,ag_change_pct,"
    "any_conf_before,any_conf_after,target_conf_before,target_conf_after,detection_before,detection_after,"
    "ag_before,ag_after,detection_final10,target_conf_final10,flicker_seconds_final10,final_bias_fo,exhausted";

inline std::string grid_csv(const std::vector<CellSummary>& cells) {
  using detail::fmt;
  std::string out = std::string(kGridHeader) + "\n";
  for (const CellSummary& c : cells) {
    out += detail::fmt_num(c.frequency) + "," + detail::fmt_num(c.lux) + "," + fmt(c.any_change_pct()) + "," +
           fmt(c.target_change_pct()) + "," + fmt(c.detection_change_pct()) + "," + fmt(c.ag_change_pct()) + "," +
           fmt(c.any_before) + "," + fmt(c.any_after) + "," + fmt(c.target_before) + "," + fmt(c.target_after) + "," +
           fmt(c.detection_before) + "," + fmt(c.detection_after) + "," + fmt(c.ag_before) + "," + fmt(c.ag_after) +
           "," + fmt(c.detection_final_window) + "," + fmt(c.target_final_window) + "," +
           std::to_string(c.flicker_seconds_final_window) + "," + std::to_string(c.final_bias) + "," +
           (c.exhausted ? "1" : "0") + "\n";
  }
  return out;
}

inline std::string cell_name(double frequency, double lux) {
  return (frequency > 0.0 ? "f" + detail::fmt_num(frequency) : std::string("control")) + "_lux" +
         detail::fmt_num(lux);
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot open " + path + " for writing");
  out << text;
  out.close();
  require(!out.fail(), "failed to write " + path);
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Grid cells in report order: every (frequency, lux) pair, then the
// flicker-free control at the first lux preset.
inline std::vector<std::pair<double, double>> grid_cells(const ExperimentConfig& cfg) {
  std::vector<std::pair<double, double>> cells;
  for (double lux : cfg.lux)
    for (double f : cfg.frequencies) cells.emplace_back(f, lux);
  cells.emplace_back(0.0, cfg.lux.front());
  return cells;
}

// Rebuilds the grid table from the per-second CSVs in `dir`.
inline std::string report(const ExperimentConfig& cfg, const std::string& dir) {
  std::vector<CellSummary> cells;
  for (const auto& [f, lux] : grid_cells(cfg)) {
    const auto path = std::filesystem::path(dir) / (cell_name(f, lux) + ".csv");
    cells.push_back(summarize_cell(f, lux, parse_seconds_csv(read_text(path.string()))));
  }
  return grid_csv(cells);
}

struct GridResult {
  std::vector<CellResult> cells;
  std::string table;
};

// Runs every cell, writing <out>/<cell>.csv, optional <events_out>/<cell>.evt
// and <out>/grid.csv.
inline GridResult run_grid(const ExperimentConfig& cfg, const FrameClassifier& classifier,
                           const ProgressFn& progress = {}) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out);
  if (!cfg.events_out.empty()) std::filesystem::create_directories(cfg.events_out);
  GridResult grid;
  for (const auto& [f, lux] : grid_cells(cfg)) {
    const std::string name = cell_name(f, lux);
    if (progress) progress("cell " + name);
    const std::string evt =
        cfg.events_out.empty() ? std::string() : (std::filesystem::path(cfg.events_out) / (name + ".evt")).string();
    grid.cells.push_back(run_cell(cfg, f, lux, classifier, evt, progress));
    write_text((std::filesystem::path(cfg.out) / (name + ".csv")).string(), seconds_csv(grid.cells.back()));
  }
  grid.table = report(cfg, cfg.out);
  write_text((std::filesystem::path(cfg.out) / "grid.csv").string(), grid.table);
  return grid;
}

}  // namespace autobias
