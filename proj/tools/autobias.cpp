// Command-line front end: dataset generation, training, single closed-loop
// runs, the frequency x lux grid and report regeneration.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "autobias/harness.hpp"

namespace fs = std::filesystem;
using namespace autobias;

namespace {

struct Flags {
  std::string config;
  std::vector<double> freq;
  std::vector<double> lux;
  int duration = 0;
  std::uint64_t seed = 0;
  int resolution = 0;
  int bias_init = 0;
  std::string out;
  std::string events_out;
  std::string model;
  double amplitude = 0.0;
  std::string waveform;
  int epochs = 0;
  int patience = 0;
};

void add_common(CLI::App* cmd, Flags& f, std::vector<CLI::Option*>& opts) {
  opts.push_back(cmd->add_option("--config", f.config, "key = value configuration file")->check(CLI::ExistingFile));
  opts.push_back(cmd->add_option("--freq", f.freq, "flicker frequency in Hz (list for grid, 0 = no flicker)")->delimiter(','));
  opts.push_back(cmd->add_option("--lux", f.lux, "ambient lux (list for grid)")->delimiter(','));
  opts.push_back(cmd->add_option("--duration", f.duration, "closed-loop duration in seconds"));
  opts.push_back(cmd->add_option("--seed", f.seed, "master seed"));
  opts.push_back(cmd->add_option("--resolution", f.resolution, "sensor width and height in pixels"));
  opts.push_back(cmd->add_option("--bias-init", f.bias_init, "initial bias_fo"));
  opts.push_back(cmd->add_option("--out", f.out, "output directory"));
  opts.push_back(cmd->add_option("--events-out", f.events_out, "EVT1 file (run) or directory (grid)"));
  opts.push_back(cmd->add_option("--model", f.model, "CNN1 parameter file"));
  opts.push_back(cmd->add_option("--amplitude", f.amplitude, "flicker amplitude relative to ambient"));
  opts.push_back(cmd->add_option("--waveform", f.waveform, "half_rectified_sine or square"));
  opts.push_back(cmd->add_option("--epochs", f.epochs, "training epochs"));
  opts.push_back(cmd->add_option("--patience", f.patience, "early stop after this many epochs without improvement"));
}

bool given(const CLI::App* cmd, const std::string& name) { return cmd->count(name) > 0; }

// Defaults, then the config file, then explicit flags.
ExperimentConfig resolve(const CLI::App* cmd, const Flags& f) {
  ExperimentConfig cfg;
  if (!f.config.empty()) apply_config_file(cfg, f.config);
  if (given(cmd, "--freq")) cfg.frequencies = f.freq;
  if (given(cmd, "--lux")) cfg.lux = f.lux;
  if (given(cmd, "--duration")) cfg.duration = f.duration;
  if (given(cmd, "--seed")) cfg.seed = f.seed;
  if (given(cmd, "--resolution")) cfg.resolution = f.resolution;
  if (given(cmd, "--bias-init")) cfg.bias_init = f.bias_init;
  if (given(cmd, "--out")) cfg.out = f.out;
  if (given(cmd, "--events-out")) cfg.events_out = f.events_out;
  if (given(cmd, "--model")) cfg.model = f.model;
  if (given(cmd, "--amplitude")) cfg.amplitude = f.amplitude;
  if (given(cmd, "--waveform")) cfg.waveform = parse_waveform(f.waveform);
  if (given(cmd, "--epochs")) cfg.train.epochs = f.epochs;
  if (given(cmd, "--patience")) cfg.train.patience = f.patience;
  return cfg;
}

void log_line(const std::string& s) { std::cerr << s << '\n'; }

std::string dataset_dir(const ExperimentConfig& cfg) { return (fs::path(cfg.out) / "dataset").string(); }

FrameClassifier load_classifier(const ExperimentConfig& cfg) {
  const std::string path = cfg.model_path();
  require(fs::exists(path), "model " + path + " not found; run 'train' first");
  return cnn_classifier(std::make_shared<const CnnParams<float>>(load_cnn(path)));
}

int cmd_gen_dataset(const ExperimentConfig& cfg) {
  cfg.validate();
  const Dataset ds = gen_dataset(cfg, log_line);
  save_dataset(dataset_dir(cfg), ds);
  for (int s = 0; s < 3; ++s) {
    const FrameSet& f = ds.split(s).frames;
    std::cout << kSplitNames[s] << ": " << f.size() << " frames (" << f.count(1) << " flicker, " << f.count(0)
              << " clean)\n";
  }
  std::cout << "written to " << dataset_dir(cfg) << '\n';
  return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
  cfg.validate();
  const Dataset ds = load_dataset(dataset_dir(cfg));
  std::string log = "epoch,train_loss,train_accuracy,val_accuracy\n";
  const TrainResult r = train(ds.train.frames, ds.val.frames, cfg.train, [&](const EpochStats& s) {
    log += std::to_string(s.epoch) + "," + detail::fmt(s.train_loss) + "," + detail::fmt(s.train_accuracy) + "," +
           detail::fmt(s.val_accuracy) + "\n";
    log_line("epoch " + std::to_string(s.epoch) + " loss " + detail::fmt(s.train_loss) + " val " +
             detail::fmt(s.val_accuracy));
  });
  fs::create_directories(fs::path(cfg.model_path()).parent_path().empty() ? fs::path(".")
                                                                          : fs::path(cfg.model_path()).parent_path());
  save_cnn(cfg.model_path(), r.params);
  write_text((fs::path(cfg.out) / "training.csv").string(), log);
  std::cout << "best epoch " << r.best_epoch << ", validation accuracy " << r.best_val_accuracy
            << ", test accuracy " << accuracy(r.params, ds.test.frames) << '\n';
  std::cout << "model written to " << cfg.model_path() << '\n';
  return 0;
}

int cmd_run(const ExperimentConfig& cfg) {
  cfg.validate();
  require(cfg.frequencies.size() == 1 && cfg.lux.size() == 1, "run takes a single --freq and a single --lux");
  const double f = cfg.frequencies.front();
  const double lux = cfg.lux.front();
  const FrameClassifier classifier = load_classifier(cfg);
  fs::create_directories(cfg.out);
  const CellResult cell = run_cell(cfg, f, lux, classifier, cfg.events_out, log_line);
  const std::string path = (fs::path(cfg.out) / (cell_name(f, lux) + ".csv")).string();
  write_text(path, seconds_csv(cell));
  std::cout << grid_csv({summarize_cell(f, lux, rows_of(cell))});
  std::cout << "per-second trajectory written to " << path << '\n';
  return 0;
}

int cmd_grid(const ExperimentConfig& cfg) {
  cfg.validate();
  for (double f : cfg.frequencies) require(f > 0.0, "grid frequencies must be positive; the control row is added");
  const GridResult g = run_grid(cfg, load_classifier(cfg), log_line);
  std::cout << g.table;
  return 0;
}

int cmd_report(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::string table = report(cfg, cfg.out);
  write_text((fs::path(cfg.out) / "grid.csv").string(), table);
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-camera autobiasing simulator"};
  app.require_subcommand(1);
  Flags flags;
  std::vector<CLI::Option*> opts;
  struct Cmd {
    const char* name;
    const char* help;
    int (*fn)(const ExperimentConfig&);
  };
  const Cmd cmds[] = {
      {"gen-dataset", "simulate the labelled train/val/test frame corpus", cmd_gen_dataset},
      {"train", "train the flicker classifier on the generated corpus", cmd_train},
      {"run", "closed-loop run of one (frequency, lux) cell", cmd_run},
      {"grid", "closed-loop runs over every frequency x lux cell plus a control", cmd_grid},
      {"report", "rebuild the grid table from per-second CSVs", cmd_report},
  };
  std::vector<CLI::App*> subs;
  for (const Cmd& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, flags, opts);
    subs.push_back(sub);
  }
  CLI11_PARSE(app, argc, argv);

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) return cmds[i].fn(resolve(subs[i], flags));
    }
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
