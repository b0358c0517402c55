// eatspeed: command line front end for the eating-speed pipeline.

#include "eatspeed/checkpoint.hpp"
#include "eatspeed/episodes.hpp"
#include "eatspeed/pipeline.hpp"
#include "eatspeed/plots.hpp"
#include "eatspeed/recording_io.hpp"
#include "eatspeed/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace eatspeed;

namespace {

// Flags shared by the run-level subcommands.
struct RunFlags {
  std::string config;
  std::vector<std::string> data;
  std::string hands;
  int folds = 0;
  long long seed = -1;
  std::string out;
  std::vector<std::string> train;
  std::vector<std::string> test;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_folds) {
  cmd->add_option("--config", f.config, "RunConfig JSON file")->check(CLI::ExistingFile);
  cmd->add_option("--data", f.data, "dataset root (<root>/<participant>/<day>/), repeatable");
  cmd->add_option("--hands", f.hands, "both | dominant")->check(CLI::IsMember({"both", "dominant"}));
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--out", f.out, "output directory");
  if (with_folds) {
    cmd->add_option("--folds", f.folds, "number of participant folds")->check(CLI::PositiveNumber);
    cmd->add_option("--train", f.train, "holdout mode: training participants")->delimiter(',');
    cmd->add_option("--test", f.test, "holdout mode: test participants")->delimiter(',');
  }
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + file.string());
}

RunConfig resolve(const RunFlags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : run_config_from_json(read_file(f.config));
  if (!f.data.empty()) cfg.datasets.assign(f.data.begin(), f.data.end());
  if (!f.hands.empty()) cfg.hands = hands_mode_from_string(f.hands);
  if (f.folds > 0) cfg.folds = f.folds;
  if (f.seed >= 0) cfg.seed = static_cast<std::uint64_t>(f.seed);
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (!f.train.empty()) cfg.train_participants = f.train;
  if (!f.test.empty()) cfg.test_participants = f.test;
  cfg.validate();
  if (cfg.datasets.empty()) throw std::invalid_argument("no dataset given (--data or \"datasets\" in --config)");
  return cfg;
}

std::vector<PreparedRecording> load_or_throw(const RunConfig& cfg) {
  std::vector<std::string> failures;
  auto data = load_datasets(cfg, failures);
  for (const auto& f : failures) std::cerr << "warning: skipped " << f << "\n";
  if (data.empty()) throw std::runtime_error("no loadable recordings under the given datasets");
  return data;
}

void print_epoch(int fold, const EpochReport& r) {
  std::cerr << (fold >= 0 ? "fold " + std::to_string(fold) + " " : std::string()) << "epoch " << r.epoch
            << " loss " << r.train_loss << " val_f1 " << r.val_f1 << (r.improved ? " *" : "") << "\n";
}

void write_probs(const ProbSequence& p, const fs::path& file) {
  std::ostringstream out;
  out << "t,p_other,p_eating,p_drinking\n";
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    out << format_number(p.start_s + static_cast<double>(i) / p.rate_hz);
    for (Eigen::Index c = 0; c < p.probs.cols(); ++c) out << ',' << format_number(p.probs(i, c));
    out << '\n';
  }
  write_file(file, out.str());
}

ProbSequence read_probs(const fs::path& file, Hand hand) {
  std::istringstream in(read_file(file));
  std::string line;
  std::getline(in, line);
  if (line.rfind("t,p_other,p_eating,p_drinking", 0) != 0) {
    throw std::runtime_error(file.string() + ": header must be t,p_other,p_eating,p_drinking");
  }
  std::vector<std::array<double, 4>> rows;
  for (int row = 2; std::getline(in, line); ++row) {
    if (line.empty()) continue;
    std::array<double, 4> v{};
    std::istringstream fields(line);
    std::string cell;
    for (std::size_t c = 0; c < 4; ++c) {
      if (!std::getline(fields, cell, ',')) throw std::runtime_error(file.string() + " row " + std::to_string(row) + ": expected 4 fields");
      v[c] = std::stod(cell);
    }
    rows.push_back(v);
  }
  if (rows.empty()) throw std::runtime_error(file.string() + ": no frames");
  ProbSequence p;
  p.hand = hand;
  p.start_s = rows.front()[0];
  if (rows.size() > 1) p.rate_hz = 1.0 / (rows[1][0] - rows[0][0]);
  p.probs.resize(static_cast<Eigen::Index>(rows.size()), kNumClasses);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int c = 0; c < kNumClasses; ++c) p.probs(static_cast<Eigen::Index>(i), c) = rows[i][c + 1];
  }
  validate(p);
  return p;
}

int cmd_ingest(const ImportOptions& opts, const std::string& out) {
  const auto rec = import_recording(opts);
  save_recording(rec, out);
  std::cout << "wrote " << out << " (" << rec.right.size() << " right, " << rec.left.size() << " left frames, "
            << (rec.bites_gt ? rec.bites_gt->size() : 0) << " annotated bites)\n";
  return 0;
}

int cmd_synth(const std::string& out, std::uint64_t seed, int small) {
  std::vector<SynthSpec> specs;
  if (small > 0) {
    // Short single-episode days, enough to exercise training and evaluation quickly.
    for (int p = 1; p <= small; ++p) {
      SynthSpec spec;
      spec.participant_id = (p < 10 ? "P0" : "P") + std::to_string(p);
      spec.day_duration_s = 1200;
      spec.episodes = {{240, 600, 2.0 + 0.5 * p}};
      spec.left_hand_fraction = 0.3;
      spec.seed = seed * 1000 + static_cast<std::uint64_t>(p);
      specs.push_back(spec);
    }
  } else {
    specs = default_benchmark_suite(seed);
  }
  for (const auto& spec : specs) {
    const auto day = generate(spec);
    save_recording(day.recording, fs::path(out) / spec.participant_id / spec.day_id);
    std::cout << spec.participant_id << "/" << spec.day_id << ": " << day.bites.size() << " bites, "
              << day.episodes.size() << " episodes, " << spec.day_duration_s / 3600.0 << " h\n";
  }
  return 0;
}

int cmd_preprocess(const std::string& recording, const std::string& out) {
  const auto rec = prepare(load_recording(recording));
  const auto& s = rec.series;
  std::ostringstream csv;
  csv << "hand,t,ax,ay,az,gx,gy,gz" << (s.labels ? ",label" : "") << "\n";
  for (Eigen::Index i = 0; i < s.data.rows(); ++i) {
    const bool right = i < s.split_index;
    const double t = right ? s.right_start_s + static_cast<double>(i) / s.rate_hz
                           : s.left_start_s + static_cast<double>(i - s.split_index) / s.rate_hz;
    csv << (right ? "right" : "left") << ',' << format_number(t);
    for (Eigen::Index c = 0; c < s.data.cols(); ++c) csv << ',' << format_number(s.data(i, c));
    if (s.labels) csv << ',' << static_cast<int>((*s.labels)[static_cast<std::size_t>(i)]);
    csv << '\n';
  }
  write_file(fs::path(out) / "combined.csv", csv.str());
  std::cout << "wrote " << (fs::path(out) / "combined.csv").string() << " (" << s.data.rows() << " frames, left from "
            << s.split_index << ")\n";
  return 0;
}

int cmd_train(const RunFlags& flags) {
  const auto cfg = resolve(flags);
  const auto data = load_or_throw(cfg);
  std::set<std::string> ids;
  for (const auto& r : data) ids.insert(r.participant_id);
  const std::vector<std::string> participants(ids.begin(), ids.end());
  const auto n_val = static_cast<std::size_t>(
      std::clamp(cfg.validation_participants, 0, static_cast<int>(participants.size()) - 1));
  const std::set<std::string> val_ids(participants.end() - static_cast<std::ptrdiff_t>(n_val), participants.end());
  std::vector<const PreparedRecording*> train, val;
  for (const auto& r : data) (val_ids.count(r.participant_id) ? val : train).push_back(&r);
  const auto ckpt = train_on(train, val, cfg, cfg.seed, [](const EpochReport& r) { print_epoch(-1, r); });
  save_checkpoint(ckpt, cfg.out_dir / "model.ckpt");
  write_file(cfg.out_dir / "config.json", run_config_to_json(cfg) + "\n");
  std::cout << "wrote " << (cfg.out_dir / "model.ckpt").string() << " (best epoch " << ckpt.metadata.best_epoch
            << " of " << ckpt.metadata.epochs_run << ")\n";
  return 0;
}

int cmd_predict(const std::string& model, const std::string& recording, const std::string& hands,
                const std::string& out) {
  const auto ckpt = load_checkpoint(model);
  const auto rec = prepare(load_recording(recording));
  const auto analysis = analyze(rec, ckpt.network(), ckpt.norm, hands_mode_from_string(hands));
  if (analysis.right) write_probs(*analysis.right, fs::path(out) / "probs_right.csv");
  if (analysis.left) write_probs(*analysis.left, fs::path(out) / "probs_left.csv");
  std::cout << "wrote class probabilities to " << out << "\n";
  return 0;
}

int cmd_detect(const std::string& probs_dir, const std::string& out) {
  BiteSet right, left;
  bool any = false;
  if (fs::exists(fs::path(probs_dir) / "probs_right.csv")) {
    right = detect_bites(read_probs(fs::path(probs_dir) / "probs_right.csv", Hand::kRight));
    any = true;
  }
  if (fs::exists(fs::path(probs_dir) / "probs_left.csv")) {
    left = detect_bites(read_probs(fs::path(probs_dir) / "probs_left.csv", Hand::kLeft));
    any = true;
  }
  if (!any) throw std::runtime_error(probs_dir + ": neither probs_right.csv nor probs_left.csv found");
  const auto bites = or_combine(right, left);
  fs::create_directories(out);
  write_bites_csv(bites.bites, fs::path(out) / "bites.csv");
  std::cout << "wrote " << bites.size() << " bites (" << right.size() << " right, " << left.size() << " left)\n";
  return 0;
}

BiteSet read_bite_set(const std::string& file) {
  BiteSet set;
  set.bites = read_bites_csv(file);
  return set;
}

int cmd_episodes(const std::string& bites_file, const std::string& out) {
  const auto episodes = detect_episodes(read_bite_set(bites_file));
  fs::create_directories(out);
  write_episodes_csv(episodes.episodes, fs::path(out) / "episodes.csv");
  std::cout << "wrote " << episodes.size() << " episodes\n";
  return 0;
}

int cmd_speed(const std::string& bites_file, const std::string& episodes_file, double span_s, bool eating_only,
              const std::string& out) {
  const auto bites = read_bite_set(bites_file);
  EpisodeSet episodes;
  episodes.episodes = read_episodes_csv(episodes_file);
  episodes = episode_speed(bites, episodes, eating_only);
  if (span_s <= 0.0) {
    for (const auto& b : bites.bites) span_s = std::max(span_s, b.t_r);
  }
  fs::create_directories(out);
  write_episodes_csv(episodes.episodes, fs::path(out) / "episodes.csv");
  write_minute_track_csv(minute_speed(bites, span_s), fs::path(out) / "minutes.csv");
  for (const auto& e : episodes.episodes) {
    std::cout << format_number(e.t_l) << "-" << format_number(e.t_r) << " s: " << e.bite_count << " bites, "
              << e.speed_bites_per_min << " bites/min\n";
  }
  return 0;
}

int cmd_evaluate(const RunFlags& flags, const std::string& model) {
  const auto cfg = resolve(flags);
  const auto ckpt = load_checkpoint(model);
  const auto result = evaluate_all(load_or_throw(cfg), ckpt, cfg);
  write_run(result, cfg);
  std::cout << to_text(result.aggregate);
  return 0;
}

int cmd_crossval(const RunFlags& flags) {
  const auto cfg = resolve(flags);
  const auto result = crossval(load_or_throw(cfg), cfg, print_epoch);
  write_run(result, cfg);
  std::cout << to_text(result.aggregate);
  for (const auto& f : result.failures) std::cerr << "warning: failed " << f << "\n";
  return 0;
}

int cmd_report(const std::string& run, const std::string& out_arg) {
  const fs::path root(run);
  const fs::path out = out_arg.empty() ? root : fs::path(out_arg);
  const auto report = report_from_json(read_file(root / "report.json"));
  CrossvalResult result;
  result.aggregate = report;
  const fs::path recs = root / "recordings";
  if (fs::exists(recs)) {
    std::vector<fs::path> dirs;
    for (const auto& p : fs::directory_iterator(recs)) {
      if (!p.is_directory()) continue;
      for (const auto& d : fs::directory_iterator(p.path())) {
        if (d.is_directory()) dirs.push_back(d.path());
      }
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
      RecordingResult r;
      r.participant_id = d.parent_path().filename().string();
      r.day_id = d.filename().string();
      r.analysis.bites.bites = read_bites_csv(d / "bites.csv");
      r.analysis.episodes.episodes = read_episodes_csv(d / "episodes.csv");
      r.analysis.minutes = read_minute_track_csv(d / "minutes.csv");
      if (fs::exists(d / "episodes_gt.csv")) r.episodes_gt = read_episodes_csv(d / "episodes_gt.csv");
      if (fs::exists(d / "minutes_gt.csv")) r.minutes_gt = read_minute_track_csv(d / "minutes_gt.csv");
      result.recordings.push_back(std::move(r));
    }
  }
  if (out != root) write_report(report, out);
  write_plots(result, out / "plots");
  std::cout << to_text(report);
  return 0;
}

void print_error(const std::string& command, const std::string& message, int code) {
  const nlohmann::json line{{"error", message}, {"command", command}, {"exit_code", code}};
  std::cerr << line.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eating speed estimation from wrist IMU recordings"};
  app.require_subcommand(1);

  ImportOptions import;
  std::string rec_out;
  auto* ingest = app.add_subcommand("ingest", "import per-hand CSV files into the canonical layout");
  ingest->add_option("--right", import.right_file, "right-hand channel CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--left", import.left_file, "left-hand channel CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--annotations", import.annotation_file, "bite annotations CSV")->check(CLI::ExistingFile);
  ingest->add_option("--participant", import.participant_id)->required();
  ingest->add_option("--day", import.day_id)->required();
  ingest->add_option("--rate", import.sample_rate_hz, "sample rate in Hz")->capture_default_str();
  ingest->add_option("--start", import.start_time_s, "start time when the files carry none")->capture_default_str();
  ingest->add_option("--out", rec_out, "recording directory")->required();

  std::string synth_out;
  std::uint64_t synth_seed = 2024;
  int synth_small = 0;
  auto* synth = app.add_subcommand("synth", "write a synthetic benchmark dataset");
  synth->add_option("--out", synth_out, "dataset root")->required();
  synth->add_option("--seed", synth_seed)->capture_default_str();
  synth->add_option("--small", synth_small, "N participants with one short day each instead of the full suite");

  std::string recording, stage_out;
  auto* preprocess = app.add_subcommand("preprocess", "16 Hz two-hand combined series of one recording");
  preprocess->add_option("--recording", recording)->required()->check(CLI::ExistingDirectory);
  preprocess->add_option("--out", stage_out)->required();

  RunFlags train_flags;
  auto* train = app.add_subcommand("train", "train a model on every recording of the datasets");
  add_run_flags(train, train_flags, false);

  std::string model, hands = "both";
  auto* predict = app.add_subcommand("predict", "per-frame class probabilities for one recording");
  predict->add_option("--model", model)->required()->check(CLI::ExistingFile);
  predict->add_option("--recording", recording)->required()->check(CLI::ExistingDirectory);
  predict->add_option("--hands", hands)->check(CLI::IsMember({"both", "dominant"}))->capture_default_str();
  predict->add_option("--out", stage_out)->required();

  std::string probs_dir;
  auto* detect = app.add_subcommand("detect", "bites from predicted probabilities");
  detect->add_option("--probs", probs_dir, "directory with probs_<hand>.csv")->required()->check(CLI::ExistingDirectory);
  detect->add_option("--out", stage_out)->required();

  std::string bites_file, episodes_file;
  auto* episodes = app.add_subcommand("episodes", "eating episodes from bites");
  episodes->add_option("--bites", bites_file)->required()->check(CLI::ExistingFile);
  episodes->add_option("--out", stage_out)->required();

  double span_s = 0.0;
  bool eating_only = false;
  auto* speed = app.add_subcommand("speed", "episode and minute-level eating speed");
  speed->add_option("--bites", bites_file)->required()->check(CLI::ExistingFile);
  speed->add_option("--episodes", episodes_file)->required()->check(CLI::ExistingFile);
  speed->add_option("--span", span_s, "recording length in seconds (default: last bite end)");
  speed->add_flag("--eating-only", eating_only, "exclude drinking bites from episode speed");
  speed->add_option("--out", stage_out)->required();

  RunFlags eval_flags;
  auto* evaluate = app.add_subcommand("evaluate", "run a trained model over datasets and score it");
  add_run_flags(evaluate, eval_flags, false);
  evaluate->add_option("--model", model)->required()->check(CLI::ExistingFile);

  RunFlags cv_flags;
  auto* crossval_cmd = app.add_subcommand("crossval", "participant-level cross-validation or holdout run");
  add_run_flags(crossval_cmd, cv_flags, true);

  std::string run_dir, report_out;
  auto* report = app.add_subcommand("report", "summary and plots for a finished run directory");
  report->add_option("--run", run_dir)->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", report_out, "destination (default: the run directory)");

  std::string command = "eatspeed";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (!app.get_subcommands().empty()) command = app.get_subcommands().front()->get_name();
    print_error(command, e.what(), 2);
    return 2;
  }

  const auto* sub = app.get_subcommands().front();
  command = sub->get_name();
  try {
    if (sub == ingest) return cmd_ingest(import, rec_out);
    if (sub == synth) return cmd_synth(synth_out, synth_seed, synth_small);
    if (sub == preprocess) return cmd_preprocess(recording, stage_out);
    if (sub == train) return cmd_train(train_flags);
    if (sub == predict) return cmd_predict(model, recording, hands, stage_out);
    if (sub == detect) return cmd_detect(probs_dir, stage_out);
    if (sub == episodes) return cmd_episodes(bites_file, stage_out);
    if (sub == speed) return cmd_speed(bites_file, episodes_file, span_s, eating_only, stage_out);
    if (sub == evaluate) return cmd_evaluate(eval_flags, model);
    if (sub == crossval_cmd) return cmd_crossval(cv_flags);
    if (sub == report) return cmd_report(run_dir, report_out);
  } catch (const std::exception& e) {
    print_error(command, e.what(), 1);
    return 1;
  }
  return 0;
}
