#include "eatspeed/pipeline.hpp"

#include "eatspeed/inference.hpp"
#include "eatspeed/plots.hpp"
#include "eatspeed/recording_io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>

namespace eatspeed {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  void text(const std::string& s) {
    bytes(s.data(), s.size());
    bytes("\0", 1);
  }
  template <typename T>
  void value(const T& v) {
    bytes(&v, sizeof(T));
  }
  [[nodiscard]] std::string hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 0; i < 16; ++i) out[static_cast<std::size_t>(15 - i)] = kDigits[(hash_ >> (4 * i)) & 0xf];
    return out;
  }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::vector<BiteInterval> shift(std::vector<BiteInterval> bites, double by) {
  for (auto& b : bites) {
    b.t_l += by;
    b.t_r += by;
  }
  return bites;
}

std::vector<EatingEpisode> shift(std::vector<EatingEpisode> episodes, double by) {
  for (auto& e : episodes) {
    e.t_l += by;
    e.t_r += by;
  }
  return episodes;
}

std::vector<BiteInterval> runs_of(const std::vector<std::uint8_t>& labels, Eigen::Index begin, Eigen::Index end,
                                  double rate, Hand hand) {
  std::vector<std::uint8_t> part(labels.begin() + begin, labels.begin() + end);
  return extract_runs(LabelSequence(std::move(part), rate), 0.0, hand);
}

// A combined series holding only one hand's block; the seam sits at one end.
CombinedSeries single_hand(const CombinedSeries& series, Hand hand) {
  CombinedSeries out;
  out.rate_hz = series.rate_hz;
  out.right_start_s = series.right_start_s;
  out.left_start_s = series.left_start_s;
  if (hand == Hand::kRight) {
    out.data = series.data.topRows(series.split_index);
    out.split_index = out.data.rows();
  } else {
    out.data = series.data.bottomRows(series.size() - series.split_index);
    out.split_index = 0;
  }
  return out;
}

Hand dominant_of(const PreparedRecording& rec) {
  if (!rec.dominant_hand) {
    throw Error(rec.participant_id + "/" + rec.day_id + ": dominant hand unknown; set dominant_hand in meta");
  }
  return *rec.dominant_hand;
}

std::vector<const PreparedRecording*> select(const std::vector<PreparedRecording>& data,
                                             const std::vector<std::string>& participants) {
  std::vector<const PreparedRecording*> out;
  for (const auto& rec : data) {
    if (std::find(participants.begin(), participants.end(), rec.participant_id) != participants.end()) {
      out.push_back(&rec);
    }
  }
  return out;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  out << text;
}

}  // namespace

std::string_view to_string(HandsMode mode) { return mode == HandsMode::kBoth ? "both" : "dominant"; }

HandsMode hands_mode_from_string(std::string_view text) {
  if (text == "both") return HandsMode::kBoth;
  if (text == "dominant") return HandsMode::kDominant;
  throw Error("hands must be 'both' or 'dominant', got '" + std::string(text) + "'");
}

void RunConfig::validate() const {
  model.validate();
  if (folds < 1) throw Error("folds must be at least 1");
  if (train_participants.empty() != test_participants.empty()) {
    throw Error("holdout mode needs both train and test participant lists");
  }
  if (validation_participants < 0) throw Error("validation_participants must be non-negative");
  if (!(negative_fraction >= 0.0 && negative_fraction <= 1.0)) throw Error("negative_fraction must lie in [0, 1]");
  if (train_stride < 0) throw Error("train_stride must be non-negative");
}

std::string run_config_to_json(const RunConfig& cfg, bool with_output) {
  json j;
  j["datasets"] = json::array();
  for (const auto& d : cfg.datasets) j["datasets"].push_back(d.generic_string());
  j["hands"] = std::string(to_string(cfg.hands));
  j["model"] = json::parse(model_config_to_json(cfg.model));
  j["folds"] = cfg.folds;
  j["seed"] = cfg.seed;
  if (with_output) j["out"] = cfg.out_dir.generic_string();
  j["train_participants"] = cfg.train_participants;
  j["test_participants"] = cfg.test_participants;
  j["validation_participants"] = cfg.validation_participants;
  j["negative_fraction"] = cfg.negative_fraction;
  j["train_stride"] = cfg.train_stride;
  j["plots"] = cfg.plots;
  return j.dump(2);
}

RunConfig run_config_from_json(const std::string& text) {
  const auto j = json::parse(text);
  if (!j.is_object()) throw Error("run config must be a JSON object");
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "datasets") {
      for (const auto& d : value) cfg.datasets.emplace_back(d.get<std::string>());
    } else if (key == "hands") {
      cfg.hands = hands_mode_from_string(value.get<std::string>());
    } else if (key == "model") {
      cfg.model = model_config_from_json(value.dump());
    } else if (key == "folds") {
      cfg.folds = value.get<int>();
    } else if (key == "seed") {
      cfg.seed = value.get<std::uint64_t>();
    } else if (key == "out") {
      cfg.out_dir = value.get<std::string>();
    } else if (key == "train_participants") {
      cfg.train_participants = value.get<std::vector<std::string>>();
    } else if (key == "test_participants") {
      cfg.test_participants = value.get<std::vector<std::string>>();
    } else if (key == "validation_participants") {
      cfg.validation_participants = value.get<int>();
    } else if (key == "negative_fraction") {
      cfg.negative_fraction = value.get<double>();
    } else if (key == "train_stride") {
      cfg.train_stride = value.get<int>();
    } else if (key == "plots") {
      cfg.plots = value.get<bool>();
    } else {
      throw Error("unknown run config key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

PreparedRecording prepare(const Recording& rec) {
  validate(rec);
  PreparedRecording out;
  out.participant_id = rec.participant_id;
  out.day_id = rec.day_id;
  out.dominant_hand = rec.dominant_hand;
  out.series = prepare_recording(rec);
  const double origin = out.series.right_start_s;
  out.series.right_start_s = 0.0;
  out.series.left_start_s -= origin;
  out.span_s = static_cast<double>(out.series.split_index) / out.series.rate_hz;

  if (rec.bites_gt) {
    out.annotated = true;
    out.bites_gt = shift(*rec.bites_gt, -origin);
  } else if (out.series.labels) {
    out.annotated = true;
    const auto& labels = *out.series.labels;
    const auto right = runs_of(labels, 0, out.series.split_index, out.series.rate_hz, Hand::kRight);
    const auto left = runs_of(labels, out.series.split_index, out.series.size(), out.series.rate_hz, Hand::kLeft);
    out.bites_gt = or_combine({right, BiteSource::kAnnotation}, {shift(left, out.series.left_start_s), BiteSource::kAnnotation}).bites;
  }
  if (!out.annotated) return out;
  std::stable_sort(out.bites_gt.begin(), out.bites_gt.end(), [](const auto& a, const auto& b) { return a.t_l < b.t_l; });
  const BiteSet gt{out.bites_gt, BiteSource::kAnnotation};
  out.episodes_gt = rec.episodes_gt ? shift(*rec.episodes_gt, -origin) : episode_speed(gt, detect_episodes(gt)).episodes;
  out.minutes_gt = minute_speed(gt, out.span_s);
  return out;
}

std::string dataset_hash(const std::vector<PreparedRecording>& data) {
  Fnv1a h;
  for (const auto& rec : data) {
    h.text(rec.participant_id);
    h.text(rec.day_id);
    h.value(rec.series.split_index);
    h.value(rec.series.rate_hz);
    h.value(rec.series.left_start_s);
    h.bytes(rec.series.data.data(), static_cast<std::size_t>(rec.series.data.size()) * sizeof(double));
    if (rec.series.labels) h.bytes(rec.series.labels->data(), rec.series.labels->size());
    for (const auto& b : rec.bites_gt) {
      h.value(b.t_l);
      h.value(b.t_r);
      h.value(b.klass);
      h.value(b.hand);
    }
    for (const auto& e : rec.episodes_gt) {
      h.value(e.t_l);
      h.value(e.t_r);
      h.value(e.bite_count);
    }
  }
  return h.hex();
}

Analysis analyze(const PreparedRecording& rec, const std::optional<ProbSequence>& right,
                 const std::optional<ProbSequence>& left) {
  Analysis out;
  out.right = right;
  out.left = left;
  out.labels.assign(static_cast<std::size_t>(rec.series.size()), 0);
  BiteSet right_bites;
  BiteSet left_bites;
  if (right) {
    const auto labels = argmax_labels(*right).classes();
    std::copy(labels.begin(), labels.end(), out.labels.begin());
    right_bites = detect_bites(*right);
  }
  if (left) {
    const auto labels = argmax_labels(*left).classes();
    std::copy(labels.begin(), labels.end(), out.labels.begin() + rec.series.split_index);
    left_bites = detect_bites(*left);
  }
  out.bites = or_combine(right_bites, left_bites);
  out.episodes = episode_speed(out.bites, detect_episodes(out.bites));
  // Bites near the end of a shorter left block can lie past the right span.
  std::vector<BiteInterval> in_span;
  for (const auto& b : out.bites.bites) {
    if (b.midpoint() <= rec.span_s) in_span.push_back(b);
  }
  out.minutes = minute_speed({in_span, out.bites.source}, rec.span_s);
  return out;
}

Analysis analyze(const PreparedRecording& rec, const Network<float>& net, const NormStats& norm, HandsMode mode) {
  if (mode == HandsMode::kBoth) {
    auto probs = predict_combined(net, norm, rec.series);
    return analyze(rec, std::move(probs.right), std::move(probs.left));
  }
  const Hand hand = dominant_of(rec);
  auto probs = predict_combined(net, norm, single_hand(rec.series, hand));
  if (hand == Hand::kRight) return analyze(rec, std::move(probs.right), std::nullopt);
  return analyze(rec, std::nullopt, std::move(probs.left));
}

Analysis analyze_oracle(const PreparedRecording& rec, HandsMode mode) {
  if (!rec.series.labels) throw Error(rec.participant_id + "/" + rec.day_id + ": no label tracks for the oracle");
  const auto& labels = *rec.series.labels;
  const auto split = static_cast<std::size_t>(rec.series.split_index);
  std::optional<ProbSequence> right = one_hot(
      LabelSequence({labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(split)}, rec.series.rate_hz),
      rec.series.right_start_s, Hand::kRight);
  std::optional<ProbSequence> left = one_hot(
      LabelSequence({labels.begin() + static_cast<std::ptrdiff_t>(split), labels.end()}, rec.series.rate_hz),
      rec.series.left_start_s, Hand::kLeft);
  if (mode == HandsMode::kDominant) {
    (dominant_of(rec) == Hand::kRight ? left : right).reset();
  }
  return analyze(rec, right, left);
}

EvalReport evaluate(const PreparedRecording& rec, const Analysis& analysis) {
  if (!rec.annotated) throw Error(rec.participant_id + "/" + rec.day_id + ": recording has no ground truth");
  static const std::vector<std::uint8_t> kNone;
  return evaluate(analysis.labels, rec.series.labels ? *rec.series.labels : kNone, analysis.bites.bites, rec.bites_gt,
                  analysis.episodes.episodes, rec.episodes_gt, analysis.minutes, rec.minutes_gt);
}

std::vector<FoldPlan> plan_folds(std::vector<std::string> participants, const RunConfig& cfg) {
  std::sort(participants.begin(), participants.end());
  participants.erase(std::unique(participants.begin(), participants.end()), participants.end());
  std::vector<FoldPlan> plans;
  const auto pick_validation = [&](FoldPlan& plan) {
    // The last training participants (in seeded order) guard early stopping.
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(cfg.validation_participants),
                                         plan.train.empty() ? 0 : plan.train.size() - 1);
    plan.validation.assign(plan.train.end() - static_cast<std::ptrdiff_t>(n), plan.train.end());
    plan.train.resize(plan.train.size() - n);
  };

  if (!cfg.train_participants.empty()) {
    FoldPlan plan;
    plan.train = cfg.train_participants;
    plan.test = cfg.test_participants;
    for (const auto& id : plan.train) {
      if (!std::binary_search(participants.begin(), participants.end(), id)) throw Error("unknown training participant " + id);
    }
    for (const auto& id : plan.test) {
      if (!std::binary_search(participants.begin(), participants.end(), id)) throw Error("unknown test participant " + id);
    }
    pick_validation(plan);
    check_no_leakage(plan);
    plans.push_back(std::move(plan));
    return plans;
  }

  if (participants.size() < static_cast<std::size_t>(cfg.folds)) {
    throw Error("cross-validation needs at least " + std::to_string(cfg.folds) + " participants, found " +
                std::to_string(participants.size()));
  }
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(participants.begin(), participants.end(), rng);
  for (int f = 0; f < cfg.folds; ++f) {
    FoldPlan plan;
    plan.fold = f;
    for (std::size_t i = 0; i < participants.size(); ++i) {
      (static_cast<int>(i % static_cast<std::size_t>(cfg.folds)) == f ? plan.test : plan.train).push_back(participants[i]);
    }
    pick_validation(plan);
    check_no_leakage(plan);
    plans.push_back(std::move(plan));
  }
  return plans;
}

void check_no_leakage(const FoldPlan& plan) {
  std::set<std::string> seen;
  for (const auto* group : {&plan.train, &plan.validation, &plan.test}) {
    for (const auto& id : *group) {
      if (!seen.insert(id).second) throw Error("participant " + id + " appears in more than one split");
    }
  }
  if (plan.test.empty()) throw Error("fold has no test participants");
}

WindowBatch training_windows(const std::vector<const PreparedRecording*>& recs, const NormStats& norm,
                             Eigen::Index window_frames, Eigen::Index stride, double negative_fraction,
                             std::uint64_t seed) {
  WindowBatch out;
  out.window_frames = window_frames;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (const auto* rec : recs) {
    if (!rec->series.labels) throw Error(rec->participant_id + "/" + rec->day_id + ": training data needs labels");
    auto batch = make_windows(normalize(rec->series, norm), window_frames, stride, true);
    for (auto& w : batch.windows) {
      const bool positive = std::any_of(w.y->begin(), w.y->begin() + w.valid_frames, [](auto c) { return c != 0; });
      // Draw for every window so the sample does not depend on the labels seen so far.
      const bool keep = coin(rng) < negative_fraction;
      if (positive || keep) out.windows.push_back(std::move(w));
    }
  }
  return out;
}

Checkpoint train_on(const std::vector<const PreparedRecording*>& train,
                    const std::vector<const PreparedRecording*>& validation, const RunConfig& cfg,
                    std::uint64_t seed, const EpochCallback& on_epoch) {
  std::vector<const CombinedSeries*> series;
  for (const auto* rec : train) series.push_back(&rec->series);
  const NormStats norm = compute_norm_stats(series);
  ModelConfig model = cfg.model;
  model.seed = seed;
  const Eigen::Index tw = model.window_frames;
  const Eigen::Index stride = cfg.train_stride > 0 ? cfg.train_stride : tw;
  const auto train_batch = training_windows(train, norm, tw, stride, cfg.negative_fraction, seed ^ 0x7472ULL);
  const auto val_batch = training_windows(validation, norm, tw, tw, cfg.negative_fraction, seed ^ 0x76616cULL);
  return eatspeed::train(train_batch, val_batch, model, norm, on_epoch);
}

CrossvalResult crossval(const std::vector<PreparedRecording>& data, const RunConfig& cfg,
                        const FoldEpochCallback& on_epoch) {
  cfg.validate();
  std::vector<std::string> participants;
  for (const auto& rec : data) participants.push_back(rec.participant_id);
  CrossvalResult result;
  result.plans = plan_folds(participants, cfg);
  const std::string config_text = run_config_to_json(cfg, false);
  const std::string hash = dataset_hash(data);

  for (const auto& plan : result.plans) {
    const auto train_recs = select(data, plan.train);
    const auto val_recs = select(data, plan.validation);
    const auto test_recs = select(data, plan.test);
    EpochCallback callback;
    if (on_epoch) callback = [&](const EpochReport& r) { on_epoch(plan.fold, r); };
    const auto ckpt = train_on(train_recs, val_recs, cfg, cfg.seed + static_cast<std::uint64_t>(plan.fold), callback);
    result.training.push_back(ckpt.metadata);
    const auto net = ckpt.network();

    EvalReport fold_report;
    for (const auto* rec : test_recs) {
      try {
        RecordingResult r;
        r.participant_id = rec->participant_id;
        r.day_id = rec->day_id;
        r.fold = plan.fold;
        r.analysis = analyze(*rec, net, ckpt.norm, cfg.hands);
        r.report = evaluate(*rec, r.analysis);
        r.episodes_gt = rec->episodes_gt;
        r.minutes_gt = rec->minutes_gt;
        fold_report.merge(r.report);
        result.recordings.push_back(std::move(r));
      } catch (const Error& e) {
        result.failures.push_back(rec->participant_id + "/" + rec->day_id + ": " + e.what());
      }
    }
    fold_report.config_json = config_text;
    fold_report.seed = cfg.seed;
    fold_report.dataset_hash = hash;
    result.aggregate.merge(fold_report);
    result.folds.push_back(std::move(fold_report));
  }
  result.aggregate.config_json = config_text;
  result.aggregate.seed = cfg.seed;
  result.aggregate.dataset_hash = hash;
  return result;
}

CrossvalResult evaluate_all(const std::vector<PreparedRecording>& data, const Checkpoint& ckpt, const RunConfig& cfg) {
  CrossvalResult result;
  const auto net = ckpt.network();
  for (const auto& rec : data) {
    try {
      RecordingResult r;
      r.participant_id = rec.participant_id;
      r.day_id = rec.day_id;
      r.analysis = analyze(rec, net, ckpt.norm, cfg.hands);
      if (rec.annotated) {
        r.report = evaluate(rec, r.analysis);
        r.episodes_gt = rec.episodes_gt;
        r.minutes_gt = rec.minutes_gt;
        result.aggregate.merge(r.report);
      }
      result.recordings.push_back(std::move(r));
    } catch (const Error& e) {
      result.failures.push_back(rec.participant_id + "/" + rec.day_id + ": " + e.what());
    }
  }
  result.aggregate.config_json = run_config_to_json(cfg, false);
  result.aggregate.seed = cfg.seed;
  result.aggregate.dataset_hash = dataset_hash(data);
  result.folds.push_back(result.aggregate);
  return result;
}

std::vector<PreparedRecording> load_datasets(const RunConfig& cfg, std::vector<std::string>& failures) {
  std::vector<PreparedRecording> out;
  for (const auto& root : cfg.datasets) {
    for (const auto& dir : list_recordings(root)) {
      try {
        out.push_back(prepare(load_recording(dir)));
      } catch (const Error& e) {
        failures.push_back(dir.generic_string() + ": " + e.what());
      }
    }
  }
  return out;
}

void write_recording_artifacts(const RecordingResult& result, const fs::path& dir) {
  fs::create_directories(dir);
  write_bites_csv(result.analysis.bites.bites, dir / "bites.csv");
  write_episodes_csv(result.analysis.episodes.episodes, dir / "episodes.csv");
  write_minute_track_csv(result.analysis.minutes, dir / "minutes.csv");
  write_episodes_csv(result.episodes_gt, dir / "episodes_gt.csv");
  write_minute_track_csv(result.minutes_gt, dir / "minutes_gt.csv");
}

void write_report(const EvalReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "report.txt", to_text(report));
  write_text(dir / "report.tsv", to_table(report));
  write_text(dir / "report.json", to_json(report));
}

void write_run(const CrossvalResult& result, const RunConfig& cfg) {
  const fs::path& out = cfg.out_dir;
  fs::create_directories(out);
  write_text(out / "config.json", run_config_to_json(cfg) + "\n");
  write_report(result.aggregate, out);
  for (std::size_t f = 0; f < result.folds.size() && result.folds.size() > 1; ++f) {
    write_report(result.folds[f], out / ("fold" + std::to_string(f)));
  }
  for (const auto& r : result.recordings) {
    write_recording_artifacts(r, out / "recordings" / r.participant_id / r.day_id);
  }
  std::string failures;
  for (const auto& f : result.failures) failures += f + "\n";
  write_text(out / "failures.txt", failures);
  if (cfg.plots) write_plots(result, out / "plots");
}

}  // namespace eatspeed
