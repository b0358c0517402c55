#pragma once

#include "eatspeed/bites.hpp"
#include "eatspeed/checkpoint.hpp"
#include "eatspeed/episodes.hpp"
#include "eatspeed/preprocess.hpp"
#include "eatspeed/report.hpp"
#include "eatspeed/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace eatspeed {

enum class HandsMode { kBoth, kDominant };

std::string_view to_string(HandsMode mode);
HandsMode hands_mode_from_string(std::string_view text);

struct RunConfig {
  /// Dataset roots laid out as <root>/<participant>/<day>/.
  std::vector<std::filesystem::path> datasets;
  HandsMode hands = HandsMode::kBoth;
  ModelConfig model;
  int folds = 7;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "eatspeed-run";
  /// Holdout mode when both lists are set: one fold, fixed participants.
  std::vector<std::string> train_participants;
  std::vector<std::string> test_participants;
  /// Training participants held back for early stopping (per fold).
  int validation_participants = 1;
  /// Share of bite-free training windows kept; windows with bites are always kept.
  double negative_fraction = 1.0;
  /// Training window stride in frames; 0 means one window length.
  int train_stride = 0;
  bool plots = true;

  void validate() const;
};

/// JSON with every field; out_dir is omitted when `with_output` is false.
std::string run_config_to_json(const RunConfig& cfg, bool with_output = true);
/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig run_config_from_json(const std::string& text);

/// A recording reduced to what the pipeline needs: the 16 Hz combined series
/// and ground truth on a timeline that starts at 0.
struct PreparedRecording {
  std::string participant_id;
  std::string day_id;
  CombinedSeries series;
  std::optional<Hand> dominant_hand;
  double span_s = 0.0;
  /// Ground truth, present when the recording was annotated.
  bool annotated = false;
  std::vector<BiteInterval> bites_gt;
  std::vector<EatingEpisode> episodes_gt;
  std::vector<int> minutes_gt;
};

/// Downsamples, combines and shifts everything so the right hand starts at 0.
/// Missing ground-truth episodes are derived from the ground-truth bites.
PreparedRecording prepare(const Recording& rec);

/// FNV-1a over ids, signals, labels and ground truth, as 16 hex digits.
std::string dataset_hash(const std::vector<PreparedRecording>& data);

struct Analysis {
  std::optional<ProbSequence> right;
  std::optional<ProbSequence> left;
  /// Per-frame predicted classes in the combined layout (right then left).
  std::vector<std::uint8_t> labels;
  BiteSet bites;
  EpisodeSet episodes;
  std::vector<int> minutes;
};

/// bites -> OR-combination -> episodes -> speeds -> minute track. A missing
/// hand contributes no bites and "other" labels.
Analysis analyze(const PreparedRecording& rec, const std::optional<ProbSequence>& right,
                 const std::optional<ProbSequence>& left);

/// Model inference followed by analyze(). Dominant mode runs only the
/// dominant hand's block through the model.
Analysis analyze(const PreparedRecording& rec, const Network<float>& net, const NormStats& norm, HandsMode mode);

/// analyze() on one-hot ground-truth labels.
Analysis analyze_oracle(const PreparedRecording& rec, HandsMode mode = HandsMode::kBoth);

EvalReport evaluate(const PreparedRecording& rec, const Analysis& analysis);

struct FoldPlan {
  int fold = 0;
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

/// Participant-level folds (shuffled by seed) or the holdout split. Throws
/// when there are fewer participants than folds.
std::vector<FoldPlan> plan_folds(std::vector<std::string> participants, const RunConfig& cfg);

/// Throws if a participant appears in more than one role.
void check_no_leakage(const FoldPlan& plan);

/// Normalized windows from the given recordings: all windows holding a bite
/// plus a seeded `negative_fraction` sample of the rest.
WindowBatch training_windows(const std::vector<const PreparedRecording*>& recs, const NormStats& norm,
                             Eigen::Index window_frames, Eigen::Index stride, double negative_fraction,
                             std::uint64_t seed);

using FoldEpochCallback = std::function<void(int fold, const EpochReport&)>;

/// Norm statistics from `train` only, then training with early stopping on `validation`.
Checkpoint train_on(const std::vector<const PreparedRecording*>& train,
                    const std::vector<const PreparedRecording*>& validation, const RunConfig& cfg,
                    std::uint64_t seed, const EpochCallback& on_epoch = {});

struct RecordingResult {
  std::string participant_id;
  std::string day_id;
  int fold = 0;
  Analysis analysis;
  EvalReport report;
  /// Ground truth copied from the recording, for plots.
  std::vector<EatingEpisode> episodes_gt;
  std::vector<int> minutes_gt;
};

struct CrossvalResult {
  EvalReport aggregate;
  std::vector<EvalReport> folds;
  std::vector<FoldPlan> plans;
  std::vector<TrainingMetadata> training;
  std::vector<RecordingResult> recordings;
  /// "<participant>/<day>: <message>" for recordings that failed.
  std::vector<std::string> failures;
};

/// Train and test every fold; counts and speed pairs are pooled (micro) over
/// folds. Reports embed the config (without output dir), seed and dataset hash.
CrossvalResult crossval(const std::vector<PreparedRecording>& data, const RunConfig& cfg,
                        const FoldEpochCallback& on_epoch = {});

/// Analysis and evaluation of every recording with a trained model.
CrossvalResult evaluate_all(const std::vector<PreparedRecording>& data, const Checkpoint& ckpt, const RunConfig& cfg);

/// Loads and prepares every recording under the configured roots; failures
/// are collected instead of thrown.
std::vector<PreparedRecording> load_datasets(const RunConfig& cfg, std::vector<std::string>& failures);

/// Per-recording bites.csv, episodes.csv, minutes.csv and the ground-truth
/// episodes_gt.csv, minutes_gt.csv (recording-relative time).
void write_recording_artifacts(const RecordingResult& result, const std::filesystem::path& dir);

/// report.txt, report.tsv and report.json.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

/// Writes reports (aggregate and per fold), per-recording artifacts,
/// failures.txt and, if enabled, plots below cfg.out_dir.
void write_run(const CrossvalResult& result, const RunConfig& cfg);

}  // namespace eatspeed
