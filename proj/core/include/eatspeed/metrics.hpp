#pragma once

#include "eatspeed/bites.hpp"
#include "eatspeed/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace eatspeed {

struct Segment {
  double t_l = 0.0;
  double t_r = 0.0;
};

struct Match {
  std::size_t gt = 0;
  std::size_t pred = 0;
  double iou = 0.0;
};

struct MatchResult {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  std::vector<Match> matches;

  /// 2tp / (2tp + fp + fn), 0 when the denominator is 0.
  [[nodiscard]] double f1() const noexcept;
  [[nodiscard]] double mean_iou() const noexcept;
};

/// Frame counts, indexed [gt class][predicted class].
using Confusion = std::array<std::array<long, kNumClasses>, kNumClasses>;

Confusion confusion_matrix(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& gt);

/// Kappa of an accumulated confusion matrix; chance agreement 1 gives 1.0.
double kappa_from_confusion(const Confusion& confusion);

/// Multi-class Cohen kappa over the 3x3 confusion matrix. Identical constant
/// sequences (chance agreement 1) give 1.0.
double cohen_kappa(const LabelSequence& pred, const LabelSequence& gt);

/// |a n b| / |a u b|; 0 for disjoint or touching intervals.
double interval_iou(Segment a, Segment b);

/// One-to-one greedy matching. Predictions are scanned in temporal order; each
/// takes its best-IoU unmatched ground truth and is a TP iff that IoU >= k.
MatchResult match_segments(const std::vector<Segment>& preds, const std::vector<Segment>& gts, double k);

/// match_segments restricted to bites of `klass`; the other class is background.
MatchResult segmental_match(const std::vector<BiteInterval>& preds, const std::vector<BiteInterval>& gts,
                            GestureClass klass, double k);

/// Episode-level matching (k = 0.5 by default); mean_iou() covers TP pairs.
MatchResult episode_match(const std::vector<EatingEpisode>& preds, const std::vector<EatingEpisode>& gts,
                          double k = 0.5);

/// (estimated, ground truth) speed pair.
struct SpeedPair {
  double estimated = 0.0;
  double truth = 0.0;
};

/// Mean |est - truth| / truth as a fraction. Empty input gives nullopt;
/// a non-positive truth throws.
std::optional<double> mape(const std::vector<SpeedPair>& pairs);

/// Pearson correlation; nullopt with fewer than 2 pairs or a constant series.
std::optional<double> pcc(const std::vector<SpeedPair>& pairs);

/// Speed pairs of the TP episode matches in `result`.
std::vector<SpeedPair> matched_speed_pairs(const MatchResult& result, const std::vector<EatingEpisode>& preds,
                                           const std::vector<EatingEpisode>& gts);

/// Per-minute pairs restricted to `domain` minutes with a positive gt count.
std::vector<SpeedPair> minute_pairs(const std::vector<int>& pred_track, const std::vector<int>& gt_track,
                                    const std::vector<bool>& domain);

/// Minutes that overlap a matched ground-truth episode.
std::vector<bool> matched_episode_minutes(const MatchResult& result, const std::vector<EatingEpisode>& gts,
                                          std::size_t bins);

struct MinuteScores {
  std::optional<double> mape;
  std::optional<double> pcc;
};

MinuteScores minute_mape_pcc(const std::vector<int>& pred_track, const std::vector<int>& gt_track,
                             const std::vector<bool>& domain);

}  // namespace eatspeed
