#pragma once

#include "eatspeed/metrics.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace eatspeed {

inline constexpr double kSegmentThresholds[] = {0.1, 0.5};
inline constexpr double kEpisodeThreshold = 0.5;

struct SegmentCounts {
  GestureClass klass = GestureClass::kEating;
  double k = 0.1;
  int tp = 0;
  int fp = 0;
  int fn = 0;

  [[nodiscard]] double f1() const noexcept;
};

/// Evaluation results pooled over any number of recordings. Counts, confusion
/// matrices and speed pairs are summed before any score is computed.
struct EvalReport {
  Confusion confusion{};
  /// Eating and drinking at k = 0.1 and 0.5, in that order.
  std::vector<SegmentCounts> segments;
  int episode_tp = 0;
  int episode_fp = 0;
  int episode_fn = 0;
  double episode_iou_sum = 0.0;
  std::vector<SpeedPair> speed_pairs;
  std::vector<SpeedPair> minute_pairs;

  /// Provenance of the run that produced the report.
  std::string config_json;
  std::uint64_t seed = 0;
  std::string dataset_hash;

  EvalReport();

  /// Adds another report's counts and pairs (micro pooling).
  void merge(const EvalReport& other);

  [[nodiscard]] std::optional<double> kappa() const;
  [[nodiscard]] const SegmentCounts& segment(GestureClass klass, double k) const;
  [[nodiscard]] double episode_f1() const noexcept;
  [[nodiscard]] double episode_mean_iou() const noexcept;
  [[nodiscard]] std::optional<double> speed_mape() const { return mape(speed_pairs); }
  [[nodiscard]] std::optional<double> speed_pcc() const { return pcc(speed_pairs); }
  [[nodiscard]] std::optional<double> minute_mape() const { return mape(minute_pairs); }
  [[nodiscard]] std::optional<double> minute_pcc() const { return pcc(minute_pairs); }
};

/// Scores one recording. Label tracks may be empty to skip kappa.
EvalReport evaluate(const std::vector<std::uint8_t>& pred_labels, const std::vector<std::uint8_t>& gt_labels,
                    const std::vector<BiteInterval>& pred_bites, const std::vector<BiteInterval>& gt_bites,
                    const std::vector<EatingEpisode>& pred_episodes, const std::vector<EatingEpisode>& gt_episodes,
                    const std::vector<int>& pred_minutes, const std::vector<int>& gt_minutes);

/// Human-readable summary.
std::string to_text(const EvalReport& report);

/// Tab-separated table, one row per (class, threshold, metric).
std::string to_table(const EvalReport& report);

/// Full report including provenance and speed pairs.
std::string to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

}  // namespace eatspeed
