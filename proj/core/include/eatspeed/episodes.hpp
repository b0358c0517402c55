#pragma once

#include "eatspeed/bites.hpp"
#include "eatspeed/types.hpp"

#include <vector>

namespace eatspeed {

inline constexpr double kEpisodeEpsS = 180.0;
inline constexpr int kEpisodeMinSamples = 5;
inline constexpr double kEpisodeMergeGapS = 180.0;
inline constexpr double kEpisodeMinDurationS = 180.0;

/// Time-ordered eating episodes, each at least 3 min long and more than 3 min
/// apart from its neighbours.
struct EpisodeSet {
  std::vector<EatingEpisode> episodes;

  [[nodiscard]] std::size_t size() const noexcept { return episodes.size(); }
};

/// Union of two per-hand bite sets on the real timeline. Overlapping
/// same-class bites are joined into one interval (hand = merged).
BiteSet or_combine(const BiteSet& right, const BiteSet& left);

/// DBSCAN labels for 1D points: -1 for noise, clusters numbered 0.. in order
/// of discovery. Points are visited in ascending (value, index) order; a core
/// point has at least min_samples points (itself included) within eps.
std::vector<int> dbscan_1d(const std::vector<double>& points, double eps, int min_samples);

/// Drops drinking bites, clusters eating-bite midpoints with 1D DBSCAN and
/// bounds each cluster by [min t_l, max t_r] of its members. The result is the
/// candidate list before merge_and_prune().
std::vector<EatingEpisode> cluster_episodes(const BiteSet& bites, double eps_s = kEpisodeEpsS,
                                            int min_samples = kEpisodeMinSamples);

/// Joins neighbours whose gap is < merge_gap_s (transitively), then removes
/// episodes shorter than min_duration_s.
EpisodeSet merge_and_prune(std::vector<EatingEpisode> candidates, double merge_gap_s = kEpisodeMergeGapS,
                           double min_duration_s = kEpisodeMinDurationS);

/// cluster_episodes followed by merge_and_prune.
EpisodeSet detect_episodes(const BiteSet& bites);

/// Fills bite_count and speed for each episode. A bite belongs to an episode
/// when its midpoint lies in [t_l, t_r]. Drinking bites count unless
/// eating_only is set.
EpisodeSet episode_speed(const BiteSet& bites, const EpisodeSet& episodes, bool eating_only = false);

/// Bites per 1-minute bin over [0, span_s): ceil(span_s / 60) bins, each bite
/// counted once in the bin holding its midpoint.
std::vector<int> minute_speed(const BiteSet& bites, double span_s);

void validate(const EpisodeSet& set);

}  // namespace eatspeed
