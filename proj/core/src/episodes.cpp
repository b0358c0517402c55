#include "eatspeed/episodes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace eatspeed {

namespace {

constexpr int kUnvisited = -2;
constexpr int kNoise = -1;
constexpr double kTimeSlack = 1e-9;

bool by_start(const BiteInterval& a, const BiteInterval& b) {
  if (a.t_l != b.t_l) return a.t_l < b.t_l;
  return static_cast<int>(a.klass) < static_cast<int>(b.klass);
}

}  // namespace

BiteSet or_combine(const BiteSet& right, const BiteSet& left) {
  BiteSet out;
  out.source = (right.source == BiteSource::kAnnotation && left.source == BiteSource::kAnnotation)
                   ? BiteSource::kAnnotation
                   : BiteSource::kPrediction;
  for (auto klass : {GestureClass::kEating, GestureClass::kDrinking}) {
    auto same = of_class(right.bites, klass);
    const auto other = of_class(left.bites, klass);
    same.insert(same.end(), other.begin(), other.end());
    std::stable_sort(same.begin(), same.end(), by_start);
    for (const auto& bite : same) {
      if (!out.bites.empty() && out.bites.back().klass == klass && bite.t_l < out.bites.back().t_r) {
        auto& last = out.bites.back();
        last.t_r = std::max(last.t_r, bite.t_r);
        if (last.hand != bite.hand) last.hand = Hand::kMerged;
      } else {
        out.bites.push_back(bite);
      }
    }
  }
  std::stable_sort(out.bites.begin(), out.bites.end(), by_start);
  return out;
}

std::vector<int> dbscan_1d(const std::vector<double>& points, double eps, int min_samples) {
  const std::size_t n = points.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  std::vector<double> sorted(n);
  for (std::size_t r = 0; r < n; ++r) sorted[r] = points[order[r]];

  // Neighbourhoods are contiguous rank ranges [lo, hi) in sorted order.
  std::vector<std::size_t> lo(n);
  std::vector<std::size_t> hi(n);
  std::size_t a = 0;
  std::size_t b = 0;
  for (std::size_t r = 0; r < n; ++r) {
    while (std::abs(sorted[r] - sorted[a]) > eps) ++a;
    if (b < r + 1) b = r + 1;
    while (b < n && std::abs(sorted[b] - sorted[r]) <= eps) ++b;
    lo[r] = a;
    hi[r] = b;
  }
  const auto is_core = [&](std::size_t r) { return static_cast<int>(hi[r] - lo[r]) >= min_samples; };

  std::vector<int> rank_label(n, kUnvisited);
  int cluster = 0;
  std::vector<std::size_t> frontier;
  for (std::size_t r = 0; r < n; ++r) {
    if (rank_label[r] != kUnvisited) continue;
    if (!is_core(r)) {
      rank_label[r] = kNoise;
      continue;
    }
    rank_label[r] = cluster;
    frontier.assign(1, r);
    while (!frontier.empty()) {
      const std::size_t c = frontier.back();
      frontier.pop_back();
      for (std::size_t q = lo[c]; q < hi[c]; ++q) {
        if (rank_label[q] == kNoise) rank_label[q] = cluster;
        if (rank_label[q] != kUnvisited) continue;
        rank_label[q] = cluster;
        if (is_core(q)) frontier.push_back(q);
      }
    }
    ++cluster;
  }

  std::vector<int> labels(n);
  for (std::size_t r = 0; r < n; ++r) labels[order[r]] = rank_label[r];
  return labels;
}

std::vector<EatingEpisode> cluster_episodes(const BiteSet& bites, double eps_s, int min_samples) {
  const auto eating = of_class(bites.bites, GestureClass::kEating);
  std::vector<double> midpoints;
  midpoints.reserve(eating.size());
  for (const auto& b : eating) midpoints.push_back(b.midpoint());
  const auto labels = dbscan_1d(midpoints, eps_s, min_samples);
  const int clusters = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<EatingEpisode> episodes(static_cast<std::size_t>(std::max(clusters, 0)),
                                      EatingEpisode{std::numeric_limits<double>::infinity(),
                                                    -std::numeric_limits<double>::infinity(), 0, 0.0});
  for (std::size_t i = 0; i < eating.size(); ++i) {
    if (labels[i] < 0) continue;
    auto& ep = episodes[static_cast<std::size_t>(labels[i])];
    ep.t_l = std::min(ep.t_l, eating[i].t_l);
    ep.t_r = std::max(ep.t_r, eating[i].t_r);
  }
  std::sort(episodes.begin(), episodes.end(), [](const auto& x, const auto& y) { return x.t_l < y.t_l; });
  return episodes;
}

EpisodeSet merge_and_prune(std::vector<EatingEpisode> candidates, double merge_gap_s, double min_duration_s) {
  std::stable_sort(candidates.begin(), candidates.end(), [](const auto& x, const auto& y) { return x.t_l < y.t_l; });
  std::vector<EatingEpisode> merged;
  for (const auto& ep : candidates) {
    if (!merged.empty() && ep.t_l - merged.back().t_r < merge_gap_s) {
      merged.back().t_r = std::max(merged.back().t_r, ep.t_r);
    } else {
      merged.push_back(ep);
    }
  }
  EpisodeSet out;
  for (auto& ep : merged) {
    if (ep.duration() >= min_duration_s - kTimeSlack) {
      ep.bite_count = 0;
      ep.speed_bites_per_min = 0.0;
      out.episodes.push_back(ep);
    }
  }
  return out;
}

EpisodeSet detect_episodes(const BiteSet& bites) { return merge_and_prune(cluster_episodes(bites)); }

EpisodeSet episode_speed(const BiteSet& bites, const EpisodeSet& episodes, bool eating_only) {
  EpisodeSet out = episodes;
  for (auto& ep : out.episodes) {
    if (!(ep.duration() > 0.0)) throw Error("episode has zero duration");
    int count = 0;
    for (const auto& b : bites.bites) {
      if (eating_only && b.klass != GestureClass::kEating) continue;
      const double mid = b.midpoint();
      if (mid >= ep.t_l && mid <= ep.t_r) ++count;
    }
    ep.bite_count = count;
    ep.speed_bites_per_min = count / (ep.duration() / 60.0);
  }
  return out;
}

std::vector<int> minute_speed(const BiteSet& bites, double span_s) {
  if (span_s < 0.0) throw Error("negative span");
  const auto bins = static_cast<std::size_t>(std::ceil(span_s / 60.0 - kTimeSlack));
  std::vector<int> counts(bins, 0);
  for (const auto& b : bites.bites) {
    const double mid = b.midpoint();
    if (mid < 0.0 || mid > span_s + kTimeSlack || bins == 0) throw Error("bite lies outside the minute-track span");
    const auto bin = std::min(bins - 1, static_cast<std::size_t>(std::floor(mid / 60.0)));
    ++counts[bin];
  }
  return counts;
}

void validate(const EpisodeSet& set) {
  for (std::size_t i = 0; i < set.episodes.size(); ++i) {
    const auto& ep = set.episodes[i];
    if (ep.duration() < kEpisodeMinDurationS - kTimeSlack) throw Error("episode shorter than 3 min");
    if (i > 0 && ep.t_l - set.episodes[i - 1].t_r < kEpisodeMergeGapS) {
      throw Error("episodes closer than 3 min");
    }
    if (ep.bite_count > 0 &&
        std::abs(ep.speed_bites_per_min - ep.bite_count / (ep.duration() / 60.0)) > 1e-9 * (1.0 + ep.speed_bites_per_min)) {
      throw Error("episode speed inconsistent with its bite count");
    }
  }
}

}  // namespace eatspeed
