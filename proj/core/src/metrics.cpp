#include "eatspeed/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace eatspeed {

namespace {

constexpr double kIouSlack = 1e-12;

std::vector<Segment> segments_of(const std::vector<BiteInterval>& bites, GestureClass klass) {
  std::vector<Segment> out;
  for (const auto& b : bites) {
    if (b.klass == klass) out.push_back({b.t_l, b.t_r});
  }
  return out;
}

std::vector<Segment> segments_of(const std::vector<EatingEpisode>& episodes) {
  std::vector<Segment> out;
  out.reserve(episodes.size());
  for (const auto& e : episodes) out.push_back({e.t_l, e.t_r});
  return out;
}

}  // namespace

double MatchResult::f1() const noexcept {
  const int denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * tp / denom;
}

double MatchResult::mean_iou() const noexcept {
  if (matches.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& m : matches) sum += m.iou;
  return sum / static_cast<double>(matches.size());
}

Confusion confusion_matrix(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& gt) {
  if (pred.size() != gt.size()) throw Error("cohen_kappa: sequences differ in length");
  Confusion confusion{};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] >= kNumClasses || gt[i] >= kNumClasses) throw Error("class label out of range");
    ++confusion[gt[i]][pred[i]];
  }
  return confusion;
}

double kappa_from_confusion(const Confusion& confusion) {
  double n = 0.0;
  for (const auto& row : confusion) {
    for (const auto v : row) n += static_cast<double>(v);
  }
  if (n == 0.0) throw Error("cohen_kappa: empty sequences");
  double observed = 0.0;
  double expected = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    observed += static_cast<double>(confusion[c][c]);
    double row = 0.0;
    double col = 0.0;
    for (int o = 0; o < kNumClasses; ++o) {
      row += static_cast<double>(confusion[c][o]);
      col += static_cast<double>(confusion[o][c]);
    }
    expected += (row / n) * (col / n);
  }
  observed /= n;
  if (expected >= 1.0) return 1.0;
  return (observed - expected) / (1.0 - expected);
}

double cohen_kappa(const LabelSequence& pred, const LabelSequence& gt) {
  return kappa_from_confusion(confusion_matrix(pred.classes(), gt.classes()));
}

double interval_iou(Segment a, Segment b) {
  const double inter = std::min(a.t_r, b.t_r) - std::max(a.t_l, b.t_l);
  if (inter <= 0.0) return 0.0;
  const double uni = std::max(a.t_r, b.t_r) - std::min(a.t_l, b.t_l);
  return inter / uni;
}

MatchResult match_segments(const std::vector<Segment>& preds, const std::vector<Segment>& gts, double k) {
  if (!(k > 0.0 && k <= 1.0)) throw Error("IoU threshold must lie in (0, 1]");
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return preds[a].t_l < preds[b].t_l; });

  MatchResult result;
  std::vector<bool> used(gts.size(), false);
  for (const auto p : order) {
    double best = 0.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g]) continue;
      const double iou = interval_iou(preds[p], gts[g]);
      if (iou > best) {
        best = iou;
        best_gt = g;
      }
    }
    if (best_gt < gts.size() && best >= k - kIouSlack) {
      used[best_gt] = true;
      ++result.tp;
      result.matches.push_back({best_gt, p, best});
    } else {
      ++result.fp;
    }
  }
  result.fn = static_cast<int>(std::count(used.begin(), used.end(), false));
  return result;
}

MatchResult segmental_match(const std::vector<BiteInterval>& preds, const std::vector<BiteInterval>& gts,
                            GestureClass klass, double k) {
  return match_segments(segments_of(preds, klass), segments_of(gts, klass), k);
}

MatchResult episode_match(const std::vector<EatingEpisode>& preds, const std::vector<EatingEpisode>& gts, double k) {
  return match_segments(segments_of(preds), segments_of(gts), k);
}

std::optional<double> mape(const std::vector<SpeedPair>& pairs) {
  if (pairs.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& p : pairs) {
    if (!(p.truth > 0.0)) throw Error("MAPE requires positive ground-truth speeds");
    sum += std::abs(p.estimated - p.truth) / p.truth;
  }
  return sum / static_cast<double>(pairs.size());
}

std::optional<double> pcc(const std::vector<SpeedPair>& pairs) {
  if (pairs.size() < 2) return std::nullopt;
  const double n = static_cast<double>(pairs.size());
  double mean_est = 0.0;
  double mean_truth = 0.0;
  for (const auto& p : pairs) {
    mean_est += p.estimated;
    mean_truth += p.truth;
  }
  mean_est /= n;
  mean_truth /= n;
  double cov = 0.0;
  double var_est = 0.0;
  double var_truth = 0.0;
  for (const auto& p : pairs) {
    const double de = p.estimated - mean_est;
    const double dt = p.truth - mean_truth;
    cov += dt * de;
    var_est += de * de;
    var_truth += dt * dt;
  }
  if (var_est == 0.0 || var_truth == 0.0) return std::nullopt;
  return std::clamp(cov / std::sqrt(var_truth * var_est), -1.0, 1.0);
}

std::vector<SpeedPair> matched_speed_pairs(const MatchResult& result, const std::vector<EatingEpisode>& preds,
                                           const std::vector<EatingEpisode>& gts) {
  std::vector<SpeedPair> pairs;
  pairs.reserve(result.matches.size());
  for (const auto& m : result.matches) {
    pairs.push_back({preds[m.pred].speed_bites_per_min, gts[m.gt].speed_bites_per_min});
  }
  return pairs;
}

std::vector<bool> matched_episode_minutes(const MatchResult& result, const std::vector<EatingEpisode>& gts,
                                          std::size_t bins) {
  std::vector<bool> domain(bins, false);
  for (const auto& m : result.matches) {
    const auto& ep = gts[m.gt];
    for (std::size_t i = 0; i < bins; ++i) {
      const double lo = 60.0 * static_cast<double>(i);
      if (std::min(ep.t_r, lo + 60.0) - std::max(ep.t_l, lo) > 0.0) domain[i] = true;
    }
  }
  return domain;
}

std::vector<SpeedPair> minute_pairs(const std::vector<int>& pred_track, const std::vector<int>& gt_track,
                                    const std::vector<bool>& domain) {
  if (pred_track.size() != gt_track.size() || domain.size() != gt_track.size()) {
    throw Error("minute tracks and domain must have equal bin counts");
  }
  std::vector<SpeedPair> pairs;
  for (std::size_t i = 0; i < gt_track.size(); ++i) {
    if (domain[i] && gt_track[i] > 0) pairs.push_back({double(pred_track[i]), double(gt_track[i])});
  }
  return pairs;
}

MinuteScores minute_mape_pcc(const std::vector<int>& pred_track, const std::vector<int>& gt_track,
                             const std::vector<bool>& domain) {
  const auto pairs = minute_pairs(pred_track, gt_track, domain);
  return {mape(pairs), pcc(pairs)};
}

}  // namespace eatspeed
