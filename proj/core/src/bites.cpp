#include "eatspeed/bites.hpp"

#include <algorithm>

namespace eatspeed {

namespace {
constexpr double kTimeSlack = 1e-9;
}

LabelSequence argmax_labels(const ProbSequence& probs) {
  std::vector<std::uint8_t> classes(static_cast<std::size_t>(probs.size()), 0);
  for (Eigen::Index t = 0; t < probs.size(); ++t) {
    int best = 0;
    for (int c = 1; c < probs.probs.cols(); ++c) {
      if (probs.probs(t, c) > probs.probs(t, best)) best = c;
    }
    classes[static_cast<std::size_t>(t)] = static_cast<std::uint8_t>(best);
  }
  return LabelSequence(std::move(classes), probs.rate_hz);
}

std::vector<BiteInterval> extract_runs(const LabelSequence& labels, double origin_s, Hand hand) {
  std::vector<BiteInterval> runs;
  const double rate = labels.sample_rate_hz();
  const std::size_t n = labels.size();
  std::size_t i = 0;
  while (i < n) {
    const auto value = labels[i];
    std::size_t j = i + 1;
    while (j < n && labels[j] == value) ++j;
    if (value != 0) {
      runs.push_back({origin_s + static_cast<double>(i) / rate, origin_s + static_cast<double>(j) / rate,
                      static_cast<GestureClass>(value), hand});
    }
    i = j;
  }
  return runs;
}

std::vector<BiteInterval> consolidate(const std::vector<BiteInterval>& intervals, double gap_s) {
  std::vector<BiteInterval> out;
  out.reserve(intervals.size());
  for (const auto& bite : intervals) {
    if (!out.empty()) {
      auto& last = out.back();
      if (last.klass == bite.klass && bite.t_l - last.t_r <= gap_s + kTimeSlack) {
        last.t_r = std::max(last.t_r, bite.t_r);
        if (last.hand != bite.hand) last.hand = Hand::kMerged;
        continue;
      }
    }
    out.push_back(bite);
  }
  return out;
}

BiteSet filter_short(const std::vector<BiteInterval>& intervals, double min_duration_s) {
  BiteSet set;
  set.source = BiteSource::kPrediction;
  std::vector<BiteInterval> kept;
  std::copy_if(intervals.begin(), intervals.end(), std::back_inserter(kept),
               [&](const BiteInterval& b) { return b.duration() >= min_duration_s - kTimeSlack; });
  // Dropping a short bite of another class can leave two same-class bites
  // adjacent within the merge gap; join those so the set stays valid.
  set.bites = consolidate(kept);
  return set;
}

BiteSet detect_bites(const ProbSequence& probs) {
  return filter_short(consolidate(extract_runs(argmax_labels(probs), probs.start_s, probs.hand)));
}

void validate(const BiteSet& set) {
  for (std::size_t i = 0; i < set.bites.size(); ++i) {
    const auto& b = set.bites[i];
    validate(b);
    if (i > 0 && b.t_l < set.bites[i - 1].t_l) throw Error("bite set is not time ordered");
    if (set.source == BiteSource::kPrediction && b.duration() < kMinBiteDurationS - kTimeSlack) {
      throw Error("predicted bite shorter than the minimum duration");
    }
  }
  if (set.source != BiteSource::kPrediction) return;
  for (std::size_t i = 1; i < set.bites.size(); ++i) {
    const auto& prev = set.bites[i - 1];
    const auto& next = set.bites[i];
    // Bites from different hands (after an OR combination) may sit closer.
    if (prev.klass == next.klass && prev.hand == next.hand && next.t_l - prev.t_r <= kMergeGapS + kTimeSlack) {
      throw Error("adjacent same-class bites closer than the merge gap");
    }
  }
}

std::vector<BiteInterval> of_class(const std::vector<BiteInterval>& bites, GestureClass klass) {
  std::vector<BiteInterval> out;
  std::copy_if(bites.begin(), bites.end(), std::back_inserter(out),
               [&](const BiteInterval& b) { return b.klass == klass; });
  return out;
}

}  // namespace eatspeed
