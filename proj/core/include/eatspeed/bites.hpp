#pragma once

#include "eatspeed/model.hpp"
#include "eatspeed/types.hpp"

#include <vector>

namespace eatspeed {

enum class BiteSource { kPrediction, kAnnotation };

/// Time-ordered bites. Prediction-sourced sets additionally guarantee that
/// same-class neighbours are more than 0.5 s apart and every bite lasts at
/// least 1 s.
struct BiteSet {
  std::vector<BiteInterval> bites;
  BiteSource source = BiteSource::kPrediction;

  [[nodiscard]] std::size_t size() const noexcept { return bites.size(); }
};

inline constexpr double kMergeGapS = 0.5;
inline constexpr double kMinBiteDurationS = 1.0;

/// Per-frame argmax; ties go to the lower class index.
LabelSequence argmax_labels(const ProbSequence& probs);

/// Maximal runs of class 1 or 2 as [first frame time, last frame time + 1/rate).
std::vector<BiteInterval> extract_runs(const LabelSequence& labels, double origin_s = 0.0,
                                       Hand hand = Hand::kRight);

/// Merges list-adjacent same-class intervals whose gap t_l(next) - t_r(prev)
/// is at most gap_s. Input must be time ordered.
std::vector<BiteInterval> consolidate(const std::vector<BiteInterval>& intervals, double gap_s = kMergeGapS);

/// Drops intervals shorter than min_duration_s (exactly min_duration_s is kept).
/// Same-class bites that become list-adjacent within the merge gap because a
/// short bite between them was dropped are joined.
BiteSet filter_short(const std::vector<BiteInterval>& intervals, double min_duration_s = kMinBiteDurationS);

/// argmax -> extract_runs -> consolidate -> filter_short.
BiteSet detect_bites(const ProbSequence& probs);

/// Throws when `set` breaks a BiteSet invariant.
void validate(const BiteSet& set);

/// Bites of one class only.
std::vector<BiteInterval> of_class(const std::vector<BiteInterval>& bites, GestureClass klass);

}  // namespace eatspeed
