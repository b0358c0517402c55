#include "eatspeed/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace eatspeed {

std::string_view to_string(Hand hand) {
  switch (hand) {
    case Hand::kLeft:
      return "left";
    case Hand::kRight:
      return "right";
    case Hand::kMerged:
      return "merged";
  }
  return "unknown";
}

Hand hand_from_string(std::string_view text) {
  if (text == "left" || text == "L" || text == "l") return Hand::kLeft;
  if (text == "right" || text == "R" || text == "r") return Hand::kRight;
  if (text == "merged" || text == "both") return Hand::kMerged;
  throw Error("unknown hand '" + std::string(text) + "'");
}

std::string_view to_string(GestureClass klass) {
  switch (klass) {
    case GestureClass::kOther:
      return "other";
    case GestureClass::kEating:
      return "eating";
    case GestureClass::kDrinking:
      return "drinking";
  }
  return "unknown";
}

FrameSeries::FrameSeries(Hand hand, double sample_rate_hz, double start_time_s, FrameMatrix data)
    : hand_(hand), rate_(sample_rate_hz), start_(start_time_s), data_(std::move(data)) {
  if (hand_ == Hand::kMerged) {
    throw Error("a frame series belongs to the left or right hand");
  }
  if (!(rate_ > 0.0) || !std::isfinite(rate_)) {
    throw Error("sample rate must be positive");
  }
  if (data_.rows() < 1) {
    throw Error("frame series must contain at least one frame");
  }
  if (!std::isfinite(start_)) {
    throw Error("start time must be finite");
  }
}

LabelSequence::LabelSequence(std::vector<std::uint8_t> classes, double sample_rate_hz)
    : classes_(std::move(classes)), rate_(sample_rate_hz) {
  if (!(rate_ > 0.0)) {
    throw Error("label sample rate must be positive");
  }
  const auto bad = std::find_if(classes_.begin(), classes_.end(), [](std::uint8_t c) { return c > 2; });
  if (bad != classes_.end()) {
    std::ostringstream msg;
    msg << "label value " << int(*bad) << " at frame " << (bad - classes_.begin()) << " is not in {0,1,2}";
    throw Error(msg.str());
  }
}

void validate(const BiteInterval& bite) {
  if (!std::isfinite(bite.t_l) || !std::isfinite(bite.t_r) || !(bite.t_l < bite.t_r)) {
    std::ostringstream msg;
    msg << "interval [" << bite.t_l << ", " << bite.t_r << ") violates t_l < t_r";
    throw Error(msg.str());
  }
  if (bite.klass != GestureClass::kEating && bite.klass != GestureClass::kDrinking) {
    throw Error("bite class must be eating (1) or drinking (2)");
  }
}

void validate(const Recording& rec) {
  if (rec.right.hand() != Hand::kRight || rec.left.hand() != Hand::kLeft) {
    throw Error("recording hand tags do not match their slots");
  }
  if (rec.right.sample_rate_hz() != rec.left.sample_rate_hz()) {
    throw Error("left and right sample rates differ");
  }
  const double period = 1.0 / rec.right.sample_rate_hz();
  const double slack = 1e-9;
  if (std::abs(rec.right.start_time_s() - rec.left.start_time_s()) >= period - slack ||
      std::abs(rec.right.end_time_s() - rec.left.end_time_s()) >= period - slack) {
    std::ostringstream msg;
    msg << "channel span mismatch: right covers [" << rec.right.start_time_s() << ", "
        << rec.right.end_time_s() << "), left covers [" << rec.left.start_time_s() << ", "
        << rec.left.end_time_s() << ")";
    throw Error(msg.str());
  }
  if (rec.labels_right && rec.labels_right->size() != static_cast<std::size_t>(rec.right.size())) {
    throw Error("right label length does not match right series");
  }
  if (rec.labels_left && rec.labels_left->size() != static_cast<std::size_t>(rec.left.size())) {
    throw Error("left label length does not match left series");
  }
}

LabelSequence labels_from_intervals(const std::vector<BiteInterval>& intervals, std::size_t frames,
                                    double rate_hz, double origin_s) {
  constexpr double kAlign = 1e-9;
  std::vector<std::uint8_t> classes(frames, 0);
  const double span = static_cast<double>(frames) / rate_hz;
  for (const auto& bite : intervals) {
    validate(bite);
    const double rel_l = bite.t_l - origin_s;
    const double rel_r = bite.t_r - origin_s;
    if (rel_l < -kAlign || rel_r > span + kAlign) {
      std::ostringstream msg;
      msg << "interval [" << bite.t_l << ", " << bite.t_r << ") lies outside the labelled span";
      throw Error(msg.str());
    }
    const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(rel_l * rate_hz - kAlign)));
    const auto last = std::min(frames, static_cast<std::size_t>(std::max(0.0, std::ceil(rel_r * rate_hz - kAlign))));
    const auto value = static_cast<std::uint8_t>(bite.klass);
    for (std::size_t i = first; i < last; ++i) {
      if (classes[i] != 0 && classes[i] != value) {
        std::ostringstream msg;
        msg << "conflicting overlapping intervals at t=" << origin_s + double(i) / rate_hz;
        throw Error(msg.str());
      }
      classes[i] = value;
    }
  }
  return LabelSequence(std::move(classes), rate_hz);
}

}  // namespace eatspeed
