#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eatspeed {

/// Thrown for every contract violation: malformed input files, broken type
/// invariants, unsatisfied preconditions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Hand : std::uint8_t { kLeft, kRight, kMerged };

/// Per-frame class. Values match the on-disk encoding.
enum class GestureClass : std::uint8_t { kOther = 0, kEating = 1, kDrinking = 2 };

inline constexpr int kNumChannels = 6;
inline constexpr int kNumClasses = 3;
inline constexpr double kNativeRateHz = 64.0;
inline constexpr double kProcessedRateHz = 16.0;

std::string_view to_string(Hand hand);
Hand hand_from_string(std::string_view text);
std::string_view to_string(GestureClass klass);

/// Row-per-frame signal matrix, columns ax, ay, az (g), gx, gy, gz (deg/s).
using FrameMatrix = Eigen::Matrix<double, Eigen::Dynamic, kNumChannels, Eigen::RowMajor>;

/// Uniformly sampled 6-channel inertial signal of one wrist.
/// Frame i occurs at start_time_s() + i / sample_rate_hz().
class FrameSeries {
 public:
  FrameSeries(Hand hand, double sample_rate_hz, double start_time_s, FrameMatrix data);

  [[nodiscard]] Hand hand() const noexcept { return hand_; }
  [[nodiscard]] double sample_rate_hz() const noexcept { return rate_; }
  [[nodiscard]] double start_time_s() const noexcept { return start_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return data_.rows(); }
  [[nodiscard]] const FrameMatrix& data() const noexcept { return data_; }
  [[nodiscard]] double time_of(Eigen::Index frame) const noexcept {
    return start_ + static_cast<double>(frame) / rate_;
  }
  /// Time just past the last frame.
  [[nodiscard]] double end_time_s() const noexcept { return time_of(size()); }

 private:
  Hand hand_;
  double rate_;
  double start_;
  FrameMatrix data_;
};

/// Per-frame class track aligned to a FrameSeries.
class LabelSequence {
 public:
  LabelSequence(std::vector<std::uint8_t> classes, double sample_rate_hz);

  [[nodiscard]] const std::vector<std::uint8_t>& classes() const noexcept { return classes_; }
  [[nodiscard]] std::size_t size() const noexcept { return classes_.size(); }
  [[nodiscard]] double sample_rate_hz() const noexcept { return rate_; }
  [[nodiscard]] std::uint8_t operator[](std::size_t i) const noexcept { return classes_[i]; }

 private:
  std::vector<std::uint8_t> classes_;
  double rate_;
};

/// One intake gesture on the recording timeline, [t_l, t_r).
struct BiteInterval {
  double t_l = 0.0;
  double t_r = 0.0;
  GestureClass klass = GestureClass::kEating;
  Hand hand = Hand::kRight;

  [[nodiscard]] double duration() const noexcept { return t_r - t_l; }
  [[nodiscard]] double midpoint() const noexcept { return 0.5 * (t_l + t_r); }
  friend bool operator==(const BiteInterval&, const BiteInterval&) = default;
};

/// Throws unless t_l < t_r and the class is eating or drinking.
void validate(const BiteInterval& bite);

struct EatingEpisode {
  double t_l = 0.0;
  double t_r = 0.0;
  int bite_count = 0;
  double speed_bites_per_min = 0.0;

  [[nodiscard]] double duration() const noexcept { return t_r - t_l; }
  friend bool operator==(const EatingEpisode&, const EatingEpisode&) = default;
};

/// One day of dual-wrist data with optional ground truth.
struct Recording {
  std::string participant_id;
  std::string day_id;
  FrameSeries right;
  FrameSeries left;
  std::optional<LabelSequence> labels_right;
  std::optional<LabelSequence> labels_left;
  /// Annotated bites of both hands, time ordered.
  std::optional<std::vector<BiteInterval>> bites_gt;
  std::optional<std::vector<EatingEpisode>> episodes_gt;
  /// Needed only by the single-hand pipeline.
  std::optional<Hand> dominant_hand;
};

/// Checks the cross-field invariants of a Recording (matching rates, spans
/// within one sample period, label lengths).
void validate(const Recording& rec);

/// Rasterizes intervals onto a frame grid: frame i gets class c iff
/// origin_s + i / rate lies in [t_l, t_r) of a class-c interval.
LabelSequence labels_from_intervals(const std::vector<BiteInterval>& intervals, std::size_t frames,
                                    double rate_hz, double origin_s = 0.0);

}  // namespace eatspeed
