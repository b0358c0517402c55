#pragma once

#include "eatspeed/types.hpp"

#include <array>
#include <optional>
#include <vector>

namespace eatspeed {

/// Right-hand frames followed by mirrored left-hand frames on one timeline.
struct CombinedSeries {
  FrameMatrix data;
  /// First frame of the left-hand block.
  Eigen::Index split_index = 0;
  double rate_hz = kProcessedRateHz;
  /// Real-time origin of each block (recording-relative seconds).
  double right_start_s = 0.0;
  double left_start_s = 0.0;
  /// Concatenated label tracks when both hands were labelled.
  std::optional<std::vector<std::uint8_t>> labels;

  [[nodiscard]] Eigen::Index size() const noexcept { return data.rows(); }
};

struct NormStats {
  std::array<double, kNumChannels> mean{};
  std::array<double, kNumChannels> stddev{1, 1, 1, 1, 1, 1};
};

/// Negates ax, gy and gz. Applying it twice is the identity.
FrameSeries mirror_hand(const FrameSeries& series);

/// Linear-phase anti-alias low-pass at 0.8 x the target Nyquist, then
/// decimation. Requires the input rate to be an integer multiple of target_hz.
/// Output length is floor(T * target / rate).
FrameSeries downsample(const FrameSeries& series, double target_hz);

/// Picks every factor-th label, matching the time grid of downsample().
LabelSequence downsample_labels(const LabelSequence& labels, double target_hz);

/// Windowed-sinc low-pass taps (unit DC gain) used by downsample().
std::vector<double> antialias_taps(int factor);

CombinedSeries combine_hands(const FrameSeries& right, const FrameSeries& left,
                             const std::optional<LabelSequence>& labels_right = std::nullopt,
                             const std::optional<LabelSequence>& labels_left = std::nullopt);

/// Per-hand views of a combined series. The left block is returned as stored
/// (still mirrored); call mirror_hand to restore the original orientation.
FrameSeries right_block(const CombinedSeries& combined);
FrameSeries left_block(const CombinedSeries& combined);

/// Downsamples both hands of a recording to 16 Hz (when needed) and combines
/// them, carrying labels along when present.
CombinedSeries prepare_recording(const Recording& rec);

/// Population mean and standard deviation of every channel over all frames.
NormStats compute_norm_stats(const std::vector<const CombinedSeries*>& series);

/// Z-scores every channel. Throws "zero variance channel" when a std is 0.
CombinedSeries normalize(const CombinedSeries& series, const NormStats& stats);

struct Window {
  /// T_w x 6, zero rows past valid_frames.
  FrameMatrix x;
  /// Label track, same length as x, padded with 0.
  std::optional<std::vector<std::uint8_t>> y;
  /// Offset of row 0 on the CombinedSeries timeline.
  Eigen::Index origin = 0;
  /// Rows [0, valid_frames) carry data; the rest is padding.
  Eigen::Index valid_frames = 0;
};

struct WindowBatch {
  std::vector<Window> windows;
  Eigen::Index window_frames = 0;
};

/// Windows at offsets 0, stride, 2*stride, ... until the end is covered; the
/// final partial window is zero padded. With split_at_seam the right and left
/// blocks are windowed independently so no window straddles split_index.
WindowBatch make_windows(const CombinedSeries& series, Eigen::Index window_frames, Eigen::Index stride,
                         bool split_at_seam = true);

/// Averages per-window rows (T_w x C each) back onto a timeline of `length`
/// frames. Padded rows are ignored. Frames no window covers are left zero.
Eigen::MatrixXd overlap_average(const std::vector<Eigen::MatrixXd>& window_values, const WindowBatch& batch,
                                Eigen::Index length);

}  // namespace eatspeed
