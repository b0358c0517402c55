#include "eatspeed/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace eatspeed {

namespace {

int decimation_factor(double rate, double target) {
  if (!(target > 0.0)) throw Error("target rate must be positive");
  const double ratio = rate / target;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9) {
    throw Error("sample rate " + std::to_string(rate) + " Hz is not an integer multiple of " + std::to_string(target) +
                " Hz");
  }
  return static_cast<int>(rounded);
}

void append_segment_windows(WindowBatch& batch, const CombinedSeries& series, Eigen::Index begin, Eigen::Index end,
                            Eigen::Index stride) {
  const Eigen::Index tw = batch.window_frames;
  for (Eigen::Index offset = begin; offset < end; offset += stride) {
    Window w;
    w.origin = offset;
    w.valid_frames = std::min(tw, end - offset);
    w.x = FrameMatrix::Zero(tw, kNumChannels);
    w.x.topRows(w.valid_frames) = series.data.middleRows(offset, w.valid_frames);
    if (series.labels) {
      w.y = std::vector<std::uint8_t>(static_cast<std::size_t>(tw), 0);
      std::copy_n(series.labels->begin() + offset, w.valid_frames, w.y->begin());
    }
    batch.windows.push_back(std::move(w));
    if (offset + tw >= end) break;
  }
}

}  // namespace

FrameSeries mirror_hand(const FrameSeries& series) {
  FrameMatrix data = series.data();
  data.col(0) = -data.col(0);
  data.col(4) = -data.col(4);
  data.col(5) = -data.col(5);
  return FrameSeries(series.hand(), series.sample_rate_hz(), series.start_time_s(), std::move(data));
}

std::vector<double> antialias_taps(int factor) {
  // Cutoff at 0.8 x the output Nyquist, expressed in cycles per input sample.
  const double cutoff = 0.4 / factor;
  const int length = 16 * factor + 1;
  const int half = length / 2;
  std::vector<double> taps(static_cast<std::size_t>(length));
  double sum = 0.0;
  for (int n = 0; n < length; ++n) {
    const double k = n - half;
    const double sinc = k == 0 ? 2.0 * cutoff : std::sin(2.0 * std::numbers::pi * cutoff * k) / (std::numbers::pi * k);
    const double phase = 2.0 * std::numbers::pi * n / (length - 1);
    const double blackman = 0.42 - 0.5 * std::cos(phase) + 0.08 * std::cos(2.0 * phase);
    taps[n] = sinc * blackman;
    sum += taps[n];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

FrameSeries downsample(const FrameSeries& series, double target_hz) {
  const int factor = decimation_factor(series.sample_rate_hz(), target_hz);
  if (factor == 1) return series;
  const Eigen::Index in_frames = series.size();
  const Eigen::Index out_frames = in_frames / factor;
  if (out_frames < 1) throw Error("series too short to downsample");
  const auto taps = antialias_taps(factor);
  const Eigen::Index half = static_cast<Eigen::Index>(taps.size() / 2);
  const auto& x = series.data();
  FrameMatrix out = FrameMatrix::Zero(out_frames, kNumChannels);
  for (Eigen::Index j = 0; j < out_frames; ++j) {
    const Eigen::Index centre = j * factor;
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(taps.size()); ++k) {
      // Edges are extended by replication, which keeps constants exact.
      const Eigen::Index src = std::clamp<Eigen::Index>(centre + k - half, 0, in_frames - 1);
      out.row(j) += taps[static_cast<std::size_t>(k)] * x.row(src);
    }
  }
  return FrameSeries(series.hand(), target_hz, series.start_time_s(), std::move(out));
}

LabelSequence downsample_labels(const LabelSequence& labels, double target_hz) {
  const int factor = decimation_factor(labels.sample_rate_hz(), target_hz);
  std::vector<std::uint8_t> out(labels.size() / static_cast<std::size_t>(factor));
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = labels[j * static_cast<std::size_t>(factor)];
  return LabelSequence(std::move(out), target_hz);
}

CombinedSeries combine_hands(const FrameSeries& right, const FrameSeries& left,
                             const std::optional<LabelSequence>& labels_right,
                             const std::optional<LabelSequence>& labels_left) {
  if (right.sample_rate_hz() != left.sample_rate_hz()) {
    throw Error("cannot combine hands with different sample rates");
  }
  const auto mirrored = mirror_hand(left);
  CombinedSeries out;
  out.rate_hz = right.sample_rate_hz();
  out.split_index = right.size();
  out.right_start_s = right.start_time_s();
  out.left_start_s = left.start_time_s();
  out.data.resize(right.size() + left.size(), kNumChannels);
  out.data.topRows(right.size()) = right.data();
  out.data.bottomRows(left.size()) = mirrored.data();
  if (labels_right && labels_left) {
    if (labels_right->size() != static_cast<std::size_t>(right.size()) ||
        labels_left->size() != static_cast<std::size_t>(left.size())) {
      throw Error("label tracks do not match their series");
    }
    std::vector<std::uint8_t> labels = labels_right->classes();
    labels.insert(labels.end(), labels_left->classes().begin(), labels_left->classes().end());
    out.labels = std::move(labels);
  }
  return out;
}

FrameSeries right_block(const CombinedSeries& combined) {
  return FrameSeries(Hand::kRight, combined.rate_hz, combined.right_start_s,
                     combined.data.topRows(combined.split_index));
}

FrameSeries left_block(const CombinedSeries& combined) {
  return FrameSeries(Hand::kLeft, combined.rate_hz, combined.left_start_s,
                     combined.data.bottomRows(combined.size() - combined.split_index));
}

CombinedSeries prepare_recording(const Recording& rec) {
  const auto right = downsample(rec.right, kProcessedRateHz);
  const auto left = downsample(rec.left, kProcessedRateHz);
  std::optional<LabelSequence> labels_right;
  std::optional<LabelSequence> labels_left;
  if (rec.labels_right && rec.labels_left) {
    labels_right = downsample_labels(*rec.labels_right, kProcessedRateHz);
    labels_left = downsample_labels(*rec.labels_left, kProcessedRateHz);
  }
  return combine_hands(right, left, labels_right, labels_left);
}

NormStats compute_norm_stats(const std::vector<const CombinedSeries*>& series) {
  NormStats stats;
  double frames = 0.0;
  Eigen::Matrix<double, 1, kNumChannels> sum = Eigen::Matrix<double, 1, kNumChannels>::Zero();
  for (const auto* s : series) {
    sum += s->data.colwise().sum();
    frames += static_cast<double>(s->size());
  }
  if (frames == 0.0) throw Error("no frames to compute normalization statistics from");
  const Eigen::Matrix<double, 1, kNumChannels> mean = sum / frames;
  Eigen::Matrix<double, 1, kNumChannels> sq = Eigen::Matrix<double, 1, kNumChannels>::Zero();
  for (const auto* s : series) {
    sq += (s->data.rowwise() - mean).array().square().matrix().colwise().sum();
  }
  for (int c = 0; c < kNumChannels; ++c) {
    stats.mean[c] = mean(c);
    stats.stddev[c] = std::sqrt(sq(c) / frames);
  }
  return stats;
}

CombinedSeries normalize(const CombinedSeries& series, const NormStats& stats) {
  CombinedSeries out = series;
  for (int c = 0; c < kNumChannels; ++c) {
    if (!(stats.stddev[c] > 0.0)) throw Error("zero variance channel " + std::to_string(c));
    out.data.col(c) = (series.data.col(c).array() - stats.mean[c]) / stats.stddev[c];
  }
  return out;
}

WindowBatch make_windows(const CombinedSeries& series, Eigen::Index window_frames, Eigen::Index stride,
                         bool split_at_seam) {
  if (window_frames < 1 || stride < 1) throw Error("window length and stride must be positive");
  WindowBatch batch;
  batch.window_frames = window_frames;
  if (split_at_seam) {
    if (series.split_index > 0) append_segment_windows(batch, series, 0, series.split_index, stride);
    if (series.split_index < series.size()) {
      append_segment_windows(batch, series, series.split_index, series.size(), stride);
    }
  } else {
    append_segment_windows(batch, series, 0, series.size(), stride);
  }
  return batch;
}

Eigen::MatrixXd overlap_average(const std::vector<Eigen::MatrixXd>& window_values, const WindowBatch& batch,
                                Eigen::Index length) {
  if (window_values.size() != batch.windows.size()) throw Error("one value block per window expected");
  const Eigen::Index cols = window_values.empty() ? 0 : window_values.front().cols();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(length, cols);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(length);
  for (std::size_t i = 0; i < window_values.size(); ++i) {
    const auto& w = batch.windows[i];
    const Eigen::Index n = std::min(w.valid_frames, length - w.origin);
    sum.middleRows(w.origin, n) += window_values[i].topRows(n);
    count.segment(w.origin, n).array() += 1.0;
  }
  for (Eigen::Index t = 0; t < length; ++t) {
    if (count(t) > 0.0) sum.row(t) /= count(t);
  }
  return sum;
}

}  // namespace eatspeed
