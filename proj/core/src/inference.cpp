#include "eatspeed/inference.hpp"

namespace eatspeed {

namespace {

ProbSequence slice(const Eigen::MatrixXd& probs, Eigen::Index begin, Eigen::Index frames, double rate, double start,
                   Hand hand) {
  ProbSequence out;
  out.probs = probs.middleRows(begin, frames);
  out.rate_hz = rate;
  out.start_s = start;
  out.hand = hand;
  return out;
}

}  // namespace

std::vector<Eigen::MatrixXd> predict_windows(const Network<float>& net, const WindowBatch& batch) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(batch.windows.size());
  for (const auto& w : batch.windows) {
    const RowMatrix<float> logits = net.forward(w.x.cast<float>(), Mode::kEval, w.valid_frames);
    out.push_back(softmax_rows<float>(logits).cast<double>());
  }
  return out;
}

HandProbabilities predict_combined(const Network<float>& net, const NormStats& norm, const CombinedSeries& series) {
  const auto normalized = normalize(series, norm);
  const Eigen::Index tw = net.config().window_frames;
  const auto batch = make_windows(normalized, tw, std::max<Eigen::Index>(1, tw / 2), true);
  const auto probs = overlap_average(predict_windows(net, batch), batch, series.size());
  HandProbabilities out;
  out.right = slice(probs, 0, series.split_index, series.rate_hz, series.right_start_s, Hand::kRight);
  out.left = slice(probs, series.split_index, series.size() - series.split_index, series.rate_hz, series.left_start_s,
                   Hand::kLeft);
  return out;
}

HandProbabilities predict(const Recording& rec, const Checkpoint& ckpt) {
  validate(rec);
  return predict_combined(ckpt.network(), ckpt.norm, prepare_recording(rec));
}

ProbSequence predict_hand(const Recording& rec, const Checkpoint& ckpt, Hand hand) {
  validate(rec);
  if (hand != Hand::kLeft && hand != Hand::kRight) throw Error("dominant hand must be left or right");
  const auto series = downsample(hand == Hand::kRight ? rec.right : rec.left, kProcessedRateHz);
  CombinedSeries single;
  single.rate_hz = series.sample_rate_hz();
  single.data = hand == Hand::kRight ? series.data() : mirror_hand(series).data();
  // A right-only or left-only combined series: the seam sits at one end.
  single.split_index = hand == Hand::kRight ? single.data.rows() : 0;
  single.right_start_s = series.start_time_s();
  single.left_start_s = series.start_time_s();
  auto probs = predict_combined(ckpt.network(), ckpt.norm, single);
  return hand == Hand::kRight ? std::move(probs.right) : std::move(probs.left);
}

ProbSequence one_hot(const LabelSequence& labels, double start_s, Hand hand) {
  ProbSequence out;
  out.probs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), kNumClasses);
  for (std::size_t t = 0; t < labels.size(); ++t) out.probs(static_cast<Eigen::Index>(t), labels[t]) = 1.0;
  out.rate_hz = labels.sample_rate_hz();
  out.start_s = start_s;
  out.hand = hand;
  return out;
}

}  // namespace eatspeed
