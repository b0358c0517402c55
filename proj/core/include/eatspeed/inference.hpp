#pragma once

#include "eatspeed/checkpoint.hpp"
#include "eatspeed/model.hpp"
#include "eatspeed/preprocess.hpp"

#include <utility>

namespace eatspeed {

struct HandProbabilities {
  ProbSequence right;
  ProbSequence left;
};

/// Class probabilities for each window (T_w x 3, eval mode).
std::vector<Eigen::MatrixXd> predict_windows(const Network<float>& net, const WindowBatch& batch);

/// Normalizes, windows with stride T_w / 2 (never across the hand seam),
/// averages overlapping probabilities and splits the result per hand.
HandProbabilities predict_combined(const Network<float>& net, const NormStats& norm, const CombinedSeries& series);

/// Full inference for a recording: 16 Hz preprocessing, two-hand combination
/// and windowed forward passes.
HandProbabilities predict(const Recording& rec, const Checkpoint& ckpt);

/// Same as predict() but only the given hand's data is run through the model.
ProbSequence predict_hand(const Recording& rec, const Checkpoint& ckpt, Hand hand);

/// ProbSequence that puts all mass on the given labels (oracle predictions).
ProbSequence one_hot(const LabelSequence& labels, double start_s, Hand hand);

}  // namespace eatspeed
