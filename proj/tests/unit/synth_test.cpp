#include "eatspeed/pipeline.hpp"
#include "eatspeed/synth.hpp"

#include <gtest/gtest.h>

#include <set>

namespace eatspeed {
namespace {

SynthSpec one_episode(double speed = 3.0) {
  SynthSpec spec;
  spec.day_duration_s = 1800;
  spec.episodes = {{300, 600, speed}};
  spec.seed = 3;
  return spec;
}

TEST(Synth, TenMinutesAtThreePerMinute) {
  const auto day = generate(one_episode());
  ASSERT_EQ(day.bites.size(), 30u);
  for (const auto& b : day.bites.bites) EXPECT_EQ(b.klass, GestureClass::kEating);
  ASSERT_EQ(day.episodes.size(), 1u);
  EXPECT_EQ(day.episodes.episodes[0].bite_count, 30);
  EXPECT_DOUBLE_EQ(day.episodes.episodes[0].speed_bites_per_min, 3.0);
  EXPECT_DOUBLE_EQ(day.episodes.episodes[0].t_l, 300.0);
  EXPECT_DOUBLE_EQ(day.episodes.episodes[0].t_r, 900.0);
  EXPECT_EQ(day.bites.source, BiteSource::kAnnotation);
}

TEST(Synth, SameSeedIsBitIdentical) {
  const auto a = generate(one_episode());
  const auto b = generate(one_episode());
  EXPECT_EQ(a.recording.right.data(), b.recording.right.data());
  EXPECT_EQ(a.recording.left.data(), b.recording.left.data());
  EXPECT_EQ(a.bites.bites, b.bites.bites);
  auto other = one_episode();
  other.seed = 4;
  EXPECT_NE(generate(other).recording.right.data(), a.recording.right.data());
}

TEST(Synth, OverlappingEpisodesAreRejected) {
  auto spec = one_episode();
  spec.episodes.push_back({600, 600, 3.0});
  EXPECT_THROW(generate(spec), Error);
  spec.episodes.back().start_s = 1000;  // ends 100 s after the first, < 4 min
  EXPECT_THROW(validate(spec), Error);
}

TEST(Synth, SparseEpisodesAndDenseSnacksAreRejected) {
  auto spec = one_episode();
  spec.episodes[0].duration_s = 180;
  spec.episodes[0].speed_bpm = 1.0;
  EXPECT_THROW(validate(spec), Error);
  spec = one_episode();
  spec.snacks = {{1500, 5, 20}};
  EXPECT_THROW(validate(spec), Error);
  spec.snacks = {{1200, 3, 20}};  // 300 s after the episode end is fine
  EXPECT_NO_THROW(validate(spec));
}

TEST(Synth, LabelsAndBitesAgree) {
  auto spec = one_episode(4.0);
  spec.left_hand_fraction = 0.5;
  spec.episodes[0].drinks = 3;
  spec.snacks = {{1200, 2, 30}};
  spec.drinks = {{100}};
  const auto day = generate(spec);
  const auto& rec = day.recording;
  ASSERT_TRUE(rec.labels_right && rec.labels_left);
  auto runs = extract_runs(*rec.labels_right, rec.right.start_time_s(), Hand::kRight);
  const auto left = extract_runs(*rec.labels_left, rec.left.start_time_s(), Hand::kLeft);
  runs.insert(runs.end(), left.begin(), left.end());
  std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.t_l < b.t_l; });
  EXPECT_EQ(runs, day.bites.bites);
  ASSERT_TRUE(rec.bites_gt);
  EXPECT_EQ(*rec.bites_gt, day.bites.bites);
}

TEST(Synth, SignalsAreFiniteAndBounded) {
  for (const auto& spec : default_benchmark_suite()) {
    auto small = spec;
    small.day_duration_s = std::min(small.day_duration_s, 7200.0);
    small.episodes.erase(std::remove_if(small.episodes.begin(), small.episodes.end(),
                                        [&](const EpisodeSpec& e) { return e.start_s + e.duration_s > 7000; }),
                         small.episodes.end());
    small.snacks.clear();
    small.drinks.clear();
    const auto day = generate(small);
    for (const auto* series : {&day.recording.right, &day.recording.left}) {
      ASSERT_TRUE(series->data().allFinite());
      EXPECT_LE(series->data().leftCols(3).cwiseAbs().maxCoeff(), kSynthMaxAccelG);
      EXPECT_LE(series->data().rightCols(3).cwiseAbs().maxCoeff(), kSynthMaxGyroDps);
    }
  }
}

TEST(Synth, LeftHandTemplatesMirrorOntoRightHand) {
  auto right = one_episode();
  right.noise_level = 0.0;
  right.distractor_rate_per_min = 0.0;
  right.amplitude_jitter = 0.0;
  auto left = right;
  left.left_hand_fraction = 1.0;
  const auto r = generate(right);
  const auto l = generate(left);
  ASSERT_EQ(r.bites.size(), l.bites.size());
  // Without noise the gyro tracks carry only the templates; gravity drift differs per wrist.
  const auto mirrored_left = mirror_hand(l.recording.left);
  const auto mirrored = mirrored_left.data().rightCols(3);
  EXPECT_LT((mirrored - r.recording.right.data().rightCols(3)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT(mirrored.cwiseAbs().maxCoeff(), 100.0);
}

TEST(Synth, ClassRatioWithinTenPercent) {
  const auto day = generate(class_ratio_spec(142.52, 2.51, 1.0));
  const auto d = class_durations(day);
  const double eating = d[1] / d[2], other = d[0] / d[2];
  EXPECT_NEAR(eating, 2.51, 0.251);
  EXPECT_NEAR(other, 142.52, 14.252);
}

TEST(Synth, OracleRecoversKnownSpeeds) {
  SynthSpec spec;
  spec.day_duration_s = 3 * 3600;
  spec.episodes = {{600, 720, 2.5}, {3000, 600, 4.0}, {6000, 480, 5.5}};
  spec.left_hand_fraction = 0.3;
  spec.seed = 11;
  const auto day = generate(spec);
  const auto rec = prepare(day.recording);
  const auto analysis = analyze_oracle(rec);
  ASSERT_EQ(analysis.episodes.size(), 3u);
  const double expected[] = {2.5, 4.0, 5.5};
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(analysis.episodes.episodes[i].speed_bites_per_min, expected[i], 0.1 * expected[i]);
  }
}

TEST(Synth, OracleMinuteTrackMatchesTruth) {
  auto spec = one_episode(5.0);
  spec.left_hand_fraction = 0.4;
  const auto rec = prepare(generate(spec).recording);
  const auto report = evaluate(rec, analyze_oracle(rec));
  ASSERT_TRUE(report.minute_mape());
  EXPECT_LT(*report.minute_mape(), 0.05);
}

TEST(BenchmarkSuite, ShapeAndOracleSpeeds) {
  const auto suite = default_benchmark_suite();
  ASSERT_EQ(suite.size(), 14u);
  std::set<std::string> participants;
  double lo = 1e9, hi = 0, shortest = 1e9, longest = 0;
  bool bilateral = false, unilateral = false, snacks = false, drinks = false, no_snacks = false;
  for (const auto& spec : suite) {
    EXPECT_NO_THROW(validate(spec));
    participants.insert(spec.participant_id);
    for (const auto& e : spec.episodes) {
      EXPECT_GE(e.duration_s, 180.0);
      lo = std::min(lo, e.speed_bpm);
      hi = std::max(hi, e.speed_bpm);
      drinks |= e.drinks > 0;
    }
    shortest = std::min(shortest, spec.day_duration_s);
    longest = std::max(longest, spec.day_duration_s);
    bilateral |= spec.left_hand_fraction > 0.0 && spec.left_hand_fraction < 1.0;
    unilateral |= spec.left_hand_fraction == 0.0 || spec.left_hand_fraction == 1.0;
    snacks |= !spec.snacks.empty();
    no_snacks |= spec.snacks.empty();
    drinks |= !spec.drinks.empty();
  }
  EXPECT_EQ(participants.size(), 7u);
  EXPECT_GE(lo, 2.0);
  EXPECT_LE(hi, 6.0);
  EXPECT_DOUBLE_EQ(shortest, 2 * 3600.0);
  EXPECT_DOUBLE_EQ(longest, 8 * 3600.0);
  EXPECT_TRUE(bilateral && unilateral && snacks && drinks && no_snacks);
}

}  // namespace
}  // namespace eatspeed
