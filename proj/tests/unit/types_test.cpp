#include "eatspeed/bites.hpp"
#include "eatspeed/types.hpp"

#include <gtest/gtest.h>

#include <random>

namespace eatspeed {
namespace {

FrameSeries zeros(Hand hand, Eigen::Index frames, double rate = 64.0, double start = 0.0) {
  return FrameSeries(hand, rate, start, FrameMatrix::Zero(frames, kNumChannels));
}

TEST(FrameSeries, RejectsEmptyAndBadRate) {
  EXPECT_THROW(zeros(Hand::kRight, 0), Error);
  EXPECT_THROW(zeros(Hand::kRight, 10, 0.0), Error);
  EXPECT_THROW(zeros(Hand::kMerged, 10), Error);
}

TEST(FrameSeries, ImplicitTimestamps) {
  const auto s = zeros(Hand::kLeft, 64, 16.0, 2.0);
  EXPECT_DOUBLE_EQ(s.time_of(0), 2.0);
  EXPECT_DOUBLE_EQ(s.time_of(16), 3.0);
  EXPECT_DOUBLE_EQ(s.end_time_s(), 6.0);
}

TEST(LabelSequence, RejectsUnknownClass) {
  EXPECT_THROW(LabelSequence({0, 1, 3}, 16.0), Error);
  EXPECT_NO_THROW(LabelSequence({0, 1, 2}, 16.0));
}

TEST(BiteInterval, Validate) {
  EXPECT_THROW(validate(BiteInterval{2.0, 2.0, GestureClass::kEating, Hand::kRight}), Error);
  EXPECT_THROW(validate(BiteInterval{0.0, 1.0, GestureClass::kOther, Hand::kRight}), Error);
  EXPECT_NO_THROW(validate(BiteInterval{0.0, 1.0, GestureClass::kDrinking, Hand::kLeft}));
}

TEST(Hand, StringRoundTrip) {
  for (auto h : {Hand::kLeft, Hand::kRight, Hand::kMerged}) EXPECT_EQ(hand_from_string(to_string(h)), h);
  EXPECT_EQ(hand_from_string("L"), Hand::kLeft);
  EXPECT_THROW(hand_from_string("middle"), Error);
}

TEST(Recording, SpanMismatchOfOnePeriodIsAnError) {
  Recording rec{"P", "D", zeros(Hand::kRight, 100), zeros(Hand::kLeft, 99)};
  try {
    validate(rec);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("channel span mismatch"), std::string::npos);
  }
  rec.left = zeros(Hand::kLeft, 100);
  EXPECT_NO_THROW(validate(rec));
}

TEST(Recording, LabelLengthMustMatch) {
  Recording rec{"P", "D", zeros(Hand::kRight, 100), zeros(Hand::kLeft, 100)};
  rec.labels_right = LabelSequence(std::vector<std::uint8_t>(99, 0), 64.0);
  rec.labels_left = LabelSequence(std::vector<std::uint8_t>(100, 0), 64.0);
  EXPECT_THROW(validate(rec), Error);
}

TEST(LabelsFromIntervals, EmptyGivesZeros) {
  const auto labels = labels_from_intervals({}, 10, 16.0);
  EXPECT_EQ(labels.classes(), std::vector<std::uint8_t>(10, 0));
}

TEST(LabelsFromIntervals, DirectRasterization) {
  const auto labels = labels_from_intervals({{1.0, 2.0, GestureClass::kEating, Hand::kRight}}, 48, 16.0);
  for (std::size_t i = 0; i < 48; ++i) EXPECT_EQ(labels[i], (i >= 16 && i <= 31) ? 1 : 0) << i;
}

TEST(LabelsFromIntervals, ConflictingOverlapThrows) {
  EXPECT_THROW(labels_from_intervals({{1.0, 2.0, GestureClass::kEating, Hand::kRight},
                                      {1.5, 2.5, GestureClass::kDrinking, Hand::kRight}},
                                     64, 16.0),
               Error);
}

TEST(LabelsFromIntervals, OutOfSpanThrows) {
  EXPECT_THROW(labels_from_intervals({{3.0, 5.0, GestureClass::kEating, Hand::kRight}}, 48, 16.0), Error);
}

// Random frame-aligned, non-overlapping interval sets survive rasterization and extraction.
TEST(LabelsFromIntervals, RoundTripProperty) {
  std::mt19937_64 rng(11);
  const double rate = 16.0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t frames = 400;
    std::vector<BiteInterval> set;
    std::size_t f = std::uniform_int_distribution<std::size_t>(0, 10)(rng);
    GestureClass last = GestureClass::kOther;
    while (true) {
      const auto len = std::uniform_int_distribution<std::size_t>(1, 30)(rng);
      if (f + len > frames) break;
      auto klass = std::bernoulli_distribution(0.7)(rng) ? GestureClass::kEating : GestureClass::kDrinking;
      // Touching runs must differ in class, otherwise extraction joins them.
      if (!set.empty() && set.back().t_r * rate == static_cast<double>(f) && klass == last) {
        klass = klass == GestureClass::kEating ? GestureClass::kDrinking : GestureClass::kEating;
      }
      set.push_back({static_cast<double>(f) / rate, static_cast<double>(f + len) / rate, klass, Hand::kRight});
      last = klass;
      f += len + std::uniform_int_distribution<std::size_t>(0, 20)(rng);
    }
    const auto labels = labels_from_intervals(set, frames, rate);
    EXPECT_EQ(extract_runs(labels), set) << "trial " << trial;
  }
}

}  // namespace
}  // namespace eatspeed
