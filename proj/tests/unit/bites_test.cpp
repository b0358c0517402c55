#include "eatspeed/bites.hpp"

#include <gtest/gtest.h>

#include <random>

namespace eatspeed {
namespace {

constexpr auto kE = GestureClass::kEating;
constexpr auto kD = GestureClass::kDrinking;

BiteInterval bite(double l, double r, GestureClass c = kE, Hand h = Hand::kRight) { return {l, r, c, h}; }

ProbSequence probs_of(std::initializer_list<std::array<double, 3>> rows) {
  ProbSequence p;
  p.probs.resize(static_cast<Eigen::Index>(rows.size()), 3);
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    for (int c = 0; c < 3; ++c) p.probs(r, c) = row[static_cast<std::size_t>(c)];
    ++r;
  }
  return p;
}

TEST(Argmax, PicksMaximum) {
  EXPECT_EQ(argmax_labels(probs_of({{0.2, 0.7, 0.1}}))[0], 1);
  EXPECT_EQ(argmax_labels(probs_of({{0.1, 0.2, 0.7}}))[0], 2);
}

TEST(Argmax, TiesGoToLowerClass) {
  EXPECT_EQ(argmax_labels(probs_of({{0.4, 0.4, 0.2}}))[0], 0);
  EXPECT_EQ(argmax_labels(probs_of({{0.2, 0.4, 0.4}}))[0], 1);
  const double third = 1.0 / 3.0;
  const auto uniform = argmax_labels(probs_of({{third, third, third}, {third, third, third}}));
  EXPECT_EQ(uniform.classes(), (std::vector<std::uint8_t>{0, 0}));
}

TEST(ExtractRuns, Examples) {
  EXPECT_TRUE(extract_runs(LabelSequence(std::vector<std::uint8_t>(20, 0), 16.0)).empty());

  std::vector<std::uint8_t> labels(48, 0);
  for (int i = 16; i <= 31; ++i) labels[static_cast<std::size_t>(i)] = 1;
  EXPECT_EQ(extract_runs(LabelSequence(labels, 16.0)), std::vector<BiteInterval>{bite(1.0, 2.0)});

  const auto touching = extract_runs(LabelSequence({1, 1, 2, 2}, 16.0));
  ASSERT_EQ(touching.size(), 2u);
  EXPECT_EQ(touching[0].klass, kE);
  EXPECT_EQ(touching[1].klass, kD);
  EXPECT_EQ(touching[0].t_r, touching[1].t_l);
}

TEST(ExtractRuns, OriginAndHand) {
  const auto runs = extract_runs(LabelSequence({0, 2, 2, 0}, 4.0), 10.0, Hand::kLeft);
  EXPECT_EQ(runs, std::vector<BiteInterval>{bite(10.25, 10.75, kD, Hand::kLeft)});
}

TEST(Consolidate, Examples) {
  EXPECT_EQ(consolidate({bite(0, 2), bite(2.3, 4)}), std::vector<BiteInterval>{bite(0, 4)});
  const std::vector<BiteInterval> mixed{bite(0, 2), bite(2.3, 4, kD)};
  EXPECT_EQ(consolidate(mixed), mixed);
  EXPECT_EQ(consolidate({bite(0, 1), bite(1.4, 2), bite(2.4, 3)}), std::vector<BiteInterval>{bite(0, 3)});
  // Exactly 0.5 s merges.
  EXPECT_EQ(consolidate({bite(0, 1), bite(1.5, 2)}).size(), 1u);
  EXPECT_EQ(consolidate({bite(0, 1), bite(1.5625, 2)}).size(), 2u);
}

// Repeated pairwise merging until nothing changes.
std::vector<BiteInterval> fixpoint_merge(std::vector<BiteInterval> v, double gap) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      if (v[i].klass == v[i + 1].klass && v[i + 1].t_l - v[i].t_r <= gap) {
        v[i].t_r = std::max(v[i].t_r, v[i + 1].t_r);
        v.erase(v.begin() + static_cast<long>(i) + 1);
        changed = true;
        break;
      }
    }
  }
  return v;
}

// Time-ordered, non-overlapping soup on a 1/16 s grid.
std::vector<BiteInterval> soup(std::mt19937_64& rng, int n) {
  std::vector<BiteInterval> out;
  double t = std::uniform_int_distribution<int>(0, 16)(rng) / 16.0;
  for (int i = 0; i < n; ++i) {
    const double len = std::uniform_int_distribution<int>(1, 40)(rng) / 16.0;
    out.push_back(bite(t, t + len, std::bernoulli_distribution(0.7)(rng) ? kE : kD));
    t += len + std::uniform_int_distribution<int>(0, 20)(rng) / 16.0;
  }
  return out;
}

TEST(Consolidate, MatchesFixpointOracleAndIsIdempotent) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const auto s = soup(rng, std::uniform_int_distribution<int>(0, 25)(rng));
    const auto once = consolidate(s);
    EXPECT_EQ(once, fixpoint_merge(s, kMergeGapS));
    EXPECT_EQ(consolidate(once), once);
    EXPECT_LE(once.size(), s.size());
  }
}

TEST(FilterShort, BoundaryIsInclusive) {
  EXPECT_TRUE(filter_short({bite(0, 0.8)}).bites.empty());
  EXPECT_EQ(filter_short({bite(0, 1.0)}).bites.size(), 1u);
}

TEST(FilterShort, RandomSoupSatisfiesInvariants) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const auto s = consolidate(soup(rng, std::uniform_int_distribution<int>(0, 30)(rng)));
    const auto out = filter_short(s);
    EXPECT_NO_THROW(validate(out));
    EXPECT_LE(out.size(), s.size());
    for (const auto& b : out.bites) EXPECT_GE(b.duration(), kMinBiteDurationS);
  }
}

TEST(DetectBites, EndToEnd) {
  // 16 Hz: 20 frames eating, 4 other, 10 eating, 30 other, 8 drinking (too short).
  std::vector<std::array<double, 3>> rows;
  auto push = [&](int n, int klass) {
    for (int i = 0; i < n; ++i) {
      std::array<double, 3> r{0.1, 0.1, 0.1};
      r[static_cast<std::size_t>(klass)] = 0.8;
      rows.push_back(r);
    }
  };
  push(20, 1);
  push(4, 0);
  push(10, 1);
  push(30, 0);
  push(8, 2);
  ProbSequence p;
  p.probs.resize(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int c = 0; c < 3; ++c) p.probs(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
  }
  const auto set = detect_bites(p);
  ASSERT_EQ(set.size(), 1u);
  EXPECT_EQ(set.bites[0], bite(0.0, 34 / 16.0));
}

TEST(RoundTrip, ExtractInvertsRasterization) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = soup(rng, 12);
    // Well separated: same-class touching runs would fuse.
    s = fixpoint_merge(s, 0.0);
    const auto frames = static_cast<std::size_t>(std::ceil(s.empty() ? 1.0 : s.back().t_r * 16.0)) + 5;
    EXPECT_EQ(extract_runs(labels_from_intervals(s, frames, 16.0)), s);
  }
}

}  // namespace
}  // namespace eatspeed
