#include "eatspeed/report.hpp"

#include <gtest/gtest.h>

namespace eatspeed {
namespace {

EvalReport sample_report() {
  EvalReport r;
  r.confusion = {{{90, 3, 1}, {2, 20, 0}, {1, 0, 5}}};
  r.segments[0].tp = 8;
  r.segments[0].fp = 2;
  r.segments[0].fn = 1;
  r.episode_tp = 2;
  r.episode_fn = 1;
  r.episode_iou_sum = 1.5;
  r.speed_pairs = {{3.1, 3.0}, {4.4, 4.0}};
  r.minute_pairs = {{3, 3}, {2, 4}};
  r.config_json = R"({"a":1})";
  r.seed = 12;
  r.dataset_hash = "00ff";
  return r;
}

TEST(EvalReport, F1FollowsCounts) {
  const auto r = sample_report();
  EXPECT_DOUBLE_EQ(r.segments[0].f1(), 16.0 / 19.0);
  EXPECT_DOUBLE_EQ(r.episode_f1(), 4.0 / 5.0);
  EXPECT_DOUBLE_EQ(r.episode_mean_iou(), 0.75);
  EXPECT_DOUBLE_EQ(SegmentCounts{}.f1(), 0.0);
}

TEST(EvalReport, MergePoolsCounts) {
  auto a = sample_report();
  a.merge(sample_report());
  EXPECT_EQ(a.segments[0].tp, 16);
  EXPECT_EQ(a.confusion[0][0], 180);
  EXPECT_EQ(a.speed_pairs.size(), 4u);
  EXPECT_DOUBLE_EQ(a.segments[0].f1(), sample_report().segments[0].f1());
}

TEST(EvalReport, JsonRoundTrip) {
  const auto r = sample_report();
  const auto text = to_json(r);
  EXPECT_EQ(to_json(report_from_json(text)), text);
}

TEST(EvalReport, TableHasOneRowPerMetric) {
  const auto table = to_table(sample_report());
  EXPECT_EQ(table.rfind("class\tk\tmetric\tvalue\n", 0), 0u);
  EXPECT_NE(table.find("eating\t0.1\tf1\t"), std::string::npos);
  EXPECT_NE(table.find("speed\t-\tmape\t"), std::string::npos);
  EXPECT_NE(to_text(sample_report()).find("kappa"), std::string::npos);
}

TEST(EvalReport, EmptyReportHasNoKappaOrSpeed) {
  const EvalReport r;
  EXPECT_FALSE(r.kappa());
  EXPECT_FALSE(r.speed_mape());
  EXPECT_NE(to_table(r).find("NA"), std::string::npos);
}

TEST(Evaluate, PerfectInputs) {
  const std::vector<std::uint8_t> labels{0, 1, 1, 0, 2};
  const std::vector<BiteInterval> bites{{0, 2, GestureClass::kEating, Hand::kRight}};
  const std::vector<EatingEpisode> eps{{0, 600, 30, 3.0}};
  const std::vector<int> minutes{3, 3, 3, 3, 3, 3, 3, 3, 3, 3};
  const auto r = evaluate(labels, labels, bites, bites, eps, eps, minutes, minutes);
  EXPECT_DOUBLE_EQ(*r.kappa(), 1.0);
  EXPECT_DOUBLE_EQ(r.segment(GestureClass::kEating, 0.5).f1(), 1.0);
  EXPECT_DOUBLE_EQ(*r.speed_mape(), 0.0);
  EXPECT_EQ(r.minute_pairs.size(), 10u);
}

}  // namespace
}  // namespace eatspeed
