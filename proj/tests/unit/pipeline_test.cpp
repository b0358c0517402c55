#include "eatspeed/pipeline.hpp"
#include "eatspeed/recording_io.hpp"
#include "eatspeed/synth.hpp"
#include "test_util.hpp"
#include "train_util.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace eatspeed {
namespace {

std::vector<std::string> ids(int n) {
  std::vector<std::string> out;
  for (int i = 1; i <= n; ++i) out.push_back("P0" + std::to_string(i));
  return out;
}

TEST(Folds, SevenParticipantsEachTestedOnce) {
  RunConfig cfg;
  cfg.seed = 5;
  const auto plans = plan_folds(ids(7), cfg);
  ASSERT_EQ(plans.size(), 7u);
  std::map<std::string, int> tested;
  for (const auto& p : plans) {
    EXPECT_EQ(p.test.size(), 1u);
    EXPECT_EQ(p.validation.size(), 1u);
    EXPECT_EQ(p.train.size() + p.validation.size() + p.test.size(), 7u);
    for (const auto& id : p.test) ++tested[id];
  }
  EXPECT_EQ(tested.size(), 7u);
  for (const auto& [id, n] : tested) EXPECT_EQ(n, 1) << id;
}

TEST(Folds, PartitionForUnevenCounts) {
  RunConfig cfg;
  cfg.folds = 3;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = seed;
    const auto plans = plan_folds(ids(8), cfg);
    std::multiset<std::string> tested;
    for (const auto& p : plans) {
      EXPECT_NO_THROW(check_no_leakage(p));
      tested.insert(p.test.begin(), p.test.end());
    }
    const auto all = ids(8);
    EXPECT_EQ(tested, std::multiset<std::string>(all.begin(), all.end()));
  }
}

TEST(Folds, SeedChangesAssignment) {
  RunConfig a, b;
  a.seed = 1;
  b.seed = 2;
  EXPECT_EQ(plan_folds(ids(7), a)[0].test, plan_folds(ids(7), a)[0].test);
  bool differs = false;
  for (std::size_t f = 0; f < 7; ++f) differs |= plan_folds(ids(7), a)[f].test != plan_folds(ids(7), b)[f].test;
  EXPECT_TRUE(differs);
}

TEST(Folds, TooFewParticipants) {
  RunConfig cfg;
  EXPECT_THROW(plan_folds(ids(6), cfg), Error);
}

TEST(Folds, LeakageGuard) {
  FoldPlan plan;
  plan.train = {"P01", "P02"};
  plan.test = {"P02"};
  EXPECT_THROW(check_no_leakage(plan), Error);
  plan.test = {"P03"};
  plan.validation = {"P01"};
  EXPECT_THROW(check_no_leakage(plan), Error);
}

TEST(Folds, HoldoutKeepsGivenSplit) {
  RunConfig cfg;
  cfg.train_participants = {"P01", "P02", "P03", "P04", "P05", "P06"};
  cfg.test_participants = {"P07"};
  const auto plans = plan_folds(ids(7), cfg);
  ASSERT_EQ(plans.size(), 1u);
  EXPECT_EQ(plans[0].test, std::vector<std::string>{"P07"});
  EXPECT_EQ(plans[0].validation, std::vector<std::string>{"P06"});
  EXPECT_EQ(plans[0].train.size(), 5u);
  cfg.test_participants = {"P09"};
  EXPECT_THROW(plan_folds(ids(7), cfg), Error);
  cfg.test_participants = {"P01"};
  EXPECT_THROW(plan_folds(ids(7), cfg), Error);
}

TEST(RunConfigJson, RoundTrip) {
  RunConfig cfg;
  cfg.datasets = {"a/b", "c"};
  cfg.hands = HandsMode::kDominant;
  cfg.model = test::small_config();
  cfg.folds = 3;
  cfg.seed = 99;
  cfg.negative_fraction = 0.25;
  cfg.train_participants = {"X"};
  cfg.test_participants = {"Y"};
  const auto back = run_config_from_json(run_config_to_json(cfg));
  EXPECT_EQ(run_config_to_json(back), run_config_to_json(cfg));
  EXPECT_EQ(back.model, cfg.model);
  EXPECT_EQ(back.hands, HandsMode::kDominant);
  EXPECT_THROW(run_config_from_json(R"({"foldz": 2})"), Error);
  EXPECT_EQ(run_config_to_json(cfg, false).find("\"out\""), std::string::npos);
}

// Three participants with one short day each: enough for a three-fold run in seconds.
std::vector<PreparedRecording> tiny_dataset() {
  std::vector<PreparedRecording> data;
  for (int p = 1; p <= 3; ++p) {
    SynthSpec spec;
    spec.participant_id = "P0" + std::to_string(p);
    spec.day_duration_s = 1200;
    spec.episodes = {{240, 600, 2.0 + p}};
    spec.left_hand_fraction = 0.3;
    spec.seed = static_cast<std::uint64_t>(p);
    data.push_back(prepare(generate(spec).recording));
  }
  return data;
}

RunConfig tiny_run() {
  RunConfig cfg;
  cfg.model = test::small_config();
  cfg.model.max_epochs = 2;
  cfg.folds = 3;
  cfg.seed = 8;
  cfg.negative_fraction = 0.1;
  cfg.plots = true;
  return cfg;
}

TEST(Crossval, AggregateIsSumOfFolds) {
  const auto data = tiny_dataset();
  const auto result = crossval(data, tiny_run());
  ASSERT_EQ(result.folds.size(), 3u);
  EXPECT_EQ(result.recordings.size(), 3u);
  EXPECT_TRUE(result.failures.empty());
  for (std::size_t s = 0; s < result.aggregate.segments.size(); ++s) {
    int tp = 0, fp = 0, fn = 0;
    for (const auto& f : result.folds) {
      tp += f.segments[s].tp;
      fp += f.segments[s].fp;
      fn += f.segments[s].fn;
    }
    EXPECT_EQ(result.aggregate.segments[s].tp, tp);
    EXPECT_EQ(result.aggregate.segments[s].fp, fp);
    EXPECT_EQ(result.aggregate.segments[s].fn, fn);
  }
  int etp = 0;
  std::size_t pairs = 0;
  for (const auto& f : result.folds) {
    etp += f.episode_tp;
    pairs += f.speed_pairs.size();
  }
  EXPECT_EQ(result.aggregate.episode_tp, etp);
  EXPECT_EQ(result.aggregate.speed_pairs.size(), pairs);
  EXPECT_EQ(result.aggregate.dataset_hash, dataset_hash(data));
  EXPECT_EQ(result.aggregate.seed, 8u);
  EXPECT_FALSE(result.aggregate.config_json.empty());
}

TEST(Crossval, SameSeedSameReport) {
  const auto data = tiny_dataset();
  auto cfg = tiny_run();
  cfg.model.max_epochs = 1;
  EXPECT_EQ(to_json(crossval(data, cfg).aggregate), to_json(crossval(data, cfg).aggregate));
}

TEST(Crossval, DominantNeverHasMoreBites) {
  const auto data = tiny_dataset();
  auto cfg = tiny_run();
  cfg.model.max_epochs = 1;
  const auto ckpt = train_on({&data[0], &data[1]}, {}, cfg, 1);
  auto dom = cfg;
  dom.hands = HandsMode::kDominant;
  const auto both = evaluate_all(data, ckpt, cfg);
  const auto single = evaluate_all(data, ckpt, dom);
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_LE(single.recordings[i].analysis.bites.size(), both.recordings[i].analysis.bites.size());
  }
}

TEST(Pipeline, WriteRunEmitsArtifacts) {
  const auto data = tiny_dataset();
  auto cfg = tiny_run();
  cfg.model.max_epochs = 1;
  cfg.out_dir = test::temp_dir("run");
  const auto result = crossval(data, cfg);
  write_run(result, cfg);
  namespace fs = std::filesystem;
  for (const char* f : {"config.json", "report.txt", "report.tsv", "report.json", "failures.txt",
                        "plots/speed_violin.svg", "plots/speed_scatter.svg", "plots/episode_bars.svg"}) {
    EXPECT_TRUE(fs::exists(cfg.out_dir / f)) << f;
  }
  for (int f = 0; f < 3; ++f) EXPECT_TRUE(fs::exists(cfg.out_dir / ("fold" + std::to_string(f)) / "report.json"));
  EXPECT_TRUE(fs::exists(cfg.out_dir / "recordings" / "P01" / "D1" / "bites.csv"));
  std::ifstream in(cfg.out_dir / "report.json");
  std::stringstream text;
  text << in.rdbuf();
  EXPECT_EQ(to_json(report_from_json(text.str())), to_json(result.aggregate));
}

TEST(Pipeline, FailingRecordingIsIsolated) {
  const auto dir = test::temp_dir("partial");
  for (int p = 1; p <= 2; ++p) {
    SynthSpec spec;
    spec.participant_id = "P0" + std::to_string(p);
    spec.day_duration_s = 900;
    spec.episodes = {{120, 600, 3.0}};
    save_recording(generate(spec).recording, dir / spec.participant_id / "D1");
  }
  std::ofstream(dir / "P02" / "D1" / "left.csv", std::ios::app) << "oops\n";
  RunConfig cfg;
  cfg.datasets = {dir};
  std::vector<std::string> failures;
  const auto data = load_datasets(cfg, failures);
  EXPECT_EQ(data.size(), 1u);
  ASSERT_EQ(failures.size(), 1u);
  EXPECT_NE(failures[0].find("P02"), std::string::npos);
}

TEST(Pipeline, OracleOnSuiteDayIsPerfect) {
  const auto spec = default_benchmark_suite()[0];
  const auto rec = prepare(generate(spec).recording);
  const auto report = evaluate(rec, analyze_oracle(rec));
  EXPECT_DOUBLE_EQ(report.segment(GestureClass::kEating, 0.1).f1(), 1.0);
  EXPECT_DOUBLE_EQ(report.episode_f1(), 1.0);
  EXPECT_DOUBLE_EQ(*report.kappa(), 1.0);
}

}  // namespace
}  // namespace eatspeed
