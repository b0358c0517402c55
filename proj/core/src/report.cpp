#include "eatspeed/report.hpp"

#include "eatspeed/recording_io.hpp"

#include "json.hpp"

#include <cmath>
#include <sstream>

namespace eatspeed {

using nlohmann::json;

namespace {

std::string optional_number(const std::optional<double>& value) {
  return value ? format_number(*value) : std::string("NA");
}

json optional_json(const std::optional<double>& value) { return value ? json(*value) : json(nullptr); }

json pairs_json(const std::vector<SpeedPair>& pairs) {
  json out = json::array();
  for (const auto& p : pairs) out.push_back({p.estimated, p.truth});
  return out;
}

std::vector<SpeedPair> pairs_from(const json& j) {
  std::vector<SpeedPair> out;
  for (const auto& p : j) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return out;
}

}  // namespace

double SegmentCounts::f1() const noexcept {
  const int denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * tp / denom;
}

EvalReport::EvalReport() {
  for (auto klass : {GestureClass::kEating, GestureClass::kDrinking}) {
    for (double k : kSegmentThresholds) segments.push_back({klass, k});
  }
}

void EvalReport::merge(const EvalReport& other) {
  for (int g = 0; g < kNumClasses; ++g) {
    for (int p = 0; p < kNumClasses; ++p) confusion[g][p] += other.confusion[g][p];
  }
  if (other.segments.size() != segments.size()) throw Error("cannot merge reports with different segment rows");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    segments[i].tp += other.segments[i].tp;
    segments[i].fp += other.segments[i].fp;
    segments[i].fn += other.segments[i].fn;
  }
  episode_tp += other.episode_tp;
  episode_fp += other.episode_fp;
  episode_fn += other.episode_fn;
  episode_iou_sum += other.episode_iou_sum;
  speed_pairs.insert(speed_pairs.end(), other.speed_pairs.begin(), other.speed_pairs.end());
  minute_pairs.insert(minute_pairs.end(), other.minute_pairs.begin(), other.minute_pairs.end());
}

std::optional<double> EvalReport::kappa() const {
  long n = 0;
  for (const auto& row : confusion) {
    for (const auto v : row) n += v;
  }
  if (n == 0) return std::nullopt;
  return kappa_from_confusion(confusion);
}

const SegmentCounts& EvalReport::segment(GestureClass klass, double k) const {
  for (const auto& s : segments) {
    if (s.klass == klass && std::abs(s.k - k) < 1e-12) return s;
  }
  throw Error("no segment row for the requested class and threshold");
}

double EvalReport::episode_f1() const noexcept {
  const int denom = 2 * episode_tp + episode_fp + episode_fn;
  return denom == 0 ? 0.0 : 2.0 * episode_tp / denom;
}

double EvalReport::episode_mean_iou() const noexcept {
  return episode_tp == 0 ? 0.0 : episode_iou_sum / episode_tp;
}

EvalReport evaluate(const std::vector<std::uint8_t>& pred_labels, const std::vector<std::uint8_t>& gt_labels,
                    const std::vector<BiteInterval>& pred_bites, const std::vector<BiteInterval>& gt_bites,
                    const std::vector<EatingEpisode>& pred_episodes, const std::vector<EatingEpisode>& gt_episodes,
                    const std::vector<int>& pred_minutes, const std::vector<int>& gt_minutes) {
  EvalReport report;
  if (!gt_labels.empty()) report.confusion = confusion_matrix(pred_labels, gt_labels);
  for (auto& s : report.segments) {
    const auto m = segmental_match(pred_bites, gt_bites, s.klass, s.k);
    s.tp = m.tp;
    s.fp = m.fp;
    s.fn = m.fn;
  }
  const auto episodes = episode_match(pred_episodes, gt_episodes, kEpisodeThreshold);
  report.episode_tp = episodes.tp;
  report.episode_fp = episodes.fp;
  report.episode_fn = episodes.fn;
  for (const auto& m : episodes.matches) report.episode_iou_sum += m.iou;
  report.speed_pairs = matched_speed_pairs(episodes, pred_episodes, gt_episodes);
  const auto domain = matched_episode_minutes(episodes, gt_episodes, gt_minutes.size());
  report.minute_pairs = minute_pairs(pred_minutes, gt_minutes, domain);
  return report;
}

std::string to_text(const EvalReport& r) {
  std::ostringstream out;
  out << "kappa: " << optional_number(r.kappa()) << '\n';
  out << "segmental:\n";
  for (const auto& s : r.segments) {
    out << "  " << to_string(s.klass) << " k=" << format_number(s.k) << "  tp=" << s.tp << " fp=" << s.fp
        << " fn=" << s.fn << " f1=" << format_number(s.f1()) << '\n';
  }
  out << "episodes: tp=" << r.episode_tp << " fp=" << r.episode_fp << " fn=" << r.episode_fn
      << " f1=" << format_number(r.episode_f1()) << " mean_iou=" << format_number(r.episode_mean_iou()) << '\n';
  out << "episode speed: pairs=" << r.speed_pairs.size() << " mape=" << optional_number(r.speed_mape())
      << " pcc=" << optional_number(r.speed_pcc()) << '\n';
  out << "minute speed: pairs=" << r.minute_pairs.size() << " mape=" << optional_number(r.minute_mape())
      << " pcc=" << optional_number(r.minute_pcc()) << '\n';
  out << "seed: " << r.seed << '\n';
  out << "dataset: " << (r.dataset_hash.empty() ? "NA" : r.dataset_hash) << '\n';
  return out.str();
}

std::string to_table(const EvalReport& r) {
  std::ostringstream out;
  out << "class\tk\tmetric\tvalue\n";
  auto row = [&](std::string_view klass, std::string_view k, std::string_view metric, const std::string& value) {
    out << klass << '\t' << k << '\t' << metric << '\t' << value << '\n';
  };
  row("all", "-", "kappa", optional_number(r.kappa()));
  for (const auto& s : r.segments) {
    const auto k = format_number(s.k);
    row(to_string(s.klass), k, "tp", std::to_string(s.tp));
    row(to_string(s.klass), k, "fp", std::to_string(s.fp));
    row(to_string(s.klass), k, "fn", std::to_string(s.fn));
    row(to_string(s.klass), k, "f1", format_number(s.f1()));
  }
  const auto ek = format_number(kEpisodeThreshold);
  row("episode", ek, "tp", std::to_string(r.episode_tp));
  row("episode", ek, "fp", std::to_string(r.episode_fp));
  row("episode", ek, "fn", std::to_string(r.episode_fn));
  row("episode", ek, "f1", format_number(r.episode_f1()));
  row("episode", ek, "mean_iou", format_number(r.episode_mean_iou()));
  row("speed", "-", "mape", optional_number(r.speed_mape()));
  row("speed", "-", "pcc", optional_number(r.speed_pcc()));
  row("minute", "-", "mape", optional_number(r.minute_mape()));
  row("minute", "-", "pcc", optional_number(r.minute_pcc()));
  return out.str();
}

std::string to_json(const EvalReport& r) {
  json j;
  j["kappa"] = optional_json(r.kappa());
  j["confusion"] = r.confusion;
  json segments = json::array();
  for (const auto& s : r.segments) {
    segments.push_back({{"class", std::string(to_string(s.klass))},
                        {"k", s.k},
                        {"tp", s.tp},
                        {"fp", s.fp},
                        {"fn", s.fn},
                        {"f1", s.f1()}});
  }
  j["segments"] = segments;
  j["episodes"] = {{"tp", r.episode_tp},
                   {"fp", r.episode_fp},
                   {"fn", r.episode_fn},
                   {"f1", r.episode_f1()},
                   {"iou_sum", r.episode_iou_sum},
                   {"mean_iou", r.episode_mean_iou()}};
  j["speed"] = {{"mape", optional_json(r.speed_mape())}, {"pcc", optional_json(r.speed_pcc())}, {"pairs", pairs_json(r.speed_pairs)}};
  j["minute"] = {{"mape", optional_json(r.minute_mape())}, {"pcc", optional_json(r.minute_pcc())}, {"pairs", pairs_json(r.minute_pairs)}};
  j["config"] = r.config_json.empty() ? json(nullptr) : json::parse(r.config_json);
  j["seed"] = r.seed;
  j["dataset_hash"] = r.dataset_hash;
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  const auto j = json::parse(text);
  EvalReport r;
  r.confusion = j.at("confusion").get<Confusion>();
  r.segments.clear();
  for (const auto& s : j.at("segments")) {
    const auto name = s.at("class").get<std::string>();
    const auto klass = name == "eating" ? GestureClass::kEating : GestureClass::kDrinking;
    r.segments.push_back({klass, s.at("k").get<double>(), s.at("tp").get<int>(), s.at("fp").get<int>(), s.at("fn").get<int>()});
  }
  const auto& e = j.at("episodes");
  r.episode_tp = e.at("tp").get<int>();
  r.episode_fp = e.at("fp").get<int>();
  r.episode_fn = e.at("fn").get<int>();
  r.episode_iou_sum = e.at("iou_sum").get<double>();
  r.speed_pairs = pairs_from(j.at("speed").at("pairs"));
  r.minute_pairs = pairs_from(j.at("minute").at("pairs"));
  if (!j.at("config").is_null()) r.config_json = j.at("config").dump();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.dataset_hash = j.at("dataset_hash").get<std::string>();
  return r;
}

}  // namespace eatspeed
