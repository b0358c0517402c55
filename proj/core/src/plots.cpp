#include "eatspeed/plots.hpp"

#include "eatspeed/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace eatspeed {

namespace fs = std::filesystem;

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 50.0;

const char* const kTruthColor = "#1f77b4";
const char* const kEstimateColor = "#ff7f0e";

// Maps data ranges onto the plot area and emits SVG elements.
class Canvas {
 public:
  Canvas(std::string title, double x0, double x1, double y0, double y1)
      : x0_(x0), x1_(x1 > x0 ? x1 : x0 + 1.0), y0_(y0), y1_(y1 > y0 ? y1 : y0 + 1.0) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
         << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    line_raw(kMargin, kHeight - kMargin, kWidth - kMargin, kHeight - kMargin, "black");
    line_raw(kMargin, kMargin, kMargin, kHeight - kMargin, "black");
  }

  [[nodiscard]] double px(double x) const { return kMargin + (x - x0_) / (x1_ - x0_) * (kWidth - 2 * kMargin); }
  [[nodiscard]] double py(double y) const { return kHeight - kMargin - (y - y0_) / (y1_ - y0_) * (kHeight - 2 * kMargin); }

  void labels(const std::string& x, const std::string& y) {
    out_ << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">" << x << "</text>\n"
         << "<text x=\"15\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " << kHeight / 2
         << ")\">" << y << "</text>\n";
  }

  void y_ticks(int count) {
    for (int i = 0; i <= count; ++i) {
      const double v = y0_ + (y1_ - y0_) * i / count;
      text(kMargin - 5, py(v) + 4, fmt(v), "end");
    }
  }

  void x_ticks(int count) {
    for (int i = 0; i <= count; ++i) {
      const double v = x0_ + (x1_ - x0_) * i / count;
      text(px(v), kHeight - kMargin + 15, fmt(v), "middle");
    }
  }

  void line(double xa, double ya, double xb, double yb, const char* color, const char* dash = nullptr) {
    line_raw(px(xa), py(ya), px(xb), py(yb), color, dash);
  }

  void dot(double x, double y, const char* color) {
    out_ << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"4\" fill=\"" << color << "\"/>\n";
  }

  void bar(double x, double width, double height, const char* color) {
    const double left = px(x);
    const double right = px(x + width);
    out_ << "<rect x=\"" << left << "\" y=\"" << py(height) << "\" width=\"" << right - left << "\" height=\""
         << py(y0_) - py(height) << "\" fill=\"" << color << "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& points, const char* color, bool closed = false) {
    out_ << "<" << (closed ? "polygon" : "polyline") << " points=\"";
    for (const auto& [x, y] : points) out_ << px(x) << ',' << py(y) << ' ';
    out_ << "\" fill=\"" << (closed ? color : "none") << "\" fill-opacity=\"0.5\" stroke=\"" << color << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, const char* anchor = "start") {
    out_ << "<text x=\"" << x << "\" y=\"" << y << "\" text-anchor=\"" << anchor << "\">" << s << "</text>\n";
  }

  void legend(const std::vector<std::pair<std::string, const char*>>& entries) {
    double y = kMargin;
    for (const auto& [name, color] : entries) {
      out_ << "<rect x=\"" << kWidth - kMargin - 110 << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\""
           << color << "\"/>\n";
      text(kWidth - kMargin - 95, y, name);
      y += 16;
    }
  }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  static std::string fmt(double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
  }

  void line_raw(double xa, double ya, double xb, double yb, const char* color, const char* dash = nullptr) {
    out_ << "<line x1=\"" << xa << "\" y1=\"" << ya << "\" x2=\"" << xb << "\" y2=\"" << yb << "\" stroke=\"" << color
         << "\"";
    if (dash) out_ << " stroke-dasharray=\"" << dash << "\"";
    out_ << "/>\n";
  }

  double x0_, x1_, y0_, y1_;
  std::ostringstream out_;
};

double max_of(const std::vector<double>& v, double floor) {
  return v.empty() ? floor : std::max(floor, *std::max_element(v.begin(), v.end()));
}

// Gaussian KDE with Silverman's bandwidth, evaluated on `grid`.
std::vector<double> density(const std::vector<double>& values, const std::vector<double>& grid) {
  std::vector<double> out(grid.size(), 0.0);
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / std::max(1.0, n - 1.0));
  const double h = std::max(0.1, 1.06 * sd * std::pow(n, -0.2));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (double v : values) {
      const double z = (grid[i] - v) / h;
      out[i] += std::exp(-0.5 * z * z);
    }
    out[i] /= n * h * std::sqrt(2.0 * std::numbers::pi);
  }
  return out;
}

void write_file(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  out << text;
}

}  // namespace

std::string speed_violin_svg(const std::vector<double>& truth, const std::vector<double>& estimated) {
  const double top = std::ceil(std::max(max_of(truth, 1.0), max_of(estimated, 1.0)) + 1.0);
  Canvas c("Eating speed distribution", 0.0, 2.0, 0.0, top);
  c.labels("", "bites/min");
  c.y_ticks(5);
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(top * i / 100.0);
  const std::vector<std::pair<const std::vector<double>*, const char*>> groups{{&truth, kTruthColor},
                                                                               {&estimated, kEstimateColor}};
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto d = density(*groups[g].first, grid);
    const double peak = std::max(1e-12, *std::max_element(d.begin(), d.end()));
    const double center = 0.5 + static_cast<double>(g);
    std::vector<std::pair<double, double>> outline;
    for (std::size_t i = 0; i < grid.size(); ++i) outline.emplace_back(center + 0.4 * d[i] / peak, grid[i]);
    for (std::size_t i = grid.size(); i-- > 0;) outline.emplace_back(center - 0.4 * d[i] / peak, grid[i]);
    if (!groups[g].first->empty()) c.polyline(outline, groups[g].second, true);
    for (double v : *groups[g].first) c.line(center - 0.05, v, center + 0.05, v, "black");
  }
  c.text(c.px(0.5), kHeight - kMargin + 15, "ground truth", "middle");
  c.text(c.px(1.5), kHeight - kMargin + 15, "estimated", "middle");
  return c.finish();
}

std::string speed_scatter_svg(const std::vector<RecordingResult>& results) {
  std::vector<std::pair<double, double>> tp;
  std::vector<double> fp;
  std::vector<double> fn;
  for (const auto& r : results) {
    const auto& preds = r.analysis.episodes.episodes;
    const auto m = episode_match(preds, r.episodes_gt, 0.5);
    std::vector<bool> pred_used(preds.size(), false);
    std::vector<bool> gt_used(r.episodes_gt.size(), false);
    for (const auto& x : m.matches) {
      tp.emplace_back(r.episodes_gt[x.gt].speed_bites_per_min, preds[x.pred].speed_bites_per_min);
      pred_used[x.pred] = true;
      gt_used[x.gt] = true;
    }
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (!pred_used[i]) fp.push_back(preds[i].speed_bites_per_min);
    }
    for (std::size_t i = 0; i < r.episodes_gt.size(); ++i) {
      if (!gt_used[i]) fn.push_back(r.episodes_gt[i].speed_bites_per_min);
    }
  }
  double top = std::max(max_of(fp, 1.0), max_of(fn, 1.0));
  for (const auto& [x, y] : tp) top = std::max({top, x, y});
  top = std::ceil(top + 1.0);
  Canvas c("Estimated vs ground-truth episode speed", 0.0, top, 0.0, top);
  c.labels("ground truth (bites/min)", "estimated (bites/min)");
  c.x_ticks(5);
  c.y_ticks(5);
  c.line(0.0, 0.0, top, top, "gray", "4 4");
  for (const auto& [x, y] : tp) c.dot(x, y, "black");
  for (double y : fp) c.dot(0.0, y, "#d62728");
  for (double x : fn) c.dot(x, 0.0, "#1f77b4");
  c.legend({{"TP", "black"}, {"FP", "#d62728"}, {"FN", "#1f77b4"}});
  return c.finish();
}

std::string episode_bars_svg(const std::vector<RecordingResult>& results) {
  std::vector<std::pair<double, double>> pairs;
  for (const auto& r : results) {
    const auto m = episode_match(r.analysis.episodes.episodes, r.episodes_gt, 0.5);
    for (const auto& x : m.matches) {
      pairs.emplace_back(r.episodes_gt[x.gt].speed_bites_per_min, r.analysis.episodes.episodes[x.pred].speed_bites_per_min);
    }
  }
  double top = 1.0;
  for (const auto& [t, e] : pairs) top = std::max({top, t, e});
  Canvas c("Per-episode eating speed", 0.0, std::max<double>(1.0, static_cast<double>(pairs.size())), 0.0, std::ceil(top + 1.0));
  c.labels("episode", "bites/min");
  c.y_ticks(5);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    c.bar(static_cast<double>(i) + 0.1, 0.4, pairs[i].first, kTruthColor);
    c.bar(static_cast<double>(i) + 0.5, 0.4, pairs[i].second, kEstimateColor);
  }
  c.legend({{"ground truth", kTruthColor}, {"estimated", kEstimateColor}});
  return c.finish();
}

std::string minute_timeline_svg(const RecordingResult& result) {
  const auto& est = result.analysis.minutes;
  const auto& gt = result.minutes_gt;
  const std::size_t bins = std::max(est.size(), gt.size());
  int top = 1;
  for (int v : est) top = std::max(top, v);
  for (int v : gt) top = std::max(top, v);
  Canvas c("Minute-level eating speed, " + result.participant_id + " " + result.day_id, 0.0,
           std::max<double>(1.0, static_cast<double>(bins)), 0.0, top + 1.0);
  c.labels("minute", "bites");
  c.x_ticks(6);
  c.y_ticks(4);
  const auto steps = [](const std::vector<int>& track) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < track.size(); ++i) {
      pts.emplace_back(static_cast<double>(i), track[i]);
      pts.emplace_back(static_cast<double>(i + 1), track[i]);
    }
    return pts;
  };
  c.polyline(steps(gt), kTruthColor);
  c.polyline(steps(est), kEstimateColor);
  c.legend({{"ground truth", kTruthColor}, {"estimated", kEstimateColor}});
  return c.finish();
}

void write_plots(const CrossvalResult& result, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<double> truth;
  std::vector<double> estimated;
  for (const auto& r : result.recordings) {
    for (const auto& e : r.episodes_gt) truth.push_back(e.speed_bites_per_min);
    for (const auto& e : r.analysis.episodes.episodes) estimated.push_back(e.speed_bites_per_min);
  }
  write_file(dir / "speed_violin.svg", speed_violin_svg(truth, estimated));
  write_file(dir / "speed_scatter.svg", speed_scatter_svg(result.recordings));
  write_file(dir / "episode_bars.svg", episode_bars_svg(result.recordings));
  for (const auto& r : result.recordings) {
    write_file(dir / ("minutes_" + r.participant_id + "_" + r.day_id + ".svg"), minute_timeline_svg(r));
  }
}

}  // namespace eatspeed
