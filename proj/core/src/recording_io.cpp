#include "eatspeed/recording_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace eatspeed {
namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, kNumChannels> kChannelNames = {"ax", "ay", "az", "gx", "gy", "gz"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t begin = 0;
  while (true) {
    const auto comma = line.find(',', begin);
    fields.push_back(trim(line.substr(begin, comma - begin)));
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  return fields;
}

std::string where(const fs::path& file, std::size_t row) {
  return file.string() + " row " + std::to_string(row);
}

double parse_double(std::string_view text, const fs::path& file, std::size_t row) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw Error(where(file, row) + ": cannot parse number '" + std::string(text) + "'");
  }
  return value;
}

long parse_int(std::string_view text, const fs::path& file, std::size_t row) {
  long value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(where(file, row) + ": cannot parse integer '" + std::string(text) + "'");
  }
  return value;
}

std::ifstream open_in(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open " + file.string());
  return in;
}

std::ofstream open_out(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw Error("cannot write " + file.string());
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Maps header aliases onto canonical channel index, -1 for time, -2 unknown.
int channel_index(std::string_view header) {
  std::string key;
  for (char c : lower(header)) {
    if (c != '_' && c != ' ' && c != '-' && c != '.') key.push_back(c);
  }
  static const std::map<std::string, int> aliases = {
      {"t", -1},        {"time", -1},     {"timestamp", -1}, {"times", -1},
      {"ax", 0},        {"accx", 0},      {"accelx", 0},     {"accelerometerx", 0},
      {"ay", 1},        {"accy", 1},      {"accely", 1},     {"accelerometery", 1},
      {"az", 2},        {"accz", 2},      {"accelz", 2},     {"accelerometerz", 2},
      {"gx", 3},        {"gyrx", 3},      {"gyrox", 3},      {"gyroscopex", 3},
      {"gy", 4},        {"gyry", 4},      {"gyroy", 4},      {"gyroscopey", 4},
      {"gz", 5},        {"gyrz", 5},      {"gyroz", 5},      {"gyroscopez", 5},
  };
  const auto it = aliases.find(key);
  return it == aliases.end() ? -2 : it->second;
}

struct ParsedHand {
  FrameMatrix data;
  std::vector<double> times;
};

// Reads a per-hand channel file. With `canonical` the header must be exactly
// t,ax,ay,az,gx,gy,gz; otherwise aliases and arbitrary column order are accepted.
ParsedHand read_hand_csv(const fs::path& file, bool canonical) {
  auto in = open_in(file);
  std::string line;
  if (!std::getline(in, line)) throw Error(file.string() + ": empty file");
  const auto header = split_csv(line);
  std::array<int, kNumChannels> column_of{};
  column_of.fill(-1);
  int time_column = -1;
  if (canonical) {
    if (header.size() != 7 || header[0] != "t") {
      throw Error(file.string() + ": header must be t,ax,ay,az,gx,gy,gz");
    }
    time_column = 0;
    for (int c = 0; c < kNumChannels; ++c) {
      if (header[c + 1] != kChannelNames[c]) throw Error(file.string() + ": header must be t,ax,ay,az,gx,gy,gz");
      column_of[c] = c + 1;
    }
  } else {
    for (std::size_t i = 0; i < header.size(); ++i) {
      const int idx = channel_index(header[i]);
      if (idx == -1) time_column = static_cast<int>(i);
      if (idx >= 0) column_of[idx] = static_cast<int>(i);
    }
    for (int c = 0; c < kNumChannels; ++c) {
      if (column_of[c] < 0) throw Error(file.string() + ": no column for channel " + std::string(kChannelNames[c]));
    }
  }

  std::vector<double> values;
  ParsedHand parsed;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw Error(where(file, row) + ": channel-length mismatch, expected " + std::to_string(header.size()) +
                  " fields, got " + std::to_string(fields.size()));
    }
    for (int c = 0; c < kNumChannels; ++c) values.push_back(parse_double(fields[column_of[c]], file, row));
    if (time_column >= 0) parsed.times.push_back(parse_double(fields[time_column], file, row));
  }
  const auto frames = static_cast<Eigen::Index>(values.size() / kNumChannels);
  if (frames == 0) throw Error(file.string() + ": no frames");
  parsed.data = Eigen::Map<const FrameMatrix>(values.data(), frames, kNumChannels);
  return parsed;
}

FrameSeries make_series(Hand hand, ParsedHand parsed, double rate, std::optional<double> start_override,
                        const fs::path& file) {
  double start = start_override.value_or(parsed.times.empty() ? 0.0 : parsed.times.front());
  if (!parsed.times.empty()) {
    const double tolerance = 0.5 / rate;
    for (std::size_t i = 0; i < parsed.times.size(); ++i) {
      if (std::abs(parsed.times[i] - (start + static_cast<double>(i) / rate)) > tolerance) {
        throw Error(where(file, i + 2) + ": timestamp is not on the uniform " + format_number(rate) + " Hz grid");
      }
    }
  }
  return FrameSeries(hand, rate, start, std::move(parsed.data));
}

GestureClass parse_class(std::string_view text, const fs::path& file, std::size_t row) {
  const auto lowered = lower(text);
  if (lowered == "1" || lowered == "eating") return GestureClass::kEating;
  if (lowered == "2" || lowered == "drinking") return GestureClass::kDrinking;
  throw Error(where(file, row) + ": class must be 1 (eating) or 2 (drinking), got '" + std::string(text) + "'");
}

void attach_labels(Recording& rec) {
  if (!rec.bites_gt) return;
  std::vector<BiteInterval> right;
  std::vector<BiteInterval> left;
  for (const auto& bite : *rec.bites_gt) {
    (bite.hand == Hand::kLeft ? left : right).push_back(bite);
  }
  rec.labels_right = labels_from_intervals(right, static_cast<std::size_t>(rec.right.size()),
                                           rec.right.sample_rate_hz(), rec.right.start_time_s());
  rec.labels_left = labels_from_intervals(left, static_cast<std::size_t>(rec.left.size()),
                                          rec.left.sample_rate_hz(), rec.left.start_time_s());
}

void write_hand_csv(const FrameSeries& series, const fs::path& file) {
  auto out = open_out(file);
  out << "t,ax,ay,az,gx,gy,gz\n";
  std::string line;
  for (Eigen::Index i = 0; i < series.size(); ++i) {
    line = format_number(series.time_of(i));
    for (int c = 0; c < kNumChannels; ++c) {
      line += ',';
      line += format_number(series.data()(i, c));
    }
    line += '\n';
    out << line;
  }
}

}  // namespace

std::string format_number(double value) {
  std::array<char, 64> buffer{};
  const auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), ptr);
}

std::map<std::string, std::string> read_meta(const fs::path& file) {
  auto in = open_in(file);
  std::map<std::string, std::string> meta;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw Error(where(file, row) + ": expected key=value");
    meta[std::string(trim(text.substr(0, eq)))] = std::string(trim(text.substr(eq + 1)));
  }
  return meta;
}

std::vector<BiteInterval> read_bites_csv(const fs::path& file) {
  auto in = open_in(file);
  std::string line;
  if (!std::getline(in, line) || split_csv(line) != std::vector<std::string_view>{"t_start", "t_end", "class", "hand"}) {
    throw Error(file.string() + ": header must be t_start,t_end,class,hand");
  }
  std::vector<BiteInterval> bites;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw Error(where(file, row) + ": expected 4 fields");
    BiteInterval bite{parse_double(f[0], file, row), parse_double(f[1], file, row), parse_class(f[2], file, row),
                      Hand::kRight};
    try {
      bite.hand = hand_from_string(f[3]);
      validate(bite);
    } catch (const Error& e) {
      throw Error(where(file, row) + ": " + e.what());
    }
    bites.push_back(bite);
  }
  std::stable_sort(bites.begin(), bites.end(), [](const auto& a, const auto& b) { return a.t_l < b.t_l; });
  return bites;
}

void write_bites_csv(const std::vector<BiteInterval>& bites, const fs::path& file) {
  auto out = open_out(file);
  out << "t_start,t_end,class,hand\n";
  for (const auto& b : bites) {
    out << format_number(b.t_l) << ',' << format_number(b.t_r) << ',' << int(b.klass) << ',' << to_string(b.hand)
        << '\n';
  }
}

std::vector<EatingEpisode> read_episodes_csv(const fs::path& file) {
  auto in = open_in(file);
  std::string line;
  if (!std::getline(in, line) ||
      split_csv(line) != std::vector<std::string_view>{"t_start", "t_end", "bite_count", "speed_bpm"}) {
    throw Error(file.string() + ": header must be t_start,t_end,bite_count,speed_bpm");
  }
  std::vector<EatingEpisode> episodes;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw Error(where(file, row) + ": expected 4 fields");
    EatingEpisode ep{parse_double(f[0], file, row), parse_double(f[1], file, row),
                     static_cast<int>(parse_int(f[2], file, row)), parse_double(f[3], file, row)};
    if (!(ep.t_l < ep.t_r) || ep.bite_count < 0 || ep.speed_bites_per_min < 0) {
      throw Error(where(file, row) + ": invalid episode");
    }
    episodes.push_back(ep);
  }
  return episodes;
}

void write_episodes_csv(const std::vector<EatingEpisode>& episodes, const fs::path& file) {
  auto out = open_out(file);
  out << "t_start,t_end,bite_count,speed_bpm\n";
  for (const auto& e : episodes) {
    out << format_number(e.t_l) << ',' << format_number(e.t_r) << ',' << e.bite_count << ','
        << format_number(e.speed_bites_per_min) << '\n';
  }
}

void write_minute_track_csv(const std::vector<int>& counts, const fs::path& file) {
  auto out = open_out(file);
  out << "minute_index,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i) out << i << ',' << counts[i] << '\n';
}

std::vector<int> read_minute_track_csv(const fs::path& file) {
  auto in = open_in(file);
  std::string line;
  std::getline(in, line);
  std::vector<int> counts;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 2 || parse_int(f[0], file, row) != static_cast<long>(counts.size())) {
      throw Error(where(file, row) + ": expected consecutive minute_index,count");
    }
    counts.push_back(static_cast<int>(parse_int(f[1], file, row)));
  }
  return counts;
}

Recording load_recording(const fs::path& dir) {
  const auto meta = read_meta(dir / "meta");
  const auto get = [&](const std::string& key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end()) throw Error((dir / "meta").string() + ": missing key " + key);
    return it->second;
  };
  const double rate = parse_double(get("sample_rate_hz"), dir / "meta", 0);
  for (const char* hand : {"right.csv", "left.csv"}) {
    if (!fs::exists(dir / hand)) throw Error(dir.string() + ": missing hand file " + hand);
  }
  auto right = make_series(Hand::kRight, read_hand_csv(dir / "right.csv", true), rate, std::nullopt, dir / "right.csv");
  auto left = make_series(Hand::kLeft, read_hand_csv(dir / "left.csv", true), rate, std::nullopt, dir / "left.csv");
  Recording rec{get("participant_id"), get("day_id"), std::move(right), std::move(left), {}, {}, {}, {}, {}};
  if (const auto it = meta.find("dominant_hand"); it != meta.end()) rec.dominant_hand = hand_from_string(it->second);
  if (fs::exists(dir / "annotations.csv")) rec.bites_gt = read_bites_csv(dir / "annotations.csv");
  if (fs::exists(dir / "episodes.csv")) rec.episodes_gt = read_episodes_csv(dir / "episodes.csv");
  validate(rec);
  attach_labels(rec);
  return rec;
}

void save_recording(const Recording& rec, const fs::path& dir) {
  validate(rec);
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "meta");
    out << "participant_id=" << rec.participant_id << '\n'
        << "day_id=" << rec.day_id << '\n'
        << "sample_rate_hz=" << format_number(rec.right.sample_rate_hz()) << '\n'
        << "start_time_s=" << format_number(rec.right.start_time_s()) << '\n';
    if (rec.dominant_hand) out << "dominant_hand=" << to_string(*rec.dominant_hand) << '\n';
  }
  write_hand_csv(rec.right, dir / "right.csv");
  write_hand_csv(rec.left, dir / "left.csv");
  if (rec.bites_gt) write_bites_csv(*rec.bites_gt, dir / "annotations.csv");
  if (rec.episodes_gt) write_episodes_csv(*rec.episodes_gt, dir / "episodes.csv");
}

std::vector<fs::path> list_recordings(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(root.string() + " is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& participant : fs::directory_iterator(root)) {
    if (!participant.is_directory()) continue;
    for (const auto& day : fs::directory_iterator(participant.path())) {
      if (day.is_directory() && fs::exists(day.path() / "meta")) dirs.push_back(day.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

Recording import_recording(const ImportOptions& options) {
  auto right = make_series(Hand::kRight, read_hand_csv(options.right_file, false), options.sample_rate_hz,
                           options.start_time_s, options.right_file);
  auto left = make_series(Hand::kLeft, read_hand_csv(options.left_file, false), options.sample_rate_hz,
                          options.start_time_s, options.left_file);
  Recording rec{options.participant_id, options.day_id, std::move(right), std::move(left), {}, {}, {}, {}, {}};
  if (!options.annotation_file.empty()) rec.bites_gt = read_bites_csv(options.annotation_file);
  validate(rec);
  attach_labels(rec);
  return rec;
}

}  // namespace eatspeed
