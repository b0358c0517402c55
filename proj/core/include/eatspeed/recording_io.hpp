#pragma once

#include "eatspeed/types.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace eatspeed {

// Canonical recording directory:
//   <root>/<participant>/<day>/right.csv     t,ax,ay,az,gx,gy,gz
//   <root>/<participant>/<day>/left.csv      t,ax,ay,az,gx,gy,gz
//   <root>/<participant>/<day>/meta          key=value lines
//   <root>/<participant>/<day>/annotations.csv   t_start,t_end,class,hand   (optional)
//   <root>/<participant>/<day>/episodes.csv      t_start,t_end,bite_count,speed_bpm (optional)

/// Loads and validates one canonical recording directory. Annotation rows are
/// rasterized into per-hand label tracks at the native rate.
Recording load_recording(const std::filesystem::path& dir);

/// Writes `rec` in the canonical layout; numbers use shortest round-trip form
/// so load_recording(save_recording(r)) reproduces r exactly.
void save_recording(const Recording& rec, const std::filesystem::path& dir);

/// Every <participant>/<day> directory under `root` that holds a meta file,
/// sorted by path.
std::vector<std::filesystem::path> list_recordings(const std::filesystem::path& root);

std::map<std::string, std::string> read_meta(const std::filesystem::path& file);

std::vector<BiteInterval> read_bites_csv(const std::filesystem::path& file);
void write_bites_csv(const std::vector<BiteInterval>& bites, const std::filesystem::path& file);

std::vector<EatingEpisode> read_episodes_csv(const std::filesystem::path& file);
void write_episodes_csv(const std::vector<EatingEpisode>& episodes, const std::filesystem::path& file);

void write_minute_track_csv(const std::vector<int>& counts, const std::filesystem::path& file);
std::vector<int> read_minute_track_csv(const std::filesystem::path& file);

/// Import adapter for externally formatted recordings. Accepts per-hand CSV
/// files whose header names the channels with common aliases (accX, acc_x,
/// gyro_x, ...), in any column order, optionally without a time column, and
/// converts them to a validated Recording.
struct ImportOptions {
  std::filesystem::path right_file;
  std::filesystem::path left_file;
  std::filesystem::path annotation_file;  // may be empty
  std::string participant_id;
  std::string day_id;
  double sample_rate_hz = kNativeRateHz;
  double start_time_s = 0.0;
};
Recording import_recording(const ImportOptions& options);

/// Shortest round-trip decimal form.
std::string format_number(double value);

}  // namespace eatspeed
