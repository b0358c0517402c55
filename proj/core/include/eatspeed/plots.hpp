#pragma once

#include "eatspeed/pipeline.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace eatspeed {

/// Violin plot of ground-truth and estimated episode speeds.
std::string speed_violin_svg(const std::vector<double>& truth, const std::vector<double>& estimated);

/// Estimated vs ground-truth episode speed. TP at (truth, estimate), FN on
/// the x axis, FP on the y axis.
std::string speed_scatter_svg(const std::vector<RecordingResult>& results);

/// Grouped bars of ground-truth and estimated speed for each TP episode.
std::string episode_bars_svg(const std::vector<RecordingResult>& results);

/// Bites per minute over one recording, estimated against ground truth.
std::string minute_timeline_svg(const RecordingResult& result);

/// Writes all of the above as SVG files into `dir` (one timeline per recording).
void write_plots(const CrossvalResult& result, const std::filesystem::path& dir);

}  // namespace eatspeed
