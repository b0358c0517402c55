#pragma once

#include "eatspeed/types.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace eatspeed::test {

/// Fresh, empty directory below the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("eatspeed_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline FrameSeries random_series(Hand hand, Eigen::Index frames, double rate, std::mt19937_64& rng,
                                 double start = 0.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  FrameMatrix data(frames, kNumChannels);
  for (Eigen::Index i = 0; i < frames; ++i) {
    for (int c = 0; c < kNumChannels; ++c) data(i, c) = n(rng);
  }
  return FrameSeries(hand, rate, start, std::move(data));
}

}  // namespace eatspeed::test
