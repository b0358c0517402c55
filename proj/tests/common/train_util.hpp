#pragma once

#include "eatspeed/model.hpp"
#include "eatspeed/preprocess.hpp"

#include <random>

namespace eatspeed::test {

/// Small network that trains in seconds.
inline ModelConfig small_config() {
  ModelConfig cfg;
  cfg.layers = 4;
  cfg.channels = 16;
  cfg.heads = 2;
  cfg.head_dim = 8;
  cfg.fcn_hidden = 16;
  cfg.window_frames = 128;
  cfg.batch_size = 8;
  cfg.learning_rate = 3e-3;
  cfg.seed = 21;
  return cfg;
}

/// Noise windows with class-specific bumps: eating raises ax, drinking raises gy.
inline WindowBatch toy_windows(int count, Eigen::Index frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::uniform_int_distribution<Eigen::Index> start(0, frames - 40);
  WindowBatch batch;
  batch.window_frames = frames;
  for (int w = 0; w < count; ++w) {
    Window win;
    win.x = FrameMatrix(frames, kNumChannels);
    for (Eigen::Index i = 0; i < win.x.size(); ++i) win.x.data()[i] = noise(rng);
    std::vector<std::uint8_t> y(static_cast<std::size_t>(frames), 0);
    for (int g = 0; g < 2; ++g) {
      const Eigen::Index s = start(rng);
      const auto klass = static_cast<std::uint8_t>(1 + (w + g) % 2);
      for (Eigen::Index t = s; t < s + 24; ++t) {
        if (y[static_cast<std::size_t>(t)] != 0) continue;
        y[static_cast<std::size_t>(t)] = klass;
        win.x(t, klass == 1 ? 0 : 4) += 2.0;
      }
    }
    win.y = std::move(y);
    win.origin = static_cast<Eigen::Index>(w) * frames;
    win.valid_frames = frames;
    batch.windows.push_back(std::move(win));
  }
  return batch;
}

}  // namespace eatspeed::test
