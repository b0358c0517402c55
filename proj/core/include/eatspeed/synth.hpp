#pragma once

#include "eatspeed/bites.hpp"
#include "eatspeed/episodes.hpp"
#include "eatspeed/types.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace eatspeed {

struct EpisodeSpec {
  double start_s = 0.0;
  double duration_s = 600.0;
  /// All bites in the episode (eating plus drinking) per minute.
  double speed_bpm = 3.0;
  /// Drinking bites placed at interior slots of the episode.
  int drinks = 0;
  std::string style = "regular";
};

/// A sparse bite train that stays below the clustering density.
struct SnackSpec {
  double start_s = 0.0;
  int bites = 3;
  double spacing_s = 45.0;
};

/// A drinking gesture outside any episode, performed with the dominant hand.
struct DrinkSpec {
  double start_s = 0.0;
};

struct SynthSpec {
  std::string participant_id = "S01";
  std::string day_id = "D1";
  double day_duration_s = 3600.0;
  std::vector<EpisodeSpec> episodes;
  std::vector<SnackSpec> snacks;
  std::vector<DrinkSpec> drinks;
  /// Standard deviation of the background noise, relative units.
  double noise_level = 1.0;
  /// Non-intake arm movements per minute and hand.
  double distractor_rate_per_min = 0.6;
  /// Probability that a bite is performed with the left hand.
  double left_hand_fraction = 0.0;
  double eating_min_s = 1.5;
  double eating_max_s = 3.0;
  double drinking_min_s = 2.5;
  double drinking_max_s = 4.0;
  double amplitude_jitter = 0.2;
  Hand dominant_hand = Hand::kRight;
  std::uint64_t seed = 1;
};

/// Throws when episodes overlap or sit closer than 4 min, an episode implies
/// fewer than 5 eating bites, a snack is dense enough to form a cluster or
/// close enough (< 4 min) to an episode or another snack, a time is off the
/// 1/16 s grid, or anything falls outside the day.
void validate(const SynthSpec& spec);

/// Sensor ranges; generated signals saturate here like a real IMU would.
inline constexpr double kSynthMaxAccelG = 8.0;
inline constexpr double kSynthMaxGyroDps = 1000.0;

struct SynthDay {
  Recording recording;   // 64 Hz, labels and ground truth attached
  BiteSet bites;         // annotation-sourced ground truth
  EpisodeSet episodes;   // with bite counts and speeds
};

/// Deterministic for a given spec (including its seed). Bite boundaries lie
/// on the 1/16 s grid so the 16 Hz label tracks reproduce them exactly.
SynthDay generate(const SynthSpec& spec);

/// 14 days (7 participants x 2 days) spanning 2 to 6 bites/min, 2 to 8 h,
/// bilateral and unilateral eating, with and without snacks and drinks.
std::vector<SynthSpec> default_benchmark_suite(std::uint64_t seed = 2024);

/// A day whose other:eating:drinking labelled durations approximate the given
/// ratio.
SynthSpec class_ratio_spec(double other, double eating, double drinking, std::uint64_t seed = 7);

/// Total labelled seconds of each class over both hands.
std::array<double, kNumClasses> class_durations(const SynthDay& day);

}  // namespace eatspeed
