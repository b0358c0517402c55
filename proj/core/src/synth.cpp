#include "eatspeed/synth.hpp"

#include "eatspeed/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace eatspeed {

namespace {

constexpr double kGrid = 1.0 / kProcessedRateHz;
constexpr double kSeparationS = 240.0;
constexpr double kMinBiteGapS = 1.5;
constexpr double kPi = std::numbers::pi;
constexpr double kMaxJitter = 0.2;  // slot fraction, irregular style

bool on_grid(double t) { return std::abs(t / kGrid - std::round(t / kGrid)) < 1e-9; }
double quantize(double t) { return std::round(t / kGrid) * kGrid; }

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

int eating_bites(const EpisodeSpec& ep) { return static_cast<int>(std::lround(ep.speed_bpm * ep.duration_s / 60.0)); }

double snack_end(const SnackSpec& s) { return s.start_s + (s.bites - 1) * s.spacing_s + 4.0; }

double gap(double a0, double a1, double b0, double b1) { return std::max(b0 - a1, a0 - b1); }

double draw_duration(std::mt19937_64& rng, double lo, double hi) {
  return std::max(kGrid, quantize(std::uniform_real_distribution<double>(lo, hi)(rng)));
}

Hand draw_hand(std::mt19937_64& rng, double left_fraction) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < left_fraction ? Hand::kLeft : Hand::kRight;
}

// Bites of one episode: the first starts at the episode start, the last ends at
// its end, the rest are spread over evenly spaced jittered slots.
void place_episode(const EpisodeSpec& ep, const SynthSpec& spec, std::mt19937_64& rng,
                   std::vector<BiteInterval>& out) {
  const int n_eat = eating_bites(ep);
  const int n = n_eat + ep.drinks;
  std::vector<bool> drink(static_cast<std::size_t>(n), false);
  for (int j = 0; j < ep.drinks; ++j) {
    const auto slot = static_cast<std::size_t>(std::lround(static_cast<double>(j + 1) * (n - 1) / (ep.drinks + 1)));
    drink[std::clamp<std::size_t>(slot, 1, static_cast<std::size_t>(n - 2))] = true;
  }
  const double slot = ep.duration_s / n;
  const bool irregular = ep.style == "irregular";
  std::uniform_real_distribution<double> jitter(irregular ? -kMaxJitter : -0.1, irregular ? kMaxJitter : 0.1);
  const double end = ep.start_s + ep.duration_s;
  for (int i = 0; i < n; ++i) {
    BiteInterval b;
    b.klass = drink[static_cast<std::size_t>(i)] ? GestureClass::kDrinking : GestureClass::kEating;
    b.hand = draw_hand(rng, spec.left_hand_fraction);
    const double d = b.klass == GestureClass::kEating ? draw_duration(rng, spec.eating_min_s, spec.eating_max_s)
                                                      : draw_duration(rng, spec.drinking_min_s, spec.drinking_max_s);
    if (i == 0) {
      b.t_l = ep.start_s;
    } else if (i == n - 1) {
      b.t_l = end - d;
    } else {
      b.t_l = quantize(ep.start_s + (i + 0.5 + jitter(rng)) * slot - 0.5 * d);
    }
    b.t_r = b.t_l + d;
    out.push_back(b);
  }
}

// Signals are built in the right-hand frame; the left hand is mirrored at the end.
class SignalBuilder {
 public:
  SignalBuilder(std::size_t frames, const SynthSpec& spec, std::uint64_t seed)
      : data_(static_cast<Eigen::Index>(frames), kNumChannels), spec_(spec), rng_(seed) {}

  void background() {
    const Eigen::Index n = data_.rows();
    // Colored noise: AR(1) with a stationary std of noise_level * base scale.
    const double phi = 0.9;
    const std::array<double, kNumChannels> scale{0.03, 0.03, 0.03, 4.0, 4.0, 4.0};
    std::normal_distribution<double> unit(0.0, 1.0);
    std::array<double, kNumChannels> state{};
    // Posture drift: cosine interpolation between random gravity directions.
    const Eigen::Index segment = static_cast<Eigen::Index>(60.0 * kNativeRateHz);
    std::uniform_real_distribution<double> tilt(-0.25, 0.25);
    std::array<double, 3> from{tilt(rng_), tilt(rng_), 0.0};
    std::array<double, 3> to{tilt(rng_), tilt(rng_), 0.0};
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i > 0 && i % segment == 0) {
        from = to;
        to = {tilt(rng_), tilt(rng_), 0.0};
      }
      const double u = static_cast<double>(i % segment) / static_cast<double>(segment);
      const double w = 0.5 - 0.5 * std::cos(kPi * u);
      const double gx = from[0] + w * (to[0] - from[0]);
      const double gy = from[1] + w * (to[1] - from[1]);
      const double gz = std::sqrt(std::max(0.0, 1.0 - gx * gx - gy * gy));
      const std::array<double, 3> gravity{gx, gy, gz};
      for (int c = 0; c < kNumChannels; ++c) {
        const double sd = spec_.noise_level * scale[static_cast<std::size_t>(c)];
        auto& s = state[static_cast<std::size_t>(c)];
        s = phi * s + std::sqrt(1.0 - phi * phi) * sd * unit(rng_);
        data_(i, c) = s + (c < 3 ? gravity[static_cast<std::size_t>(c)] : 0.0);
      }
    }
  }

  void distractors(const std::vector<BiteInterval>& own_bites) {
    if (spec_.distractor_rate_per_min <= 0.0) return;
    const double duration = static_cast<double>(data_.rows()) / kNativeRateHz;
    std::exponential_distribution<double> wait(spec_.distractor_rate_per_min / 60.0);
    std::uniform_real_distribution<double> length(1.0, 3.0);
    std::uniform_int_distribution<int> kind(0, 2);
    std::uniform_real_distribution<double> amp(0.7, 1.3);
    for (double t = wait(rng_); t < duration - 4.0; t += wait(rng_)) {
      const double d = length(rng_);
      const int k = kind(rng_);
      const double a = amp(rng_);
      const bool clash = std::any_of(own_bites.begin(), own_bites.end(), [&](const BiteInterval& b) {
        return t < b.t_r + 2.0 && t + d > b.t_l - 2.0;
      });
      if (clash) continue;
      pulse(t, d, [&](double u, Eigen::Ref<Eigen::RowVectorXd> row) {
        const double env = std::sin(kPi * u);
        switch (k) {
          case 0: row(5) += a * 60.0 * env * std::sin(2.0 * kPi * 2.0 * u * d); break;
          case 1: row(4) += a * 50.0 * env * std::sin(2.0 * kPi * 1.5 * u * d); break;
          default: row(1) += a * 0.4 * env; break;
        }
      });
    }
  }

  void gesture(const BiteInterval& bite) {
    std::uniform_real_distribution<double> jitter(1.0 - spec_.amplitude_jitter, 1.0 + spec_.amplitude_jitter);
    const double a = jitter(rng_);
    const double b = jitter(rng_);
    if (bite.klass == GestureClass::kEating) {
      // Wrist lifts toward the mouth: half-sine roll rate with a correlated tilt.
      pulse(bite.t_l, bite.duration(), [&](double u, Eigen::Ref<Eigen::RowVectorXd> row) {
        const double env = std::sin(kPi * u);
        row(3) += a * 150.0 * env;
        row(0) += b * 0.6 * env;
        row(2) -= b * 0.3 * env;
      });
    } else {
      // Cup tilt: pitch-rate swing in and out with a held accelerometer plateau.
      pulse(bite.t_l, bite.duration(), [&](double u, Eigen::Ref<Eigen::RowVectorXd> row) {
        const double plateau = std::clamp(4.0 * std::min(u, 1.0 - u), 0.0, 1.0);
        row(4) += a * 120.0 * std::sin(2.0 * kPi * u);
        row(1) += b * 0.7 * plateau;
        row(5) -= a * 40.0 * std::sin(kPi * u);
      });
    }
  }

  FrameMatrix finish(bool mirror) {
    if (mirror) {
      data_.col(0) *= -1.0;
      data_.col(4) *= -1.0;
      data_.col(5) *= -1.0;
    }
    data_.leftCols(3) = data_.leftCols(3).cwiseMax(-kSynthMaxAccelG).cwiseMin(kSynthMaxAccelG);
    data_.rightCols(3) = data_.rightCols(3).cwiseMax(-kSynthMaxGyroDps).cwiseMin(kSynthMaxGyroDps);
    return std::move(data_);
  }

 private:
  template <typename F>
  void pulse(double t0, double d, F&& shape) {
    const auto begin = static_cast<Eigen::Index>(std::ceil(t0 * kNativeRateHz - 1e-9));
    const auto end = std::min<Eigen::Index>(data_.rows(), static_cast<Eigen::Index>(std::ceil((t0 + d) * kNativeRateHz - 1e-9)));
    Eigen::RowVectorXd row(kNumChannels);
    for (Eigen::Index i = std::max<Eigen::Index>(0, begin); i < end; ++i) {
      const double u = (static_cast<double>(i) / kNativeRateHz - t0) / d;
      row = data_.row(i);
      shape(u, row);
      data_.row(i) = row;
    }
  }

  FrameMatrix data_;
  const SynthSpec& spec_;
  std::mt19937_64 rng_;
};

}  // namespace

void validate(const SynthSpec& spec) {
  if (!(spec.day_duration_s > 0.0) || !on_grid(spec.day_duration_s)) throw Error("day duration must be a positive multiple of 1/16 s");
  if (spec.noise_level < 0.0 || spec.distractor_rate_per_min < 0.0) throw Error("noise parameters must be non-negative");
  if (spec.left_hand_fraction < 0.0 || spec.left_hand_fraction > 1.0) throw Error("left-hand fraction must lie in [0, 1]");
  if (spec.amplitude_jitter < 0.0 || spec.amplitude_jitter >= 1.0) throw Error("amplitude jitter must lie in [0, 1)");
  if (!(spec.eating_min_s >= 1.5 && spec.eating_min_s <= spec.eating_max_s && spec.eating_max_s <= 4.0) ||
      !(spec.drinking_min_s >= 1.5 && spec.drinking_min_s <= spec.drinking_max_s && spec.drinking_max_s <= 4.0)) {
    throw Error("gesture durations must lie within 1.5-4 s");
  }
  if (spec.dominant_hand == Hand::kMerged) throw Error("dominant hand must be left or right");

  auto episodes = spec.episodes;
  std::sort(episodes.begin(), episodes.end(), [](const auto& a, const auto& b) { return a.start_s < b.start_s; });
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const auto& ep = episodes[i];
    if (!on_grid(ep.start_s) || !on_grid(ep.duration_s)) throw Error("episode bounds must lie on the 1/16 s grid");
    if (ep.duration_s < kEpisodeMinDurationS) throw Error("episode shorter than 3 min");
    if (ep.start_s < 0.0 || ep.start_s + ep.duration_s > spec.day_duration_s) throw Error("episode outside the day");
    if (eating_bites(ep) < kEpisodeMinSamples) throw Error("episode implies fewer than 5 eating bites");
    if (ep.drinks < 0 || ep.drinks > eating_bites(ep) / 4) throw Error("too many drinks in episode");
    if (ep.style != "regular" && ep.style != "irregular") throw Error("unknown eating style: " + ep.style);
    const double slot = ep.duration_s / (eating_bites(ep) + ep.drinks);
    if (slot * (1.0 - 2.0 * kMaxJitter) < std::max(spec.eating_max_s, spec.drinking_max_s) + kMinBiteGapS) throw Error("episode speed too high for the gesture durations");
    if (i > 0) {
      const auto& prev = episodes[i - 1];
      if (ep.start_s < prev.start_s + prev.duration_s) throw Error("overlapping episode specs");
      if (ep.start_s - (prev.start_s + prev.duration_s) < kSeparationS) throw Error("episodes closer than 4 min");
    }
  }
  for (std::size_t i = 0; i < spec.snacks.size(); ++i) {
    const auto& s = spec.snacks[i];
    if (!on_grid(s.start_s) || !on_grid(s.spacing_s)) throw Error("snack times must lie on the 1/16 s grid");
    if (s.bites < 1 || s.bites >= kEpisodeMinSamples) throw Error("snack must have 1-4 bites");
    if (s.spacing_s < spec.eating_max_s + kMinBiteGapS + 1.0) throw Error("snack bites too close");
    if (s.start_s < 0.0 || snack_end(s) > spec.day_duration_s) throw Error("snack outside the day");
    for (const auto& ep : episodes) {
      if (gap(s.start_s, snack_end(s), ep.start_s, ep.start_s + ep.duration_s) < kSeparationS) {
        throw Error("snack within 4 min of an episode");
      }
    }
    for (std::size_t j = 0; j < i; ++j) {
      const auto& o = spec.snacks[j];
      if (gap(s.start_s, snack_end(s), o.start_s, snack_end(o)) < kSeparationS) throw Error("snacks within 4 min of each other");
    }
  }
  for (const auto& d : spec.drinks) {
    if (!on_grid(d.start_s)) throw Error("drink time must lie on the 1/16 s grid");
    if (d.start_s < 0.0 || d.start_s + spec.drinking_max_s > spec.day_duration_s) throw Error("drink outside the day");
    for (const auto& ep : episodes) {
      if (gap(d.start_s, d.start_s + spec.drinking_max_s, ep.start_s, ep.start_s + ep.duration_s) < 10.0) {
        throw Error("standalone drink inside or next to an episode");
      }
    }
  }
}

SynthDay generate(const SynthSpec& spec) {
  validate(spec);
  std::mt19937_64 layout(splitmix(spec.seed));

  auto episodes = spec.episodes;
  std::sort(episodes.begin(), episodes.end(), [](const auto& a, const auto& b) { return a.start_s < b.start_s; });
  std::vector<BiteInterval> bites;
  for (const auto& ep : episodes) place_episode(ep, spec, layout, bites);
  const Hand dominant = spec.dominant_hand;
  for (const auto& s : spec.snacks) {
    for (int i = 0; i < s.bites; ++i) {
      const double d = draw_duration(layout, spec.eating_min_s, spec.eating_max_s);
      const double t = s.start_s + i * s.spacing_s;
      bites.push_back({t, t + d, GestureClass::kEating, draw_hand(layout, spec.left_hand_fraction)});
    }
  }
  for (const auto& dr : spec.drinks) {
    const double d = draw_duration(layout, spec.drinking_min_s, spec.drinking_max_s);
    bites.push_back({dr.start_s, dr.start_s + d, GestureClass::kDrinking, dominant});
  }
  std::sort(bites.begin(), bites.end(), [](const auto& a, const auto& b) { return a.t_l < b.t_l; });
  for (std::size_t i = 1; i < bites.size(); ++i) {
    if (bites[i].t_l - bites[i - 1].t_r < kMinBiteGapS) throw Error("generated bites closer than 1.5 s; spread the spec events apart");
  }

  const auto frames = static_cast<std::size_t>(std::llround(spec.day_duration_s * kNativeRateHz));
  std::vector<BiteInterval> right_bites;
  std::vector<BiteInterval> left_bites;
  for (const auto& b : bites) (b.hand == Hand::kLeft ? left_bites : right_bites).push_back(b);

  auto build = [&](const std::vector<BiteInterval>& own, std::uint64_t stream, bool mirror) {
    SignalBuilder builder(frames, spec, splitmix(spec.seed ^ stream));
    builder.background();
    builder.distractors(own);
    for (const auto& b : own) builder.gesture(b);
    return builder.finish(mirror);
  };

  SynthDay day{Recording{spec.participant_id, spec.day_id,
                         FrameSeries(Hand::kRight, kNativeRateHz, 0.0, build(right_bites, 0x5249474854ULL, false)),
                         FrameSeries(Hand::kLeft, kNativeRateHz, 0.0, build(left_bites, 0x4c454654ULL, true)),
                         labels_from_intervals(right_bites, frames, kNativeRateHz),
                         labels_from_intervals(left_bites, frames, kNativeRateHz), bites, std::nullopt, dominant},
               BiteSet{bites, BiteSource::kAnnotation}, EpisodeSet{}};

  for (const auto& ep : episodes) {
    const int count = eating_bites(ep) + ep.drinks;
    day.episodes.episodes.push_back({ep.start_s, ep.start_s + ep.duration_s, count, count / (ep.duration_s / 60.0)});
  }
  day.recording.episodes_gt = day.episodes.episodes;
  validate(day.recording);
  return day;
}

std::vector<SynthSpec> default_benchmark_suite(std::uint64_t seed) {
  const std::array<double, 14> hours{2.0, 3.0, 2.5, 4.0, 2.0, 3.5, 8.0, 2.0, 3.0, 2.5, 6.0, 2.0, 3.0, 5.0};
  const std::array<double, 9> speeds{2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0};
  std::vector<SynthSpec> suite;
  std::size_t speed_index = 0;
  for (std::size_t i = 0; i < hours.size(); ++i) {
    const std::size_t participant = i / 2;
    SynthSpec spec;
    spec.participant_id = "P0" + std::to_string(participant + 1);
    spec.day_id = "D" + std::to_string(i % 2 + 1);
    spec.day_duration_s = hours[i] * 3600.0;
    spec.seed = splitmix(seed + i);
    // P03 is left-handed; P02, P05 and P07 eat with both hands.
    spec.dominant_hand = participant == 2 ? Hand::kLeft : Hand::kRight;
    spec.left_hand_fraction = participant == 2 ? 1.0 : (participant % 3 == 1 ? 0.35 : 0.0);
    spec.noise_level = 0.8 + 0.1 * static_cast<double>(participant % 4);

    std::mt19937_64 rng(spec.seed);
    const int count = hours[i] <= 2.5 ? 1 : (hours[i] <= 4.0 ? 2 : 3);
    const double block = spec.day_duration_s / count;
    const bool snacks = i % 3 != 2;
    const bool drinks = i % 4 != 3;
    for (int e = 0; e < count; ++e) {
      EpisodeSpec ep;
      ep.speed_bpm = speeds[speed_index++ % speeds.size()];
      ep.duration_s = 60.0 * std::uniform_int_distribution<int>(8, 22)(rng);
      // Episodes sit in the second half of their block; snacks and drinks use the first.
      const double room = block / 2.0 - ep.duration_s - kSeparationS;
      ep.start_s = std::floor(e * block + block / 2.0 + std::uniform_real_distribution<double>(0.0, std::max(0.0, room))(rng));
      ep.drinks = drinks ? std::uniform_int_distribution<int>(0, 2)(rng) : 0;
      ep.style = (i + static_cast<std::size_t>(e)) % 2 == 0 ? "regular" : "irregular";
      spec.episodes.push_back(ep);
      const double first_half = e * block;
      if (snacks) {
        SnackSpec s;
        s.bites = std::uniform_int_distribution<int>(2, 4)(rng);
        s.spacing_s = std::uniform_int_distribution<int>(40, 70)(rng);
        s.start_s = std::floor(first_half + 600.0);
        spec.snacks.push_back(s);
      }
      if (drinks) spec.drinks.push_back({std::floor(first_half + 1800.0)});
    }
    validate(spec);
    suite.push_back(std::move(spec));
  }
  return suite;
}

SynthSpec class_ratio_spec(double other, double eating, double drinking, std::uint64_t seed) {
  if (!(other > 0.0 && eating > 0.0 && drinking > 0.0)) throw Error("class ratio parts must be positive");
  SynthSpec spec;
  spec.participant_id = "R01";
  spec.day_id = "D1";
  spec.day_duration_s = 8.0 * 3600.0;
  spec.seed = seed;
  // Fixed gesture lengths make the labelled durations a function of counts alone.
  spec.eating_min_s = spec.eating_max_s = 2.5;
  spec.drinking_min_s = spec.drinking_max_s = 4.0;
  const double total = 2.0 * spec.day_duration_s;  // both hands
  const double sum = other + eating + drinking;
  const int eat_bites = static_cast<int>(std::lround(total * eating / sum / spec.eating_max_s));
  const int drink_count = static_cast<int>(std::lround(total * drinking / sum / spec.drinking_max_s));
  if (eat_bites < kEpisodeMinSamples) throw Error("class ratio leaves too few eating bites");

  const int episodes = std::clamp(eat_bites / 60, 1, 6);
  const double block = spec.day_duration_s / episodes;
  int eat_left = eat_bites;
  int drink_left = drink_count;
  for (int e = 0; e < episodes; ++e) {
    const int n = eat_left / (episodes - e);
    eat_left -= n;
    EpisodeSpec ep;
    ep.drinks = std::min(drink_left, n / 4);
    drink_left -= ep.drinks;
    ep.duration_s = std::max(kEpisodeMinDurationS, std::ceil(15.0 * (n + ep.drinks) / 60.0) * 60.0);
    if (ep.duration_s + kSeparationS > block / 2.0) throw Error("class ratio needs more eating than fits the day");
    ep.speed_bpm = n * 60.0 / ep.duration_s;
    ep.start_s = std::floor(e * block + block / 2.0);
    spec.episodes.push_back(ep);
  }
  // Remaining drinks spread over the first half of each block.
  for (int j = 0; j < drink_left; ++j) {
    const int e = j % episodes;
    const int k = j / episodes;
    const double t = std::floor(e * block + 60.0 + k * 40.0);
    if (t + spec.drinking_max_s > e * block + block / 2.0 - 20.0) throw Error("class ratio needs more drinking than fits the day");
    spec.drinks.push_back({t});
  }
  validate(spec);
  return spec;
}

std::array<double, kNumClasses> class_durations(const SynthDay& day) {
  std::array<double, kNumClasses> out{};
  for (const auto* labels : {&*day.recording.labels_right, &*day.recording.labels_left}) {
    for (const auto c : labels->classes()) out[c] += 1.0 / labels->sample_rate_hz();
  }
  return out;
}

}  // namespace eatspeed
