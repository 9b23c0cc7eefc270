#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "json.hpp"
#include "mindlink/errors.hpp"

namespace mindlink {

struct Flash {
  double onset_ms = 0.0;
  std::size_t button = 0;

  bool operator==(const Flash&) const = default;
};

// Flash order for one selection trial: `rounds` passes, each a permutation of all buttons.
struct StimulusSchedule {
  std::size_t n_buttons = 40;
  std::size_t rounds = 0;
  double flash_duration_ms = 100.0;
  double soa_ms = 120.0;
  std::uint64_t seed = 0;
  std::vector<Flash> flashes;

  std::size_t round_of(std::size_t flash_index) const { return flash_index / n_buttons; }
  double duration_ms() const { return static_cast<double>(flashes.size()) * soa_ms; }

  bool operator==(const StimulusSchedule&) const = default;
};

struct ScheduleOptions {
  double flash_duration_ms = 100.0;
  // Reject a button flashing twice in a row across a round boundary.
  bool forbid_adjacent_repeat = true;
};

// Display refresh block; a flash may overrun the SOA by at most one block.
inline constexpr double kStimulusBlockMs = 30.0;

inline StimulusSchedule build_schedule(std::size_t n_buttons, std::size_t rounds, double soa_ms,
                                       std::uint64_t seed, const ScheduleOptions& options = {}) {
  if (n_buttons < 2) throw ParameterError("schedule needs at least 2 buttons");
  if (rounds < 1) throw ParameterError("schedule needs at least 1 round");
  if (!(soa_ms > 0.0)) throw ParameterError("soa_ms must be positive");
  if (!(options.flash_duration_ms > 0.0) ||
      options.flash_duration_ms > soa_ms + kStimulusBlockMs) {
    throw ParameterError("flash duration must be positive and at most soa + one 30 ms block");
  }

  StimulusSchedule schedule;
  schedule.n_buttons = n_buttons;
  schedule.rounds = rounds;
  schedule.flash_duration_ms = options.flash_duration_ms;
  schedule.soa_ms = soa_ms;
  schedule.seed = seed;
  schedule.flashes.reserve(n_buttons * rounds);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n_buttons);
  std::size_t k = 0;
  for (std::size_t r = 0; r < rounds; ++r) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    if (options.forbid_adjacent_repeat && r > 0 &&
        order.front() == schedule.flashes.back().button) {
      std::uniform_int_distribution<std::size_t> pick(1, n_buttons - 1);
      std::swap(order.front(), order[pick(rng)]);
    }
    for (std::size_t b : order) {
      schedule.flashes.push_back({static_cast<double>(k) * soa_ms, b});
      ++k;
    }
  }
  return schedule;
}

// One flag per flash, true where the flashed button is the target.
inline std::vector<bool> target_flags(const StimulusSchedule& schedule, std::size_t target) {
  if (target >= schedule.n_buttons) throw ParameterError("target button out of range");
  std::vector<bool> flags;
  flags.reserve(schedule.flashes.size());
  for (const auto& f : schedule.flashes) flags.push_back(f.button == target);
  return flags;
}

inline void validate(const StimulusSchedule& s) {
  if (s.n_buttons < 2 || s.rounds < 1) throw ParameterError("invalid schedule counts");
  if (s.flashes.size() != s.n_buttons * s.rounds) {
    throw ConsistencyError("schedule flash count does not equal n_buttons * rounds");
  }
  for (std::size_t r = 0; r < s.rounds; ++r) {
    std::vector<bool> seen(s.n_buttons, false);
    for (std::size_t i = r * s.n_buttons; i < (r + 1) * s.n_buttons; ++i) {
      const auto b = s.flashes[i].button;
      if (b >= s.n_buttons || seen[b]) {
        throw ConsistencyError("round " + std::to_string(r) + " is not a permutation of buttons");
      }
      seen[b] = true;
    }
  }
}

inline void to_json(nlohmann::json& j, const StimulusSchedule& s) {
  nlohmann::json flashes = nlohmann::json::array();
  for (const auto& f : s.flashes) flashes.push_back({{"onset_ms", f.onset_ms}, {"button", f.button}});
  j = nlohmann::json{{"n_buttons", s.n_buttons},
                     {"soa_ms", s.soa_ms},
                     {"flash_duration_ms", s.flash_duration_ms},
                     {"seed", s.seed},
                     {"flashes", std::move(flashes)}};
}

inline void from_json(const nlohmann::json& j, StimulusSchedule& s) {
  s.n_buttons = j.at("n_buttons").get<std::size_t>();
  s.soa_ms = j.at("soa_ms").get<double>();
  s.flash_duration_ms = j.value("flash_duration_ms", 100.0);
  s.seed = j.value("seed", std::uint64_t{0});
  s.flashes.clear();
  for (const auto& f : j.at("flashes")) {
    s.flashes.push_back({f.at("onset_ms").get<double>(), f.at("button").get<std::size_t>()});
  }
  if (s.n_buttons == 0 || s.flashes.size() % s.n_buttons != 0) {
    throw ConsistencyError("flash count is not a whole number of rounds");
  }
  s.rounds = s.flashes.size() / s.n_buttons;
  validate(s);
}

}  // namespace mindlink
