#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "mindlink/stimulus.hpp"

using namespace mindlink;

TEST(BuildSchedule, FortyButtonsFourRoundsGives160Flashes) {
  const auto s = build_schedule(40, 4, 120.0, 1);
  EXPECT_EQ(s.flashes.size(), 160u);
  EXPECT_EQ(s.rounds, 4u);
  EXPECT_NO_THROW(validate(s));
}

TEST(BuildSchedule, TwoButtonsOneRoundIsAPermutation) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = build_schedule(2, 1, 120.0, seed);
    ASSERT_EQ(s.flashes.size(), 2u);
    EXPECT_NE(s.flashes[0].button, s.flashes[1].button);
    EXPECT_LT(s.flashes[0].button, 2u);
    EXPECT_LT(s.flashes[1].button, 2u);
  }
}

TEST(BuildSchedule, DeterministicForSeed) {
  EXPECT_EQ(build_schedule(40, 10, 120.0, 7), build_schedule(40, 10, 120.0, 7));
  EXPECT_NE(build_schedule(40, 10, 120.0, 7).flashes, build_schedule(40, 10, 120.0, 8).flashes);
}

TEST(BuildSchedule, RejectsInvalidCounts) {
  EXPECT_THROW(build_schedule(1, 4, 120.0, 0), ParameterError);
  EXPECT_THROW(build_schedule(40, 0, 120.0, 0), ParameterError);
  EXPECT_THROW(build_schedule(40, 1, 0.0, 0), ParameterError);
  EXPECT_THROW(build_schedule(40, 1, 60.0, 0, {.flash_duration_ms = 100.0}), ParameterError);
}

// Randomized property check over many shapes and seeds.
TEST(BuildSchedule, PermutationOnsetAndBoundaryProperties) {
  std::mt19937_64 gen(99);
  for (int iter = 0; iter < 200; ++iter) {
    const std::size_t n = 2 + gen() % 50;
    const std::size_t rounds = 1 + gen() % 12;
    const double soa = 100.0 + static_cast<double>(gen() % 100);
    const auto s = build_schedule(n, rounds, soa, gen());
    ASSERT_EQ(s.flashes.size(), n * rounds);
    for (std::size_t r = 0; r < rounds; ++r) {
      std::vector<int> count(n, 0);
      for (std::size_t k = r * n; k < (r + 1) * n; ++k) ++count[s.flashes[k].button];
      for (std::size_t b = 0; b < n; ++b) ASSERT_EQ(count[b], 1) << "round " << r << " button " << b;
    }
    for (std::size_t k = 0; k < s.flashes.size(); ++k) {
      ASSERT_EQ(s.flashes[k].onset_ms, static_cast<double>(k) * soa);
      if (k > 0) ASSERT_NE(s.flashes[k].button, s.flashes[k - 1].button);
    }
  }
}

TEST(BuildSchedule, AdjacentRepeatsAllowedWhenConstraintDisabled) {
  bool repeat_seen = false;
  for (std::uint64_t seed = 0; seed < 200 && !repeat_seen; ++seed) {
    const auto s = build_schedule(2, 6, 120.0, seed, {.forbid_adjacent_repeat = false});
    for (std::size_t k = 1; k < s.flashes.size(); ++k) repeat_seen |= s.flashes[k].button == s.flashes[k - 1].button;
  }
  EXPECT_TRUE(repeat_seen);
}

TEST(TargetFlags, OneTrueFlagPerRound) {
  const auto s = build_schedule(40, 10, 120.0, 3);
  const auto flags = target_flags(s, 17);
  ASSERT_EQ(flags.size(), 400u);
  EXPECT_EQ(std::count(flags.begin(), flags.end(), true), 10);
  const auto one = build_schedule(40, 1, 120.0, 3);
  const auto f1 = target_flags(one, 0);
  EXPECT_EQ(std::count(f1.begin(), f1.end(), true), 1);
}

TEST(TargetFlags, SumOverAllTargetsCountsEveryFlashOnce) {
  const auto s = build_schedule(40, 7, 120.0, 11);
  std::size_t total = 0;
  for (std::size_t t = 0; t < 40; ++t) {
    const auto flags = target_flags(s, t);
    total += static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
  }
  EXPECT_EQ(total, 40u * 7u);
}

TEST(TargetFlags, RejectsOutOfRangeTarget) {
  const auto s = build_schedule(40, 1, 120.0, 0);
  EXPECT_THROW(target_flags(s, 40), ParameterError);
}

TEST(ScheduleJson, RoundTripsAndValidates) {
  const auto s = build_schedule(40, 3, 120.0, 5);
  const nlohmann::json j = s;
  EXPECT_EQ(j.at("flashes").size(), 120u);
  EXPECT_EQ(j.at("flashes")[0].at("onset_ms").get<double>(), 0.0);
  EXPECT_EQ(j.get<StimulusSchedule>(), s);

  nlohmann::json broken = j;
  broken["flashes"][1]["button"] = broken["flashes"][0]["button"];
  EXPECT_THROW(broken.get<StimulusSchedule>(), ConsistencyError);
}
