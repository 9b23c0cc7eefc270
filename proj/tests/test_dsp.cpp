#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "mindlink/dsp.hpp"
#include "oracles.hpp"

using namespace mindlink;

TEST(Butterworth, LowpassMatchesAnalyticMagnitude) {
  const auto lp = dsp::butterworth(dsp::FilterKind::lowpass, 4, 20.0, 250.0);
  ASSERT_EQ(lp.size(), 2u);
  for (double f : {0.1, 5.0, 10.0, 20.0, 35.0, 50.0, 100.0}) {
    const double got = std::norm(dsp::frequency_response(lp, f, 250.0));
    EXPECT_NEAR(got, oracle::butterworth_lowpass_power(f, 20.0, 250.0, 4), 1e-10) << f;
  }
}

TEST(Butterworth, HighpassMatchesAnalyticMagnitude) {
  const auto hp = dsp::butterworth(dsp::FilterKind::highpass, 4, 0.5, 250.0);
  for (double f : {0.05, 0.25, 0.5, 1.0, 10.0, 60.0}) {
    const double got = std::norm(dsp::frequency_response(hp, f, 250.0));
    EXPECT_NEAR(got, oracle::butterworth_highpass_power(f, 0.5, 250.0, 4), 1e-8) << f;
  }
  EXPECT_NEAR(std::abs(dsp::frequency_response(hp, 0.0, 250.0)), 0.0, 1e-12);
}

TEST(Butterworth, RejectsInvalidDesigns) {
  EXPECT_THROW(dsp::butterworth(dsp::FilterKind::lowpass, 3, 10.0, 250.0), ParameterError);
  EXPECT_THROW(dsp::butterworth(dsp::FilterKind::lowpass, 4, 125.0, 250.0), ParameterError);
  EXPECT_THROW(dsp::butterworth_bandpass(4, 20.0, 0.5, 250.0), ParameterError);
  EXPECT_THROW(dsp::butterworth_bandpass(4, 0.0, 20.0, 250.0), ParameterError);
}

TEST(Sosfilt, SteadyStateStartPassesConstantsWithoutTransient) {
  const auto lp = dsp::butterworth(dsp::FilterKind::lowpass, 4, 20.0, 250.0);
  std::vector<double> x(500, 3.0);
  const double x0 = 3.0;
  dsp::sosfilt_inplace(lp, x, &x0);
  for (double v : x) EXPECT_NEAR(v, 3.0, 1e-9);
}

TEST(Filtfilt, IsZeroPhaseForSymmetricPulse) {
  const auto lp = dsp::butterworth(dsp::FilterKind::lowpass, 4, 10.0, 250.0);
  std::vector<double> x(401, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = (static_cast<double>(i) - 200.0) / 10.0;
    x[i] = std::exp(-0.5 * d * d);
  }
  const auto y = dsp::filtfilt(lp, x, 100);
  std::size_t peak = 0;
  for (std::size_t i = 1; i < y.size(); ++i) {
    if (y[i] > y[peak]) peak = i;
  }
  EXPECT_EQ(peak, 200u);
  for (std::size_t k = 1; k < 100; ++k) EXPECT_NEAR(y[200 - k], y[200 + k], 1e-9);
}

TEST(Filtfilt, HandlesShortInputs) {
  const auto lp = dsp::butterworth(dsp::FilterKind::lowpass, 4, 10.0, 250.0);
  EXPECT_TRUE(dsp::filtfilt(lp, std::vector<double>{}, 10).empty());
  EXPECT_EQ(dsp::filtfilt(lp, std::vector<double>{1.0}, 10).size(), 1u);
  EXPECT_EQ(dsp::filtfilt(lp, std::vector<double>{1.0, 2.0, 3.0}, 10).size(), 3u);
}
