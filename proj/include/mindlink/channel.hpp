#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "mindlink/codec.hpp"
#include "mindlink/errors.hpp"
#include "mindlink/metasurface.hpp"
#include "mindlink/random.hpp"

namespace mindlink {

struct Direction {
  double theta_deg = 0.0;
  double phi_deg = 0.0;
};

struct ChannelConfig {
  double symbol_rate_hz = 1e6;
  std::size_t oversample = 10;
  // +infinity disables the noise stage.
  double snr_db = 30.0;
  Direction receiver{};
  double link_distance_m = 1.3;  // informational only
  int adc_bits = 12;
  std::uint64_t seed = 0;

  void validate() const {
    if (oversample < 2) throw ParameterError("oversample must be at least 2");
    if (adc_bits < 4 || adc_bits > 24) throw ParameterError("adc_bits must lie in [4, 24]");
    if (!(symbol_rate_hz > 0.0)) throw ParameterError("symbol rate must be positive");
  }
};

struct SymbolLevels {
  double high = 1.0;
  double low = 0.0;
};

// Received amplitude of each pattern toward the receiver: |AF| at that direction.
inline SymbolLevels symbol_levels(const CodingPattern& high_pattern, const CodingPattern& low_pattern,
                                  const Direction& direction = {}) {
  if (high_pattern.size() != low_pattern.size() || high_pattern.spacing() != low_pattern.spacing()) {
    throw ConfigurationError("symbol patterns must share array geometry");
  }
  const SymbolLevels levels{std::abs(array_factor(high_pattern, direction.theta_deg, direction.phi_deg)),
                            std::abs(array_factor(low_pattern, direction.theta_deg, direction.phi_deg))};
  if (!(levels.high > levels.low)) {
    throw ConfigurationError("'1' pattern is not stronger than '0' pattern toward the receiver");
  }
  return levels;
}

inline double level_ratio_db(const SymbolLevels& l) {
  return l.low > 0.0 ? 20.0 * std::log10(l.high / l.low) : std::numeric_limits<double>::infinity();
}

// Each bit held for `oversample` samples at its level; no pulse shaping.
inline SampleStream modulate(const Bits& bits, const SymbolLevels& levels, const ChannelConfig& config = {}) {
  config.validate();
  if (!(levels.high > levels.low) || levels.low < 0.0) {
    throw ParameterError("levels must satisfy high > low >= 0");
  }
  SampleStream s;
  s.symbol_rate_hz = config.symbol_rate_hz;
  s.sample_rate_hz = config.symbol_rate_hz * static_cast<double>(config.oversample);
  s.samples.reserve(bits.size() * config.oversample);
  for (auto b : bits) s.samples.insert(s.samples.end(), config.oversample, b ? levels.high : levels.low);
  return s;
}

inline double mean_power(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double p = 0.0;
  for (double v : x) p += v * v;
  return p / static_cast<double>(x.size());
}

// Additive white Gaussian noise at signal power / noise power = 10^(snr_db/10), with the
// signal power measured on the clean input.
inline SampleStream add_noise(const SampleStream& stream, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0.0) return stream;
  if (std::isnan(snr_db)) throw ParameterError("snr_db is NaN");
  SampleStream out = stream;
  if (out.samples.empty()) return out;
  const double sigma = std::sqrt(mean_power(stream.samples) / std::pow(10.0, snr_db / 10.0));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double& v : out.samples) v += sigma * gauss(rng);
  return out;
}

// Uniform quantizer over [0, full_scale] with 2^bits - 1 steps.
struct Adc {
  double full_scale = 1.25;
  int bits = 12;

  std::uint32_t max_code() const { return (std::uint32_t{1} << bits) - 1u; }

  std::uint32_t code(double x) const {
    if (!(x > 0.0)) return 0;
    if (x >= full_scale) return max_code();
    const double v = x / full_scale * static_cast<double>(max_code());
    return std::min(max_code(), static_cast<std::uint32_t>(std::floor(v + 1e-9)));
  }

  double value(std::uint32_t c) const { return static_cast<double>(c) * full_scale / static_cast<double>(max_code()); }
  double quantize(double x) const { return value(code(x)); }
};

inline constexpr double kAdcHeadroom = 1.25;

// Clips to [0, full scale] and quantizes; full scale is 1.25x the clean high level.
inline SampleStream detect(const SampleStream& stream, int adc_bits, double high_level) {
  if (adc_bits < 4 || adc_bits > 24) throw ParameterError("adc_bits must lie in [4, 24]");
  if (!(high_level > 0.0)) throw ParameterError("high level must be positive");
  const Adc adc{kAdcHeadroom * high_level, adc_bits};
  SampleStream out = stream;
  for (double& v : out.samples) v = adc.quantize(v);
  return out;
}

inline std::size_t count_bit_errors(const Bits& sent, const Bits& received) {
  std::size_t errors = 0;
  for (std::size_t i = 0; i < sent.size(); ++i) {
    if (i >= received.size() || sent[i] != received[i]) ++errors;
  }
  return errors;
}

struct BerPoint {
  double snr_db = 0.0;
  double ber = 0.0;
  std::size_t errors = 0;
  std::size_t bits = 0;
};

// Random bits through modulate -> noise -> detect -> mid-symbol slicing at the midpoint of
// the two clean levels. Every SNR point reuses the same bits and the same unit-variance noise
// draw, scaled to the point's SNR, so the error sets are nested across the sweep.
inline std::vector<BerPoint> ber_sweep(const SymbolLevels& levels, const std::vector<double>& snrs_db,
                                       std::size_t n_bits, const ChannelConfig& config) {
  std::mt19937_64 bit_rng(derive_seed(config.seed, 0xB17u));
  std::bernoulli_distribution coin(0.5);
  Bits bits(n_bits);
  for (auto& b : bits) b = coin(bit_rng) ? 1 : 0;
  const SampleStream clean = modulate(bits, levels, config);
  const double threshold = 0.5 * (levels.high + levels.low);
  std::vector<BerPoint> out;
  for (std::size_t i = 0; i < snrs_db.size(); ++i) {
    const auto noisy = add_noise(clean, snrs_db[i], derive_seed(config.seed, 0x5EEDu));
    const auto detected = detect(noisy, config.adc_bits, levels.high);
    const Bits received = slice_symbols(detected, threshold);
    const std::size_t errors = count_bit_errors(bits, received);
    out.push_back({snrs_db[i], n_bits ? static_cast<double>(errors) / static_cast<double>(n_bits) : 0.0,
                   errors, n_bits});
  }
  return out;
}

// Characters per second the link can carry at one frame per character.
inline double channel_capacity_chars_per_s(double symbol_rate_hz, std::size_t frame_bits) {
  if (frame_bits == 0) throw ParameterError("frame length must be positive");
  return symbol_rate_hz / static_cast<double>(frame_bits);
}

}  // namespace mindlink
