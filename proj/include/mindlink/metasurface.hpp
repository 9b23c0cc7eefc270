#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "mindlink/eeg.hpp"
#include "mindlink/errors.hpp"

namespace mindlink {

inline constexpr double kDegree = std::numbers::pi / 180.0;

// Square 2-bit coding pattern. states[row * n + col]; columns run along +x, rows along +y.
// State k reflects with phase k * 90 degrees.
class CodingPattern {
 public:
  CodingPattern(std::size_t n, std::vector<std::uint8_t> states, double spacing_wavelengths = 0.5,
                std::string name = {})
      : n_(n), states_(std::move(states)), spacing_(spacing_wavelengths), name_(std::move(name)) {
    if (n_ == 0) throw ParameterError("pattern size must be at least 1");
    if (states_.size() != n_ * n_) throw ParameterError("pattern must hold n*n states");
    if (!(spacing_ > 0.0)) throw ParameterError("element spacing must be positive");
    for (auto s : states_) {
      if (s > 3) throw ParameterError("coding states must lie in {0,1,2,3}");
    }
  }

  std::size_t size() const { return n_; }
  double spacing() const { return spacing_; }
  const std::string& name() const { return name_; }
  const std::vector<std::uint8_t>& states() const { return states_; }
  std::uint8_t state(std::size_t row, std::size_t col) const { return states_[row * n_ + col]; }
  double phase(std::size_t row, std::size_t col) const {
    return state(row, col) * (std::numbers::pi / 2.0);
  }

  bool operator==(const CodingPattern& o) const {
    return n_ == o.n_ && states_ == o.states_ && spacing_ == o.spacing_;
  }

 private:
  std::size_t n_;
  std::vector<std::uint8_t> states_;
  double spacing_;
  std::string name_;
};

namespace detail {

// Nearest 2-bit state to a phase in radians. Half-way phases round up, after wrapping into
// [0, 2pi), so that a quarter-turn rotation of the ideal phase shifts every state by exactly 1.
inline std::uint8_t quantize_phase(double phase) {
  const double two_pi = 2.0 * std::numbers::pi;
  double p = std::fmod(phase, two_pi);
  if (p < 0.0) p += two_pi;
  const auto q = static_cast<long>(std::floor(p / (std::numbers::pi / 2.0) + 0.5 + 1e-9));
  return static_cast<std::uint8_t>(((q % 4) + 4) % 4);
}

inline double centred(std::size_t i, std::size_t n) {
  return static_cast<double>(i) - 0.5 * static_cast<double>(n - 1);
}

}  // namespace detail

inline CodingPattern uniform_pattern(std::size_t n, int state, double spacing = 0.5) {
  if (state < 0 || state > 3) throw ParameterError("uniform state must lie in {0,1,2,3}");
  return CodingPattern(n, std::vector<std::uint8_t>(n * n, static_cast<std::uint8_t>(state)), spacing,
                       "uniform");
}

enum class Axis { x, y };

// Linear phase ramp -2pi (d/lambda) m sin(theta) along the axis, quantized per element. The
// beam leaves at theta toward phi = 0 (x) or phi = 90 (y). At 30 degrees with d = lambda/2 the
// ramp is exactly -90 degrees per element, a period-4 supercell.
inline CodingPattern gradient_pattern(std::size_t n, double target_theta_deg, Axis axis,
                                      double spacing = 0.5) {
  if (!(target_theta_deg > 0.0) || target_theta_deg > 60.0) {
    throw ParameterError("gradient angle must lie in (0, 60] degrees");
  }
  if (!(spacing > 0.0)) throw ParameterError("element spacing must be positive");
  const double sin_t = std::sin(target_theta_deg * kDegree);
  const double period = 1.0 / sin_t;  // supercell length in wavelengths
  if (period < spacing) throw ParameterError("deflection angle unreachable at this element spacing");
  std::vector<std::uint8_t> states(n * n);
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t col = 0; col < n; ++col) {
      const auto m = static_cast<double>(axis == Axis::x ? col : row);
      states[row * n + col] = detail::quantize_phase(-2.0 * std::numbers::pi * spacing * m * sin_t);
    }
  }
  return CodingPattern(n, std::move(states), spacing, "gradient");
}

// Spiral phase l * atan2(y, x) about the array centre, quantized per element.
inline CodingPattern oam_pattern(std::size_t n, int mode, double spacing = 0.5) {
  if (mode == 0) throw ParameterError("OAM mode 0 is the uniform pattern");
  if (static_cast<double>(std::abs(mode)) > static_cast<double>(n) / 4.0) {
    throw ParameterError("OAM mode too large for the array size");
  }
  std::vector<std::uint8_t> states(n * n);
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t col = 0; col < n; ++col) {
      const double x = detail::centred(col, n);
      const double y = detail::centred(row, n);
      const double azimuth = (x == 0.0 && y == 0.0) ? 0.0 : std::atan2(y, x);
      double a = azimuth < 0.0 ? azimuth + 2.0 * std::numbers::pi : azimuth;
      states[row * n + col] = detail::quantize_phase(mode * a);
    }
  }
  return CodingPattern(n, std::move(states), spacing, "oam");
}

// Array factor of isotropic unit scatterers with (m, n) centred on the array:
// AF = sum exp(j[phase_mn + 2pi (d/lambda)(m sin(t) cos(p) + n sin(t) sin(p))]).
inline std::complex<double> array_factor(const CodingPattern& p, double theta_deg, double phi_deg) {
  const std::size_t n = p.size();
  const double k = 2.0 * std::numbers::pi * p.spacing();
  const double u = std::sin(theta_deg * kDegree) * std::cos(phi_deg * kDegree);
  const double v = std::sin(theta_deg * kDegree) * std::sin(phi_deg * kDegree);
  static const std::complex<double> kStatePhasor[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  std::vector<std::complex<double>> ex(n);
  for (std::size_t col = 0; col < n; ++col) ex[col] = std::polar(1.0, k * detail::centred(col, n) * u);
  std::complex<double> af{0.0, 0.0};
  for (std::size_t row = 0; row < n; ++row) {
    std::complex<double> line{0.0, 0.0};
    for (std::size_t col = 0; col < n; ++col) line += kStatePhasor[p.state(row, col)] * ex[col];
    af += line * std::polar(1.0, k * detail::centred(row, n) * v);
  }
  return af;
}

// Complex far field sampled on theta in [0, 90] and phi in [0, 360), theta-major.
struct FarField {
  std::vector<double> thetas_deg;
  std::vector<double> phis_deg;
  std::vector<std::complex<double>> amplitudes;
  double peak = 0.0;

  std::size_t index(std::size_t ti, std::size_t pi) const { return ti * phis_deg.size() + pi; }
  const std::complex<double>& at(std::size_t ti, std::size_t pi) const { return amplitudes[index(ti, pi)]; }
};

inline constexpr double kDefaultThetaStep = 0.5;
inline constexpr double kDefaultPhiStep = 2.0;

inline FarField far_field(const CodingPattern& p, double theta_step_deg = kDefaultThetaStep,
                          double phi_step_deg = kDefaultPhiStep) {
  if (!(theta_step_deg > 0.0) || theta_step_deg > 5.0 || !(phi_step_deg > 0.0) || phi_step_deg > 5.0) {
    throw ParameterError("far-field steps must lie in (0, 5] degrees");
  }
  FarField ff;
  for (std::size_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * theta_step_deg;
    if (t > 90.0 + 1e-9) break;
    ff.thetas_deg.push_back(std::min(t, 90.0));
  }
  for (std::size_t i = 0;; ++i) {
    const double ph = static_cast<double>(i) * phi_step_deg;
    if (ph >= 360.0 - 1e-9) break;
    ff.phis_deg.push_back(ph);
  }
  ff.amplitudes.reserve(ff.thetas_deg.size() * ff.phis_deg.size());
  for (double t : ff.thetas_deg) {
    for (double ph : ff.phis_deg) {
      ff.amplitudes.push_back(array_factor(p, t, ph));
      ff.peak = std::max(ff.peak, std::abs(ff.amplitudes.back()));
    }
  }
  return ff;
}

struct Lobe {
  double theta_deg = 0.0;
  double phi_deg = 0.0;
  double magnitude = 0.0;
};

// Grid argmax of |AF|; ties go to the smaller theta, then the smaller phi.
inline Lobe main_lobe(const FarField& ff) {
  if (ff.amplitudes.empty()) throw ParameterError("empty far field");
  Lobe best{ff.thetas_deg[0], ff.phis_deg[0], std::abs(ff.amplitudes[0])};
  for (std::size_t ti = 0; ti < ff.thetas_deg.size(); ++ti) {
    for (std::size_t pi = 0; pi < ff.phis_deg.size(); ++pi) {
      const double m = std::abs(ff.at(ti, pi));
      if (m > best.magnitude) best = {ff.thetas_deg[ti], ff.phis_deg[pi], m};
    }
  }
  return best;
}

// Randomized-supercell scattering reduction: a `fraction` of the 2x2 supercells get random
// 2-bit states, the rest stay at state 0. Along a seeded shuffle of the supercells, every run
// of four consecutive cells holds each state once, so the randomized cells cancel at
// broadside and the uniform remainder sets the broadside level. Of kRcsCandidates such
// drawings, the one whose fully randomized pattern has the lowest far-field peak is kept.
// Patterns of increasing fraction for one seed are nested.
inline constexpr int kRcsCandidates = 16;

inline CodingPattern rcs_pattern_with_fraction(std::size_t n, double fraction, std::uint64_t seed,
                                               double spacing = 0.5) {
  if (!(fraction >= 0.0) || fraction > 1.0) throw ParameterError("fraction must lie in [0, 1]");
  if (!(spacing > 0.0)) throw ParameterError("element spacing must be positive");
  const std::size_t cells = (n + 1) / 2;
  const std::size_t total = cells * cells;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  auto expand = [&](const std::vector<std::uint8_t>& per_cell) {
    std::vector<std::uint8_t> states(n * n);
    for (std::size_t row = 0; row < n; ++row) {
      for (std::size_t col = 0; col < n; ++col) states[row * n + col] = per_cell[(row / 2) * cells + col / 2];
    }
    return CodingPattern(n, std::move(states), spacing, "rcs");
  };

  std::vector<std::uint8_t> best;
  double best_peak = std::numeric_limits<double>::infinity();
  for (int candidate = 0; candidate < kRcsCandidates; ++candidate) {
    std::vector<std::uint8_t> cell_state(total, 0);
    for (std::size_t i = 0; i < total; i += 4) {
      std::array<std::uint8_t, 4> quad{0, 1, 2, 3};
      std::shuffle(quad.begin(), quad.end(), rng);
      for (std::size_t j = 0; j < 4 && i + j < total; ++j) cell_state[order[i + j]] = quad[j];
    }
    const double peak = far_field(expand(cell_state), 1.0, 4.0).peak;
    if (peak < best_peak) {
      best_peak = peak;
      best = std::move(cell_state);
    }
  }

  const auto chosen = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  std::vector<std::uint8_t> per_cell(total, 0);
  for (std::size_t i = 0; i < chosen; ++i) per_cell[order[i]] = best[order[i]];
  return expand(per_cell);
}

inline double rcs_level_fraction(int level_index) {
  switch (level_index) {
    case 1: return 1.0;
    case 2: return 0.75;
    case 3: return 0.5;
    case 4: return 0.25;
    default: throw ParameterError("RCS level index must lie in 1..4");
  }
}

inline CodingPattern rcs_pattern(std::size_t n, int level_index, std::uint64_t seed, double spacing = 0.5) {
  return rcs_pattern_with_fraction(n, rcs_level_fraction(level_index), seed, spacing);
}

// 20 log10 of the reference peak over the pattern peak, both taken over the sampled grid.
inline double peak_reduction_db(const FarField& pattern, const FarField& reference) {
  if (!(reference.peak > 0.0)) throw ComputationError("reference far field has zero peak");
  if (!(pattern.peak > 0.0)) throw ComputationError("pattern far field has zero peak");
  return 20.0 * std::log10(reference.peak / pattern.peak);
}

inline double peak_reduction_db(const CodingPattern& pattern, const CodingPattern& reference,
                                double theta_step_deg = kDefaultThetaStep,
                                double phi_step_deg = kDefaultPhiStep) {
  if (pattern.size() != reference.size() || pattern.spacing() != reference.spacing()) {
    throw ParameterError("patterns must share array geometry");
  }
  return peak_reduction_db(far_field(pattern, theta_step_deg, phi_step_deg),
                           far_field(reference, theta_step_deg, phi_step_deg));
}

inline constexpr double kNullDepthCapDb = 300.0;

// How far the broadside magnitude sits below the grid peak, capped for exact nulls.
inline double null_depth_db(const FarField& ff) {
  const double broadside = std::abs(ff.at(0, 0));
  if (!(ff.peak > 0.0)) return 0.0;
  if (broadside <= ff.peak * std::pow(10.0, -kNullDepthCapDb / 20.0)) return kNullDepthCapDb;
  return 20.0 * std::log10(ff.peak / broadside);
}

// Net far-field phase advance, in turns, around a circle of constant theta as phi goes once
// around. Equals the OAM mode for a vortex beam.
inline double phase_winding_turns(const CodingPattern& p, double theta_deg = 5.0, double phi_step_deg = 2.0) {
  const auto steps = static_cast<std::size_t>(std::llround(360.0 / phi_step_deg));
  double total = 0.0;
  double prev = std::arg(array_factor(p, theta_deg, 0.0));
  for (std::size_t i = 1; i <= steps; ++i) {
    const double cur = std::arg(array_factor(p, theta_deg, static_cast<double>(i) * 360.0 / static_cast<double>(steps)));
    double d = cur - prev;
    while (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
    while (d < -std::numbers::pi) d += 2.0 * std::numbers::pi;
    total += d;
    prev = cur;
  }
  return total / (2.0 * std::numbers::pi);
}

// Plain text, one row per line, characters '0'-'3'. The first line is row 0.
inline void save_pattern(const CodingPattern& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (std::size_t row = 0; row < p.size(); ++row) {
    for (std::size_t col = 0; col < p.size(); ++col) out << static_cast<char>('0' + p.state(row, col));
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

inline CodingPattern load_pattern(const std::string& path, double spacing = 0.5) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> states;
  std::size_t n = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    if (n == 0) n = line.size();
    if (line.size() != n) throw FormatError(line_no, "rows must all have the same length");
    for (char c : line) {
      if (c < '0' || c > '3') throw FormatError(line_no, "states must be characters 0-3");
      states.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    ++rows;
  }
  if (n == 0) throw FormatError(1, "empty pattern file");
  if (rows != n) throw FormatError(line_no, "pattern must be square");
  return CodingPattern(n, std::move(states), spacing, "file");
}

// CSV `theta_deg,phi_deg,magnitude,phase_rad`; with `normalized_db` the magnitude column is
// 20 log10(|AF| / peak) instead.
inline void save_far_field(const FarField& ff, const std::string& path, bool normalized_db = false) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << (normalized_db ? "theta_deg,phi_deg,magnitude_db,phase_rad\n" : "theta_deg,phi_deg,magnitude,phase_rad\n");
  for (std::size_t ti = 0; ti < ff.thetas_deg.size(); ++ti) {
    for (std::size_t pi = 0; pi < ff.phis_deg.size(); ++pi) {
      const auto& a = ff.at(ti, pi);
      double mag = std::abs(a);
      if (normalized_db) mag = ff.peak > 0.0 ? 20.0 * std::log10(std::max(mag / ff.peak, 1e-15)) : -300.0;
      out << detail::format_double(ff.thetas_deg[ti]) << ',' << detail::format_double(ff.phis_deg[pi]) << ','
          << detail::format_double(mag) << ',' << detail::format_double(std::arg(a)) << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace mindlink
