#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "mindlink/errors.hpp"

namespace mindlink::dsp {

// Direct-form II transposed biquad, coefficients normalized so that a0 = 1.
struct Biquad {
  std::array<double, 3> b{1.0, 0.0, 0.0};
  std::array<double, 3> a{1.0, 0.0, 0.0};

  double dc_gain() const { return (b[0] + b[1] + b[2]) / (a[0] + a[1] + a[2]); }

  std::complex<double> response(double omega) const {
    const std::complex<double> z1 = std::polar(1.0, -omega);
    const std::complex<double> z2 = z1 * z1;
    return (b[0] + b[1] * z1 + b[2] * z2) / (a[0] + a[1] * z1 + a[2] * z2);
  }
};

using SosFilter = std::vector<Biquad>;

enum class FilterKind { lowpass, highpass };

// Digital Butterworth of even order via the bilinear transform with frequency prewarping.
// One biquad per conjugate pole pair of the analog prototype.
inline SosFilter butterworth(FilterKind kind, int order, double cutoff_hz, double sample_rate_hz) {
  if (order < 2 || order % 2 != 0) {
    throw ParameterError("butterworth order must be even and >= 2");
  }
  if (!(sample_rate_hz > 0.0) || !(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate_hz / 2.0)) {
    throw ParameterError("butterworth cutoff must lie in (0, fs/2)");
  }
  const double k = 2.0 * sample_rate_hz;
  const double wc = k * std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
  SosFilter sections;
  sections.reserve(static_cast<std::size_t>(order / 2));
  for (int i = 0; i < order / 2; ++i) {
    // Prototype pole pair s = exp(j*pi*(2i + N + 1) / (2N)); only its real part enters a section.
    const double re = std::cos(std::numbers::pi * (2.0 * i + order + 1.0) / (2.0 * order));
    const double damping = -2.0 * re * wc * k;
    const double a0 = k * k + damping + wc * wc;
    Biquad s;
    s.a = {1.0, (2.0 * wc * wc - 2.0 * k * k) / a0, (k * k - damping + wc * wc) / a0};
    if (kind == FilterKind::lowpass) {
      const double g = wc * wc / a0;
      s.b = {g, 2.0 * g, g};
    } else {
      const double g = k * k / a0;
      s.b = {g, -2.0 * g, g};
    }
    sections.push_back(s);
  }
  return sections;
}

// Cascade of a highpass at low_hz and a lowpass at high_hz, each of the given order.
inline SosFilter butterworth_bandpass(int order, double low_hz, double high_hz,
                                      double sample_rate_hz) {
  if (!(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < sample_rate_hz / 2.0)) {
    throw ParameterError("band edges must satisfy 0 < low < high < fs/2");
  }
  SosFilter sos = butterworth(FilterKind::highpass, order, low_hz, sample_rate_hz);
  SosFilter lp = butterworth(FilterKind::lowpass, order, high_hz, sample_rate_hz);
  sos.insert(sos.end(), lp.begin(), lp.end());
  return sos;
}

inline std::complex<double> frequency_response(const SosFilter& sos, double freq_hz,
                                               double sample_rate_hz) {
  const double omega = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
  std::complex<double> h{1.0, 0.0};
  for (const auto& s : sos) h *= s.response(omega);
  return h;
}

// Causal filtering. When `x0` is given, section states start at the steady state for a
// constant input of that value, so a constant signal passes without a start-up transient.
inline void sosfilt_inplace(const SosFilter& sos, std::span<double> x, const double* x0 = nullptr) {
  double level = x0 ? *x0 : 0.0;
  for (const auto& s : sos) {
    double z1 = 0.0;
    double z2 = 0.0;
    if (x0) {
      const double y = s.dc_gain() * level;
      z2 = s.b[2] * level - s.a[2] * y;
      z1 = s.b[1] * level - s.a[1] * y + z2;
      level = y;
    }
    for (double& v : x) {
      const double in = v;
      const double out = s.b[0] * in + z1;
      z1 = s.b[1] * in - s.a[1] * out + z2;
      z2 = s.b[2] * in - s.a[2] * out;
      v = out;
    }
  }
}

// Forward-backward (zero-phase) filtering with odd reflection padding of `pad` samples at
// both ends and steady-state initial conditions for each pass.
inline std::vector<double> filtfilt(const SosFilter& sos, std::span<const double> x,
                                    std::size_t pad) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  pad = std::min(pad, n - 1);
  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    ext[i] = 2.0 * x.front() - x[pad - i];
    ext[n + pad + i] = 2.0 * x.back() - x[n - 2 - i];
  }
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));

  double first = ext.front();
  sosfilt_inplace(sos, ext, &first);
  std::reverse(ext.begin(), ext.end());
  first = ext.front();
  sosfilt_inplace(sos, ext, &first);
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

inline double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace mindlink::dsp
