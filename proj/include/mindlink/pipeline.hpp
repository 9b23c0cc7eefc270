#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mindlink/dsp.hpp"
#include "mindlink/eeg.hpp"
#include "mindlink/errors.hpp"

namespace mindlink {

// channels x points, one row per channel.
using EpochMatrix = std::vector<std::vector<double>>;

struct FeatureVector {
  std::vector<double> values;
  std::size_t button = 0;
  std::size_t round = 0;  // 0-based round index within the trial
};

struct AveragedFeature {
  std::vector<double> values;
  std::size_t button = 0;
  std::size_t rounds_used = 0;
};

struct EpochWindow {
  double baseline_ms = 200.0;
  double length_ms = 600.0;
  std::size_t decimation = 6;

  std::size_t baseline_samples(double fs) const { return ms_to_samples(baseline_ms, fs); }
  std::size_t length_samples(double fs) const { return ms_to_samples(length_ms, fs); }
  // 250 Hz x 600 ms / 6 = 25.
  std::size_t points(double fs) const {
    return (length_samples(fs) + decimation - 1) / decimation;
  }
};

struct BandConfig {
  double low_hz = 0.5;
  double high_hz = 20.0;
  int order = 4;
};

inline constexpr double kZscoreFloor = 1e-12;

// Zero-phase Butterworth bandpass applied per channel. Each end is padded by one period of
// the low cutoff (clipped to the recording length).
inline EegRecording bandpass(const EegRecording& rec, double low_hz, double high_hz, int order = 4) {
  rec.validate();
  const auto sos = dsp::butterworth_bandpass(order, low_hz, high_hz, rec.sample_rate_hz);
  const auto pad = static_cast<std::size_t>(std::ceil(rec.sample_rate_hz / low_hz));
  EegRecording out = rec;
  for (auto& row : out.data) row = dsp::filtfilt(sos, row, pad);
  return out;
}

inline EegRecording bandpass(const EegRecording& rec, const BandConfig& band = {}) {
  return bandpass(rec, band.low_hz, band.high_hz, band.order);
}

// Population z-score in place; near-constant rows become zeros.
inline void zscore_inplace(std::span<double> row) {
  const double m = dsp::mean(row);
  double ss = 0.0;
  for (double v : row) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(row.size()));
  for (double& v : row) v = sd < kZscoreFloor ? 0.0 : (v - m) / sd;
}

// Post-onset window, minus the pre-onset per-channel mean, decimated from offset 0, then
// z-scored per channel.
inline EpochMatrix extract_epoch(const EegRecording& rec, std::size_t onset_sample,
                                 const EpochWindow& window = {}) {
  const double fs = rec.sample_rate_hz;
  const std::size_t pre = window.baseline_samples(fs);
  const std::size_t len = window.length_samples(fs);
  if (window.decimation == 0) throw ParameterError("decimation must be positive");
  if (onset_sample < pre || onset_sample + len > rec.samples()) {
    throw BoundsError("epoch at sample " + std::to_string(onset_sample) +
                      " does not fit inside the recording");
  }
  EpochMatrix epoch(rec.channels());
  for (std::size_t c = 0; c < rec.channels(); ++c) {
    const auto& x = rec.data[c];
    double baseline = 0.0;
    for (std::size_t i = onset_sample - pre; i < onset_sample; ++i) baseline += x[i];
    baseline = pre > 0 ? baseline / static_cast<double>(pre) : 0.0;
    auto& row = epoch[c];
    row.reserve(window.points(fs));
    for (std::size_t i = 0; i < len; i += window.decimation) row.push_back(x[onset_sample + i] - baseline);
    zscore_inplace(row);
  }
  return epoch;
}

// Row-major concatenation: values[c * points + s] = epoch[c][s].
inline FeatureVector flatten(const EpochMatrix& epoch, std::size_t expected_points = 25,
                             std::size_t button = 0, std::size_t round = 0) {
  if (epoch.empty()) throw ParameterError("empty epoch");
  FeatureVector fv;
  fv.button = button;
  fv.round = round;
  fv.values.reserve(epoch.size() * expected_points);
  for (const auto& row : epoch) {
    if (row.size() != expected_points) {
      throw ParameterError("epoch row has " + std::to_string(row.size()) + " points, expected " +
                           std::to_string(expected_points));
    }
    fv.values.insert(fv.values.end(), row.begin(), row.end());
  }
  return fv;
}

inline EpochMatrix unflatten(std::span<const double> values, std::size_t channels) {
  if (channels == 0 || values.size() % channels != 0) throw ParameterError("bad feature shape");
  const std::size_t points = values.size() / channels;
  EpochMatrix epoch(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    epoch[c].assign(values.begin() + static_cast<std::ptrdiff_t>(c * points),
                    values.begin() + static_cast<std::ptrdiff_t>((c + 1) * points));
  }
  return epoch;
}

// One feature vector per event. The round of an event is the number of earlier events for
// the same button. Expects an already filtered recording.
inline std::vector<FeatureVector> extract_features(const EegRecording& filtered,
                                                   const EpochWindow& window = {}) {
  std::vector<FeatureVector> out;
  out.reserve(filtered.events.size());
  std::vector<std::size_t> seen;
  const std::size_t points = window.points(filtered.sample_rate_hz);
  for (const auto& e : filtered.events) {
    if (e.button >= seen.size()) seen.resize(e.button + 1, 0);
    out.push_back(flatten(extract_epoch(filtered, e.sample_index, window), points, e.button,
                          seen[e.button]++));
  }
  return out;
}

// Mean of the rounds 0..R-1 feature vectors of one button.
inline AveragedFeature average_rounds(std::span<const FeatureVector> features, std::size_t rounds) {
  if (rounds == 0) throw ParameterError("need at least one round to average");
  if (features.size() < rounds) throw ConsistencyError("fewer feature vectors than rounds requested");
  const std::size_t button = features.front().button;
  const std::size_t dim = features.front().values.size();
  std::vector<const FeatureVector*> by_round(rounds, nullptr);
  for (const auto& f : features) {
    if (f.button != button) throw ConsistencyError("feature vectors from different buttons");
    if (f.values.size() != dim) throw ConsistencyError("feature dimensions differ");
    if (f.round >= rounds) continue;
    if (by_round[f.round]) throw ConsistencyError("round " + std::to_string(f.round) + " repeated");
    by_round[f.round] = &f;
  }
  AveragedFeature avg{std::vector<double>(dim, 0.0), button, rounds};
  for (std::size_t r = 0; r < rounds; ++r) {
    if (!by_round[r]) throw ConsistencyError("round " + std::to_string(r) + " missing");
    for (std::size_t i = 0; i < dim; ++i) avg.values[i] += by_round[r]->values[i];
  }
  for (double& v : avg.values) v /= static_cast<double>(rounds);
  return avg;
}

// Groups features by button (index = button id).
inline std::vector<std::vector<FeatureVector>> group_by_button(std::span<const FeatureVector> features,
                                                               std::size_t n_buttons) {
  std::vector<std::vector<FeatureVector>> grouped(n_buttons);
  for (const auto& f : features) {
    if (f.button >= n_buttons) throw ConsistencyError("feature for unknown button");
    grouped[f.button].push_back(f);
  }
  return grouped;
}

// CSV with one row per flash: button,round,v0..v(d-1).
inline void save_features(const std::vector<FeatureVector>& features, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  const std::size_t dim = features.empty() ? 0 : features.front().values.size();
  out << "button,round";
  for (std::size_t i = 0; i < dim; ++i) out << ",v" << i;
  out << '\n';
  for (const auto& f : features) {
    out << f.button << ',' << f.round;
    for (double v : f.values) out << ',' << detail::format_double(v);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

inline std::vector<FeatureVector> load_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(1, "missing header row");
  detail::strip_cr(line);
  const std::size_t columns = detail::split_csv(line).size();
  if (columns < 3) throw FormatError(1, "expected button,round and feature columns");
  std::vector<FeatureVector> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != columns) throw FormatError(line_no, "wrong column count");
    FeatureVector f;
    f.button = detail::parse_index(fields[0], line_no);
    f.round = detail::parse_index(fields[1], line_no);
    for (std::size_t i = 2; i < fields.size(); ++i) f.values.push_back(detail::parse_double(fields[i], line_no));
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace mindlink
