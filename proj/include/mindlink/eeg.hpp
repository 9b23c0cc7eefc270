#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mindlink/dsp.hpp"
#include "mindlink/errors.hpp"
#include "mindlink/random.hpp"
#include "mindlink/stimulus.hpp"

namespace mindlink {

struct EegEvent {
  std::size_t sample_index = 0;
  std::size_t button = 0;

  bool operator==(const EegEvent&) const = default;
};

// Multichannel recording in microvolts, data[channel][sample].
struct EegRecording {
  double sample_rate_hz = 250.0;
  std::vector<std::string> channel_labels;
  std::vector<std::vector<double>> data;
  std::vector<EegEvent> events;

  std::size_t channels() const { return data.size(); }
  std::size_t samples() const { return data.empty() ? 0 : data.front().size(); }

  void validate() const {
    if (!(sample_rate_hz > 0.0)) throw ParameterError("sample rate must be positive");
    if (!channel_labels.empty() && channel_labels.size() != data.size()) {
      throw ConsistencyError("channel label count does not match data rows");
    }
    for (const auto& row : data) {
      if (row.size() != samples()) throw ConsistencyError("ragged channel data");
    }
    for (const auto& e : events) {
      if (e.sample_index >= samples()) throw BoundsError("event outside recording");
    }
  }
};

// 30-electrode cap following the extended 10-20 system, frontal to occipital.
// Only OZ is pinned down by the source experiment; the remaining positions are a
// conventional layout.
inline const std::vector<std::string>& default_montage() {
  static const std::vector<std::string> labels{
      "FP1", "FP2", "F7",  "F3",  "FZ",  "F4",  "F8",  "FT7", "FC3", "FCZ",
      "FC4", "FT8", "T3",  "C3",  "CZ",  "C4",  "T4",  "TP7", "CP3", "CPZ",
      "CP4", "TP8", "T5",  "P3",  "PZ",  "P4",  "T6",  "O1",  "OZ",  "O2"};
  return labels;
}

// P300 topography: 1.0 over parietal/occipital sites, decaying linearly by electrode row
// toward the forehead.
inline std::vector<double> posterior_gains(const std::vector<std::string>& labels) {
  auto row_of = [](const std::string& l) -> int {
    auto starts = [&](const char* p) { return l.rfind(p, 0) == 0; };
    if (starts("FP")) return 5;
    if (starts("FT") || starts("FC")) return 3;
    if (starts("F")) return 4;
    if (starts("TP") || starts("CP")) return 1;
    if (starts("C") || l == "T3" || l == "T4") return 2;
    return 0;  // P*, O*, T5, T6 and unknown labels
  };
  std::vector<double> gains;
  gains.reserve(labels.size());
  for (const auto& l : labels) gains.push_back(1.0 - 0.18 * row_of(l));
  return gains;
}

struct P300Template {
  double latency_ms = 300.0;
  double width_ms = 80.0;  // Gaussian standard deviation
  double amplitude_uv = 6.0;
  std::vector<double> channel_gains = posterior_gains(default_montage());

  void validate(std::size_t channels) const {
    if (!(latency_ms > 0.0)) throw ParameterError("P300 latency must be positive");
    if (!(width_ms > 0.0)) throw ParameterError("P300 width must be positive");
    if (!(amplitude_uv >= 0.0)) throw ParameterError("P300 amplitude must be non-negative");
    if (channel_gains.size() != channels) throw ParameterError("one gain per channel required");
    double peak = 0.0;
    for (double g : channel_gains) {
      if (g < 0.0 || g > 1.0) throw ParameterError("channel gains must lie in [0, 1]");
      peak = std::max(peak, g);
    }
    if (std::abs(peak - 1.0) > 1e-12) throw ParameterError("channel gains must peak at 1");
  }
};

inline constexpr double kDefaultNoiseUvRms = 10.0;

struct SynthesisOptions {
  double sample_rate_hz = 250.0;
  double lead_in_ms = 1000.0;
  double tail_ms = 1000.0;
  double noise_cutoff_hz = 40.0;
  std::vector<std::string> channel_labels = default_montage();
  // Total length; when unset it is lead-in + schedule + tail.
  std::optional<std::size_t> recording_samples;
};

inline std::size_t ms_to_samples(double ms, double sample_rate_hz) {
  return static_cast<std::size_t>(std::llround(ms * sample_rate_hz / 1000.0));
}

// Synthetic operator: band-limited Gaussian background on every channel plus a Gaussian
// P300 bump after each flash of `target`. A noise level of 0 gives a noiseless recording.
inline EegRecording synthesize_eeg(const StimulusSchedule& schedule, std::size_t target,
                                   const P300Template& tmpl, double noise_uv_rms,
                                   std::uint64_t seed, const SynthesisOptions& options = {}) {
  const std::size_t channels = options.channel_labels.size();
  if (channels == 0) throw ParameterError("recording needs at least one channel");
  tmpl.validate(channels);
  if (!(noise_uv_rms >= 0.0)) throw ParameterError("noise level must be non-negative");
  if (target >= schedule.n_buttons) throw ParameterError("target button out of range");
  const double fs = options.sample_rate_hz;
  if (!(fs > 0.0)) throw ParameterError("sample rate must be positive");

  const std::size_t lead = ms_to_samples(options.lead_in_ms, fs);
  const std::size_t needed =
      lead + ms_to_samples(schedule.duration_ms(), fs) + ms_to_samples(options.tail_ms, fs);
  const std::size_t n = options.recording_samples.value_or(needed);
  if (n < needed) throw ParameterError("schedule is longer than the requested recording length");

  EegRecording rec;
  rec.sample_rate_hz = fs;
  rec.channel_labels = options.channel_labels;
  rec.data.assign(channels, std::vector<double>(n, 0.0));

  if (noise_uv_rms > 0.0) {
    const auto lp = dsp::butterworth(dsp::FilterKind::lowpass, 4,
                                     std::min(options.noise_cutoff_hz, 0.45 * fs), fs);
    const std::size_t warmup = ms_to_samples(1000.0, fs);
    std::vector<double> buf(n + warmup);
    for (std::size_t c = 0; c < channels; ++c) {
      std::mt19937_64 rng(derive_seed(seed, 0x6565u, c));
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (double& v : buf) v = gauss(rng);
      dsp::sosfilt_inplace(lp, buf);
      const std::span<const double> kept(buf.data() + warmup, n);
      const double scale = noise_uv_rms / dsp::rms(kept);
      for (std::size_t i = 0; i < n; ++i) rec.data[c][i] = kept[i] * scale;
    }
  }

  rec.events.reserve(schedule.flashes.size());
  const double sigma = tmpl.width_ms * fs / 1000.0;
  const double latency = tmpl.latency_ms * fs / 1000.0;
  const auto reach = static_cast<std::ptrdiff_t>(std::ceil(6.0 * sigma));
  for (const auto& flash : schedule.flashes) {
    const std::size_t onset = lead + ms_to_samples(flash.onset_ms, fs);
    rec.events.push_back({onset, flash.button});
    if (flash.button != target || tmpl.amplitude_uv == 0.0) continue;
    const double peak = static_cast<double>(onset) + latency;
    const auto centre = static_cast<std::ptrdiff_t>(std::llround(peak));
    for (std::ptrdiff_t i = centre - reach; i <= centre + reach; ++i) {
      if (i < 0 || i >= static_cast<std::ptrdiff_t>(n)) continue;
      const double d = (static_cast<double>(i) - peak) / sigma;
      const double bump = tmpl.amplitude_uv * std::exp(-0.5 * d * d);
      for (std::size_t c = 0; c < channels; ++c) {
        rec.data[c][static_cast<std::size_t>(i)] += tmpl.channel_gains[c] * bump;
      }
    }
  }
  return rec;
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    if (used != s.size()) throw FormatError(line, "trailing characters in number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw FormatError(line, "not a number: '" + s + "'");
  }
}

inline std::size_t parse_index(const std::string& s, std::size_t line) {
  const double v = parse_double(s, line);
  if (v < 0.0 || v != std::floor(v)) throw FormatError(line, "not a non-negative integer: '" + s + "'");
  return static_cast<std::size_t>(v);
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

// Writes `t_ms,ch1..chN` rows and a separate `sample_index,button_id` events file.
inline void save_recording(const EegRecording& rec, const std::string& eeg_path,
                           const std::string& events_path) {
  rec.validate();
  std::ofstream out(eeg_path);
  if (!out) throw IoError("cannot open " + eeg_path + " for writing");
  out << "t_ms";
  for (std::size_t c = 0; c < rec.channels(); ++c) out << ",ch" << (c + 1);
  out << '\n';
  for (std::size_t i = 0; i < rec.samples(); ++i) {
    out << detail::format_double(static_cast<double>(i) * 1000.0 / rec.sample_rate_hz);
    for (std::size_t c = 0; c < rec.channels(); ++c) out << ',' << detail::format_double(rec.data[c][i]);
    out << '\n';
  }
  std::ofstream ev(events_path);
  if (!ev) throw IoError("cannot open " + events_path + " for writing");
  ev << "sample_index,button_id\n";
  for (const auto& e : rec.events) ev << e.sample_index << ',' << e.button << '\n';
  if (!out || !ev) throw IoError("write failed");
}

// Sample rate comes from the t_ms spacing of the first two rows (250 Hz for a single row).
inline EegRecording load_recording(const std::string& eeg_path, const std::string& events_path) {
  std::ifstream in(eeg_path);
  if (!in) throw IoError("cannot open " + eeg_path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(1, "missing header row");
  detail::strip_cr(line);
  const auto header = detail::split_csv(line);
  if (header.size() < 2 || header.front() != "t_ms") {
    throw FormatError(1, "header must be t_ms followed by channel columns");
  }
  const std::size_t channels = header.size() - 1;

  EegRecording rec;
  rec.data.assign(channels, {});
  std::vector<double> times;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != header.size()) {
      throw FormatError(line_no, "expected " + std::to_string(header.size()) + " columns, got " +
                                     std::to_string(fields.size()));
    }
    times.push_back(detail::parse_double(fields[0], line_no));
    for (std::size_t c = 0; c < channels; ++c) {
      rec.data[c].push_back(detail::parse_double(fields[c + 1], line_no));
    }
  }
  rec.sample_rate_hz = 250.0;
  if (times.size() >= 2) {
    const double dt = times[1] - times[0];
    if (!(dt > 0.0)) throw FormatError(3, "t_ms must increase");
    rec.sample_rate_hz = 1000.0 / dt;
  }
  rec.channel_labels = channels == default_montage().size() ? default_montage()
                                                            : std::vector<std::string>{};
  if (rec.channel_labels.empty()) {
    for (std::size_t c = 0; c < channels; ++c) rec.channel_labels.push_back(header[c + 1]);
  }

  std::ifstream ev(events_path);
  if (!ev) throw IoError("cannot open " + events_path);
  line_no = 0;
  while (std::getline(ev, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("sample_index", 0) == 0) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != 2) throw FormatError(line_no, "event rows need sample_index,button_id");
    const EegEvent e{detail::parse_index(fields[0], line_no), detail::parse_index(fields[1], line_no)};
    if (e.sample_index >= rec.samples()) throw FormatError(line_no, "event beyond end of recording");
    rec.events.push_back(e);
  }
  return rec;
}

}  // namespace mindlink
