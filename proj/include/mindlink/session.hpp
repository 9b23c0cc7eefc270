#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mindlink/channel.hpp"
#include "mindlink/codec.hpp"
#include "mindlink/decoder.hpp"
#include "mindlink/eeg.hpp"
#include "mindlink/errors.hpp"
#include "mindlink/metasurface.hpp"
#include "mindlink/pipeline.hpp"
#include "mindlink/random.hpp"
#include "mindlink/stimulus.hpp"

namespace mindlink {

// Button -> character map of the 40-button text speller. Placeholder ordering.
inline constexpr std::string_view kDefaultLayout = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 ,.!";

struct SessionConfig {
  std::uint64_t seed = 1;
  // P300 amplitude over background noise RMS.
  double snr_eeg = 0.6;
  double noise_uv_rms = kDefaultNoiseUvRms;
  double snr_channel_db = 30.0;
  std::size_t rounds_max = 10;
  double threshold = 0.2;
  std::string header{kDefaultHeader};
  std::size_t array_n = 20;
  double spacing_wavelengths = 0.5;
  std::string output_dir = ".";

  std::size_t calibration_trials = 30;
  std::size_t calibration_rounds = 10;
  double lambda = kDefaultRidgeLambda;
  double soa_ms = 120.0;
  std::string layout{kDefaultLayout};
  std::uint64_t rcs_seed = 2022;
  int adc_bits = 12;
  double symbol_rate_hz = 1e6;
  std::size_t oversample = 10;
  std::size_t gap_symbols = 0;
  Direction receiver{};

  std::size_t n_buttons() const { return layout.size(); }

  void validate() const {
    if (!(snr_eeg >= 0.0)) throw ParameterError("snr_eeg must be non-negative");
    if (!(noise_uv_rms > 0.0)) throw ParameterError("noise_uv_rms must be positive");
    if (std::isnan(snr_channel_db)) throw ParameterError("snr_channel_db is NaN");
    if (rounds_max < 1) throw ParameterError("rounds_max must be at least 1");
    if (!(threshold >= 0.0)) throw ParameterError("threshold must be non-negative");
    if (parse_bits(header).empty()) throw ParameterError("header must contain at least one bit");
    if (array_n < 1) throw ParameterError("array_n must be at least 1");
    if (!(spacing_wavelengths > 0.0)) throw ParameterError("spacing_wavelengths must be positive");
    if (calibration_rounds < 1) throw ParameterError("calibration_rounds must be at least 1");
    if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
    if (!(soa_ms > 0.0)) throw ParameterError("soa_ms must be positive");
    if (layout.size() < 2) throw ParameterError("layout needs at least two buttons");
    for (std::size_t i = 0; i < layout.size(); ++i) {
      if (layout.find(layout[i]) != i) throw ParameterError("layout characters must be unique");
    }
    ChannelConfig ch = channel();
    ch.validate();
  }

  P300Template p300() const {
    P300Template t;
    t.amplitude_uv = snr_eeg * noise_uv_rms;
    return t;
  }

  ChannelConfig channel() const {
    ChannelConfig c;
    c.symbol_rate_hz = symbol_rate_hz;
    c.oversample = oversample;
    c.snr_db = snr_channel_db;
    c.receiver = receiver;
    c.adc_bits = adc_bits;
    c.seed = seed;
    return c;
  }

  OnlineOptions online() const {
    OnlineOptions o;
    o.threshold = threshold;
    o.max_rounds = rounds_max;
    return o;
  }

  Bits header_bits() const { return parse_bits(header); }
};

inline void to_json(nlohmann::json& j, const SessionConfig& c) {
  j = nlohmann::json{{"seed", c.seed},
                     {"snr_eeg", c.snr_eeg},
                     {"noise_uv_rms", c.noise_uv_rms},
                     {"snr_channel_db", c.snr_channel_db},
                     {"rounds_max", c.rounds_max},
                     {"threshold", c.threshold},
                     {"header", c.header},
                     {"array_n", c.array_n},
                     {"spacing_wavelengths", c.spacing_wavelengths},
                     {"output_dir", c.output_dir},
                     {"calibration_trials", c.calibration_trials},
                     {"calibration_rounds", c.calibration_rounds},
                     {"lambda", c.lambda},
                     {"soa_ms", c.soa_ms},
                     {"layout", c.layout},
                     {"rcs_seed", c.rcs_seed},
                     {"adc_bits", c.adc_bits},
                     {"symbol_rate_hz", c.symbol_rate_hz},
                     {"oversample", c.oversample},
                     {"gap_symbols", c.gap_symbols},
                     {"receiver_theta_deg", c.receiver.theta_deg},
                     {"receiver_phi_deg", c.receiver.phi_deg}};
}

// Keys absent from `j` keep their current value; unknown keys are rejected.
inline void merge_config(SessionConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw ParameterError("config must be a JSON object");
  nlohmann::json known;
  to_json(known, c);
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ParameterError("unknown config key '" + key + "'");
  }
  try {
    c.seed = j.value("seed", c.seed);
    c.snr_eeg = j.value("snr_eeg", c.snr_eeg);
    c.noise_uv_rms = j.value("noise_uv_rms", c.noise_uv_rms);
    c.snr_channel_db = j.value("snr_channel_db", c.snr_channel_db);
    c.rounds_max = j.value("rounds_max", c.rounds_max);
    c.threshold = j.value("threshold", c.threshold);
    c.header = j.value("header", c.header);
    c.array_n = j.value("array_n", c.array_n);
    c.spacing_wavelengths = j.value("spacing_wavelengths", c.spacing_wavelengths);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.calibration_trials = j.value("calibration_trials", c.calibration_trials);
    c.calibration_rounds = j.value("calibration_rounds", c.calibration_rounds);
    c.lambda = j.value("lambda", c.lambda);
    c.soa_ms = j.value("soa_ms", c.soa_ms);
    c.layout = j.value("layout", c.layout);
    c.rcs_seed = j.value("rcs_seed", c.rcs_seed);
    c.adc_bits = j.value("adc_bits", c.adc_bits);
    c.symbol_rate_hz = j.value("symbol_rate_hz", c.symbol_rate_hz);
    c.oversample = j.value("oversample", c.oversample);
    c.gap_symbols = j.value("gap_symbols", c.gap_symbols);
    c.receiver.theta_deg = j.value("receiver_theta_deg", c.receiver.theta_deg);
    c.receiver.phi_deg = j.value("receiver_phi_deg", c.receiver.phi_deg);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("bad config value: ") + e.what());
  }
}

// Seed streams, so that each stage draws from an independent generator.
namespace streams {
inline constexpr std::uint64_t calibration_schedule = 1;
inline constexpr std::uint64_t calibration_eeg = 2;
inline constexpr std::uint64_t calibration_target = 3;
inline constexpr std::uint64_t spell_schedule = 4;
inline constexpr std::uint64_t spell_eeg = 5;
inline constexpr std::uint64_t channel_noise = 6;
}  // namespace streams

struct CalibrationTrial {
  std::size_t target = 0;
  double target_score = 0.0;
  double best_nontarget_score = 0.0;
  std::size_t predicted = 0;
};

struct CalibrationResult {
  P300Decoder decoder;
  std::vector<CalibrationTrial> trials;
  std::vector<FeatureVector> features;  // every flash, all trials
};

// Round-averaged training vectors of one calibration trial: one per button.
inline std::vector<AveragedFeature> averaged_trial_features(const EegRecording& rec, std::size_t n_buttons,
                                                            std::size_t rounds,
                                                            std::vector<FeatureVector>* flashes = nullptr) {
  const auto features = extract_features(bandpass(rec));
  const auto grouped = group_by_button(features, n_buttons);
  std::vector<AveragedFeature> out;
  out.reserve(n_buttons);
  for (const auto& g : grouped) out.push_back(average_rounds(g, rounds));
  if (flashes) flashes->insert(flashes->end(), features.begin(), features.end());
  return out;
}

// Supervised calibration on synthetic trials with known targets, then ridge training on the
// all-round averages (one positive and n_buttons - 1 negatives per trial).
inline CalibrationResult calibrate(const SessionConfig& cfg, bool keep_features = false) {
  cfg.validate();
  const std::size_t n = cfg.n_buttons();
  const P300Template tmpl = cfg.p300();
  std::vector<LabeledFeature> examples;
  std::vector<std::vector<AveragedFeature>> per_trial;
  std::vector<std::size_t> targets;
  std::vector<FeatureVector> flashes;
  for (std::size_t t = 0; t < cfg.calibration_trials; ++t) {
    const std::size_t target = derive_seed(cfg.seed, streams::calibration_target, t) % n;
    const auto schedule = build_schedule(n, cfg.calibration_rounds, cfg.soa_ms,
                                         derive_seed(cfg.seed, streams::calibration_schedule, t));
    const auto rec = synthesize_eeg(schedule, target, tmpl, cfg.noise_uv_rms,
                                    derive_seed(cfg.seed, streams::calibration_eeg, t));
    auto averaged = averaged_trial_features(rec, n, cfg.calibration_rounds, keep_features ? &flashes : nullptr);
    for (const auto& a : averaged) examples.push_back({a.values, a.button == target ? 1 : -1});
    per_trial.push_back(std::move(averaged));
    targets.push_back(target);
  }
  CalibrationResult result{
      P300Decoder::train(examples, cfg.lambda, {cfg.calibration_trials, cfg.calibration_rounds, cfg.seed}),
      {}, std::move(flashes)};
  for (std::size_t t = 0; t < per_trial.size(); ++t) {
    CalibrationTrial row;
    row.target = targets[t];
    row.best_nontarget_score = -std::numeric_limits<double>::infinity();
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& a : per_trial[t]) {
      const double s = result.decoder.score(a);
      if (a.button == row.target) {
        row.target_score = s;
      } else {
        row.best_nontarget_score = std::max(row.best_nontarget_score, s);
      }
      if (s > best) {
        best = s;
        row.predicted = a.button;
      }
    }
    result.trials.push_back(row);
  }
  return result;
}

struct SpelledChar {
  char intended = 0;
  char selected = 0;
  std::size_t button = 0;
  std::size_t rounds_used = 0;
  double elapsed_s = 0.0;
  std::vector<Decision> decisions;
};

struct SpellResult {
  std::string text;
  std::vector<SpelledChar> chars;

  std::size_t errors() const {
    return static_cast<std::size_t>(
        std::count_if(chars.begin(), chars.end(), [](const SpelledChar& c) { return c.intended != c.selected; }));
  }
  double elapsed_s() const {
    double s = 0.0;
    for (const auto& c : chars) s += c.elapsed_s;
    return s;
  }
};

// Simulated selection time: rounds x buttons x SOA, no wall-clock pacing.
inline double selection_time_s(std::size_t rounds, std::size_t n_buttons, double soa_ms) {
  return static_cast<double>(rounds * n_buttons) * soa_ms / 1000.0;
}

// One online trial per character. `p300` overrides the synthetic operator's template.
inline SpellResult spell(const SessionConfig& cfg, const P300Decoder& decoder, std::string_view text,
                         std::optional<P300Template> p300 = std::nullopt) {
  cfg.validate();
  const std::size_t n = cfg.n_buttons();
  const P300Template tmpl = p300.value_or(cfg.p300());
  SpellResult result;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto pos = cfg.layout.find(text[i]);
    if (pos == std::string::npos) {
      throw ParameterError(std::string("character '") + text[i] + "' is not on the speller layout");
    }
    const auto schedule =
        build_schedule(n, cfg.rounds_max, cfg.soa_ms, derive_seed(cfg.seed, streams::spell_schedule, i));
    const auto rec = synthesize_eeg(schedule, pos, tmpl, cfg.noise_uv_rms, derive_seed(cfg.seed, streams::spell_eeg, i));
    auto trial = run_online_trial(decoder, rec, schedule, cfg.online());
    SpelledChar c;
    c.intended = text[i];
    c.button = trial.button;
    c.selected = cfg.layout[trial.button];
    c.rounds_used = trial.rounds_used;
    c.elapsed_s = selection_time_s(trial.rounds_used, n, cfg.soa_ms);
    c.decisions = std::move(trial.history);
    result.text.push_back(c.selected);
    result.chars.push_back(std::move(c));
  }
  return result;
}

struct LinkPatterns {
  CodingPattern high;
  CodingPattern low;
  SymbolLevels levels;
};

// '1' = uniform single beam toward the broadside receiver, '0' = fully randomized RCS pattern.
inline LinkPatterns link_patterns(const SessionConfig& cfg) {
  auto high = uniform_pattern(cfg.array_n, 0, cfg.spacing_wavelengths);
  auto low = rcs_pattern(cfg.array_n, 1, cfg.rcs_seed, cfg.spacing_wavelengths);
  const auto levels = symbol_levels(high, low, cfg.receiver);
  return {std::move(high), std::move(low), levels};
}

// Positionwise mismatches plus the length difference.
inline std::size_t character_errors(std::string_view sent, std::string_view received) {
  std::size_t errors = sent.size() > received.size() ? sent.size() - received.size() : received.size() - sent.size();
  for (std::size_t i = 0; i < std::min(sent.size(), received.size()); ++i) {
    if (sent[i] != received[i]) ++errors;
  }
  return errors;
}

struct LinkResult {
  Bits bits;
  SymbolLevels levels;
  SampleStream clean;
  SampleStream detected;
  std::string received;
  bool synced = true;
  std::string diagnostic;
};

inline SampleStream channel_pass(const SessionConfig& cfg, const SampleStream& clean, const SymbolLevels& levels) {
  const auto noisy = add_noise(clean, cfg.snr_channel_db, derive_seed(cfg.seed, streams::channel_noise));
  return detect(noisy, cfg.adc_bits, levels.high);
}

inline LinkResult receive(const SessionConfig& cfg, const SampleStream& detected) {
  LinkResult r;
  r.detected = detected;
  try {
    r.received = decode_stream(detected, cfg.header_bits());
  } catch (const TruncationError& e) {
    r.received = e.partial_text();
    r.synced = false;
    r.diagnostic = e.what();
  }
  if (r.received.empty() && !detected.samples.empty()) {
    r.synced = false;
    if (r.diagnostic.empty()) r.diagnostic = "no frame header found";
  }
  return r;
}

inline LinkResult transmit(const SessionConfig& cfg, std::string_view text) {
  cfg.validate();
  const auto patterns = link_patterns(cfg);
  const Bits bits = encode_text(text, cfg.header_bits(), cfg.gap_symbols);
  const auto clean = modulate(bits, patterns.levels, cfg.channel());
  LinkResult r = receive(cfg, channel_pass(cfg, clean, patterns.levels));
  r.bits = bits;
  r.levels = patterns.levels;
  r.clean = clean;
  return r;
}

struct E2eResult {
  SpellResult spelled;
  LinkResult link;
  std::size_t spelling_errors = 0;
  std::size_t character_errors = 0;  // intended text vs received text
  double bit_error_rate = 0.0;       // received symbols vs transmitted bits
};

inline E2eResult run_e2e(const SessionConfig& cfg, const P300Decoder& decoder, std::string_view text) {
  E2eResult r;
  r.spelled = spell(cfg, decoder, text);
  r.spelling_errors = r.spelled.errors();
  r.link = transmit(cfg, r.spelled.text);
  r.character_errors = character_errors(text, r.link.received);
  const double threshold = 0.5 * (r.link.levels.high + r.link.levels.low);
  const Bits rx = slice_symbols(r.link.detected, threshold);
  r.bit_error_rate = r.link.bits.empty() ? 0.0
                                         : static_cast<double>(count_bit_errors(r.link.bits, rx)) /
                                               static_cast<double>(r.link.bits.size());
  return r;
}

enum class PatternKind { uniform, gradient, oam, rcs };

struct PatternRequest {
  PatternKind kind = PatternKind::uniform;
  int state = 0;             // uniform
  double theta_deg = 30.0;   // gradient
  Axis axis = Axis::x;       // gradient
  int mode = 1;              // oam
  int level = 1;             // rcs
  double theta_step_deg = kDefaultThetaStep;
  double phi_step_deg = kDefaultPhiStep;
};

struct PatternReport {
  CodingPattern pattern;
  FarField field;
  Lobe lobe;
  nlohmann::json summary;
  bool passed = true;
};

// Gradient acceptance: within one theta step when the ramp has an exact integer period,
// otherwise within 2 degrees.
inline double gradient_tolerance_deg(double theta_deg, double spacing, double theta_step_deg) {
  const double period = 1.0 / (spacing * std::sin(theta_deg * kDegree));
  return std::abs(period - std::round(period)) < 1e-9 ? theta_step_deg : 2.0;
}

inline PatternReport make_pattern(const SessionConfig& cfg, const PatternRequest& req) {
  const std::size_t n = cfg.array_n;
  const double d = cfg.spacing_wavelengths;
  std::optional<CodingPattern> pattern;
  switch (req.kind) {
    case PatternKind::uniform: pattern = uniform_pattern(n, req.state, d); break;
    case PatternKind::gradient: pattern = gradient_pattern(n, req.theta_deg, req.axis, d); break;
    case PatternKind::oam: pattern = oam_pattern(n, req.mode, d); break;
    case PatternKind::rcs: pattern = rcs_pattern(n, req.level, cfg.rcs_seed, d); break;
  }
  PatternReport r{*pattern, far_field(*pattern, req.theta_step_deg, req.phi_step_deg), {}, {}, true};
  r.lobe = main_lobe(r.field);
  r.summary = {{"kind", pattern->name()},
               {"array_n", n},
               {"spacing_wavelengths", d},
               {"main_lobe_theta_deg", r.lobe.theta_deg},
               {"main_lobe_phi_deg", r.lobe.phi_deg},
               {"peak_magnitude", r.field.peak}};
  switch (req.kind) {
    case PatternKind::uniform:
      r.passed = r.lobe.theta_deg == 0.0;
      break;
    case PatternKind::gradient: {
      const double tol = gradient_tolerance_deg(req.theta_deg, d, req.theta_step_deg);
      r.summary["target_theta_deg"] = req.theta_deg;
      r.summary["tolerance_deg"] = tol;
      r.passed = std::abs(r.lobe.theta_deg - req.theta_deg) <= tol + 1e-9;
      break;
    }
    case PatternKind::oam: {
      const double depth = null_depth_db(r.field);
      const double turns = phase_winding_turns(*pattern, 5.0, req.phi_step_deg);
      r.summary["mode"] = req.mode;
      r.summary["null_depth_db"] = depth;
      r.summary["phase_winding_turns"] = turns;
      r.passed = depth >= 20.0 && std::abs(turns - req.mode) <= 0.05 * std::abs(req.mode) &&
                 r.lobe.theta_deg > 0.0;
      break;
    }
    case PatternKind::rcs: {
      const double reduction = peak_reduction_db(r.field, far_field(uniform_pattern(n, 0, d), req.theta_step_deg,
                                                                    req.phi_step_deg));
      r.summary["level"] = req.level;
      r.summary["peak_reduction_db"] = reduction;
      r.passed = reduction > 0.0 && (req.level != 1 || reduction >= 10.0);
      break;
    }
  }
  r.summary["passed"] = r.passed;
  return r;
}

}  // namespace mindlink
