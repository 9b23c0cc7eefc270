// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "mindlink/session.hpp"
#include "oracles.hpp"

using namespace mindlink;

namespace {

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %-28s %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const char* const kTexts[] = {"HELLO WORLD", "HI, SEU", "HI, SCUT", "BCI METASURFACE"};

// Every decision seen anywhere in the run, for the stopping-rule audit.
struct DecisionAudit {
  std::size_t decisions = 0;
  std::size_t violations = 0;

  void add(const std::vector<Decision>& history, double threshold, std::size_t max_rounds) {
    for (std::size_t i = 0; i < history.size(); ++i) {
      const auto& d = history[i];
      ++decisions;
      const bool rule = d.gap > threshold || d.rounds_used == max_rounds;
      const bool last = i + 1 == history.size();
      if (d.selected() != rule || d.selected() != last) ++violations;
    }
  }
};

void frame_coding() {
  const auto bits = bits_to_string(encode_char('A'));
  report(1, "frame coding", bits == "1111111000000001000001", "A -> " + bits);
}

void feature_dimension() {
  const SessionConfig cfg;
  const auto s = build_schedule(40, 2, cfg.soa_ms, 1);
  const auto rec = bandpass(synthesize_eeg(s, 5, cfg.p300(), cfg.noise_uv_rms, 1));
  const auto features = extract_features(rec);
  bool ok = features.size() == 80;
  for (const auto& f : features) ok = ok && f.values.size() == 750;
  const auto epoch = extract_epoch(rec, rec.events.front().sample_index);
  for (const auto& row : epoch) ok = ok && row.size() == 25;
  report(2, "feature dimension", ok, fmt("%zu epochs, 30 x %zu -> %zu", features.size(), epoch.front().size(),
                                         features.front().values.size()));
}

void text_fidelity(DecisionAudit& audit) {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t errors = 0;
  std::size_t chars = 0;
  std::size_t rounds = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SessionConfig cfg;
    cfg.seed = seed;
    cfg.snr_channel_db = 30.0;
    const auto dec = calibrate(cfg).decoder;
    for (const char* text : kTexts) {
      const auto r = run_e2e(cfg, dec, text);
      errors += r.character_errors;
      for (const auto& c : r.spelled.chars) {
        audit.add(c.decisions, cfg.threshold, cfg.rounds_max);
        rounds += c.rounds_used;
        ++chars;
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(3, "end-to-end text fidelity", errors == 0 && secs < 120.0,
         fmt("%zu character errors over 20 runs x 4 texts (%zu chars, mean %.2f rounds), %.1f s", errors, chars,
             static_cast<double>(rounds) / static_cast<double>(chars), secs));
}

void bci_accuracy(DecisionAudit& audit) {
  const SessionConfig cfg;
  const auto dec = calibrate(cfg).decoder;
  auto run = [&](std::size_t trials, double amplitude, std::uint64_t stream) {
    P300Template tmpl = cfg.p300();
    tmpl.amplitude_uv = amplitude;
    std::size_t hits = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t target = derive_seed(7, stream, t) % 40;
      const auto s = build_schedule(40, cfg.rounds_max, cfg.soa_ms, derive_seed(7, stream + 1, t));
      const auto rec = synthesize_eeg(s, target, tmpl, cfg.noise_uv_rms, derive_seed(7, stream + 2, t));
      const auto r = run_online_trial(dec, rec, s, cfg.online());
      audit.add(r.history, cfg.threshold, cfg.rounds_max);
      hits += r.button == target ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(trials);
  };
  const double acc = run(100, cfg.p300().amplitude_uv, 100);
  const double chance = run(400, 0.0, 200);
  report(4, "BCI accuracy", acc >= 0.95 && std::abs(chance - 0.025) <= 0.02,
         fmt("%.1f%% over 100 trials; %.2f%% at zero amplitude over 400 (chance 2.5%%)", 100.0 * acc, 100.0 * chance));
}

void beam_angle() {
  const auto lobe30 = main_lobe(far_field(gradient_pattern(20, 30.0, Axis::x)));
  const double law = std::asin(1.0 / (4.0 * 0.5)) * 180.0 / std::numbers::pi;
  const auto lobe15 = main_lobe(far_field(gradient_pattern(20, 15.0, Axis::x)));
  const auto lobe45 = main_lobe(far_field(gradient_pattern(20, 45.0, Axis::x)));
  const bool ok = std::abs(lobe30.theta_deg - law) <= 0.5 && std::abs(lobe15.theta_deg - 15.0) <= 2.0 &&
                  std::abs(lobe45.theta_deg - 45.0) <= 2.0;
  report(6, "beam-angle law", ok,
         fmt("30 -> %.1f (law %.2f), 15 -> %.1f, 45 -> %.1f", lobe30.theta_deg, law, lobe15.theta_deg,
             lobe45.theta_deg));
}

void oam_null() {
  bool ok = true;
  std::string detail;
  for (int l : {1, 2}) {
    const auto p = oam_pattern(20, l);
    const double depth = null_depth_db(far_field(p));
    const double turns = phase_winding_turns(p);
    ok = ok && depth >= 20.0 && std::abs(turns - l) <= 0.05 * l;
    detail += fmt("l=%d null %.1f dB winding %.3f turns; ", l, depth, turns);
  }
  report(7, "OAM null", ok, detail);
}

void rcs_ordering() {
  const auto uniform = far_field(uniform_pattern(20, 0));
  double previous = std::numeric_limits<double>::infinity();
  bool ok = true;
  std::string detail;
  for (int level = 1; level <= 4; ++level) {
    const double r = peak_reduction_db(far_field(rcs_pattern(20, level, SessionConfig{}.rcs_seed)), uniform);
    ok = ok && r < previous && (level != 1 || r >= 10.0);
    previous = r;
    detail += fmt("L%d %.2f dB ", level, r);
  }
  report(8, "RCS ordering", ok, detail);
}

void decoder_oracle() {
  std::mt19937_64 rng(31337);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int instance = 0; instance < 20; ++instance) {
    const std::size_t d = 1 + rng() % 50;
    const std::size_t n = 4 + rng() % 197;
    std::vector<LabeledFeature> ex;
    oracle::Matrix x;
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) {
      const int label = i % 2 == 0 ? 1 : -1;
      std::vector<double> v(d);
      for (double& e : v) e = g(rng) + 0.5 * label;
      ex.push_back({v, label});
      x.push_back(v);
      y.push_back(label);
    }
    const auto dec = P300Decoder::train(ex, 1.0);
    const auto ref = oracle::ridge(x, y, 1.0);
    for (std::size_t j = 0; j < d; ++j) worst = std::max(worst, std::abs(dec.weights()[j] - ref.weights[j]));
    worst = std::max(worst, std::abs(dec.bias() - ref.bias));
  }
  report(9, "decoder-oracle equivalence", worst <= 1e-6, fmt("max |diff| %.3g over 20 instances", worst));
}

void header_uniqueness() {
  const Bits& h = default_header();
  std::size_t false_syncs = 0;
  std::size_t missed = 0;
  for (unsigned p1 = 0; p1 < 256; ++p1) {
    for (unsigned p2 = 0; p2 < 256; ++p2) {
      Bits s = h;
      for (int k = 7; k >= 0; --k) s.push_back(static_cast<std::uint8_t>((p1 >> k) & 1u));
      s.insert(s.end(), h.begin(), h.end());
      for (int k = 7; k >= 0; --k) s.push_back(static_cast<std::uint8_t>((p2 >> k) & 1u));
      std::size_t hits = 0;
      for (std::size_t off = 0; off + h.size() <= s.size(); ++off) {
        if (!std::equal(h.begin(), h.end(), s.begin() + static_cast<std::ptrdiff_t>(off))) continue;
        ++hits;
        if (off != 0 && off != h.size() + kPayloadBits) ++false_syncs;
      }
      if (hits - false_syncs != 2) ++missed;
    }
  }
  report(10, "header uniqueness", false_syncs == 0 && missed == 0,
         fmt("65536 payload pairs, %zu false syncs, %zu missed headers", false_syncs, missed));
}

void throughput() {
  const SessionConfig cfg;
  const double cap = channel_capacity_chars_per_s(cfg.symbol_rate_hz, encode_char('A').size());
  const double per_min = 60.0 / selection_time_s(1, cfg.n_buttons(), cfg.soa_ms);
  const bool ok = cap >= 5e4 / 1.2 && cap <= 5e4 * 1.2 && std::abs(per_min - 12.0) <= 0.25 * 12.0;
  report(11, "throughput accounting", ok, fmt("%.0f chars/s on the link, %.2f chars/min at one round", cap, per_min));
}

void channel_monotonicity() {
  const SessionConfig cfg;
  const auto p = link_patterns(cfg);
  const auto pts = ber_sweep(p.levels, {0, 5, 10, 15, 20}, 100000, cfg.channel());
  bool ok = pts.back().ber == 0.0;
  std::string detail;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i > 0) ok = ok && pts[i].ber <= pts[i - 1].ber;
    detail += fmt("%g dB: %.5f  ", pts[i].snr_db, pts[i].ber);
  }
  report(12, "channel monotonicity", ok, detail);
}

}  // namespace

int main() {
  DecisionAudit audit;
  frame_coding();
  feature_dimension();
  text_fidelity(audit);
  bci_accuracy(audit);
  report(5, "adaptive stopping", audit.decisions > 0 && audit.violations == 0,
         fmt("%zu decisions, %zu violations", audit.decisions, audit.violations));
  beam_angle();
  oam_null();
  rcs_ordering();
  decoder_oracle();
  header_uniqueness();
  throughput();
  channel_monotonicity();
  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
