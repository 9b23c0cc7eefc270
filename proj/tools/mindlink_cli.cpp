// mindlink: command-line front end for the BCI-to-metasurface text link simulator.
//
// Exit codes: 0 success, 1 failed verification / training / decoding, 2 I/O error,
// 3 usage or parameter error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mindlink/session.hpp"

namespace fs = std::filesystem;
using namespace mindlink;

namespace {

enum ExitCode : int { kOk = 0, kFailed = 1, kIo = 2, kUsage = 3 };

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

SessionConfig load_session(const Globals& g) {
  SessionConfig cfg;
  if (!g.config_path.empty()) {
    std::ifstream in(g.config_path);
    if (!in) throw IoError("cannot open config " + g.config_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ParameterError("config is not valid JSON: " + std::string(e.what()));
    }
    merge_config(cfg, j);
  }
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out.empty()) cfg.output_dir = g.out;
  cfg.validate();
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.output_dir + ": " + ec.message());
  return cfg;
}

std::string out_path(const SessionConfig& cfg, const std::string& name) {
  return (fs::path(cfg.output_dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

void write_json(const std::string& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

StreamFormat parse_format(const std::string& s) {
  if (s == "csv") return StreamFormat::csv;
  if (s == "f32") return StreamFormat::f32;
  throw ParameterError("stream format must be csv or f32");
}

std::string stream_name(StreamFormat f) { return f == StreamFormat::csv ? "stream.csv" : "stream.f32"; }

int cmd_calibrate(const Globals& g, std::optional<std::size_t> trials, bool dump_features) {
  SessionConfig cfg = load_session(g);
  if (trials) cfg.calibration_trials = *trials;
  const auto result = calibrate(cfg, dump_features);
  save_decoder(result.decoder, out_path(cfg, "decoder.json"));
  std::ostringstream report;
  report << "trial,target,target_score,best_nontarget_score,predicted\n";
  std::size_t correct = 0;
  for (std::size_t t = 0; t < result.trials.size(); ++t) {
    const auto& r = result.trials[t];
    report << t << ',' << r.target << ',' << detail::format_double(r.target_score) << ','
           << detail::format_double(r.best_nontarget_score) << ',' << r.predicted << '\n';
    correct += r.predicted == r.target;
  }
  write_text(out_path(cfg, "calibration_report.csv"), report.str());
  if (dump_features) save_features(result.features, out_path(cfg, "features.csv"));
  std::cout << "decoder: " << out_path(cfg, "decoder.json") << " (" << result.decoder.dimension()
            << " weights)\ncalibration accuracy: " << correct << "/" << result.trials.size() << "\n";
  return kOk;
}

P300Decoder decoder_for(const SessionConfig& cfg, const std::string& decoder_path) {
  const std::string path = decoder_path.empty() ? out_path(cfg, "decoder.json") : decoder_path;
  if (!fs::exists(path)) throw IoError("decoder file not found: " + path + " (run calibrate first)");
  return load_decoder(path);
}

void write_spell_report(const SessionConfig& cfg, const SpellResult& s) {
  std::ostringstream out;
  out << "position,intended,selected,button,rounds_used,elapsed_s,final_gap\n";
  for (std::size_t i = 0; i < s.chars.size(); ++i) {
    const auto& c = s.chars[i];
    out << i << ",\"" << c.intended << "\",\"" << c.selected << "\"," << c.button << ',' << c.rounds_used << ','
        << detail::format_double(c.elapsed_s) << ',' << detail::format_double(c.decisions.back().gap) << '\n';
  }
  write_text(out_path(cfg, "spell_report.csv"), out.str());
}

int cmd_spell(const Globals& g, const std::string& text, const std::string& decoder_path) {
  const SessionConfig cfg = load_session(g);
  const auto decoder = decoder_for(cfg, decoder_path);
  const auto result = spell(cfg, decoder, text);
  write_spell_report(cfg, result);
  std::cout << "spelled: " << result.text << "\nerrors: " << result.errors() << "\nsimulated time: "
            << result.elapsed_s() << " s\n";
  return result.errors() == 0 ? kOk : kFailed;
}

int cmd_encode(const Globals& g, const std::string& text) {
  const SessionConfig cfg = load_session(g);
  const Bits bits = encode_text(text, cfg.header_bits(), cfg.gap_symbols);
  save_bits(bits, out_path(cfg, "bits.txt"));
  std::cout << bits_to_string(bits) << '\n';
  return kOk;
}

int cmd_transmit(const Globals& g, const std::string& text, const std::string& bits_path,
                 const std::string& format, bool clean) {
  SessionConfig cfg = load_session(g);
  if (clean) cfg.snr_channel_db = std::numeric_limits<double>::infinity();
  const auto fmt = parse_format(format);
  if (text.empty() && bits_path.empty()) throw ParameterError("transmit needs --text or --bits");
  const Bits bits = bits_path.empty() ? encode_text(text, cfg.header_bits(), cfg.gap_symbols) : load_bits(bits_path);
  const auto patterns = link_patterns(cfg);
  const auto stream = channel_pass(cfg, modulate(bits, patterns.levels, cfg.channel()), patterns.levels);
  save_stream(stream, out_path(cfg, stream_name(fmt)), fmt);
  std::cout << "levels: high " << patterns.levels.high << " low " << patterns.levels.low << " ("
            << level_ratio_db(patterns.levels) << " dB)\nsamples: " << stream.size() << " -> "
            << out_path(cfg, stream_name(fmt)) << '\n';
  return kOk;
}

int cmd_receive(const Globals& g, const std::string& stream_path, const std::string& format) {
  const SessionConfig cfg = load_session(g);
  const auto stream = load_stream(stream_path, parse_format(format),
                                  cfg.symbol_rate_hz * static_cast<double>(cfg.oversample), cfg.symbol_rate_hz);
  const auto r = receive(cfg, stream);
  write_text(out_path(cfg, "received.txt"), r.received + "\n");
  std::cout << "received: " << r.received << '\n';
  if (!r.synced) {
    std::cerr << "receive: " << r.diagnostic << '\n';
    return kFailed;
  }
  return kOk;
}

int cmd_e2e(const Globals& g, const std::string& text, const std::string& decoder_path) {
  const SessionConfig cfg = load_session(g);
  const P300Decoder decoder = decoder_path.empty() && !fs::exists(out_path(cfg, "decoder.json"))
                                  ? calibrate(cfg).decoder
                                  : decoder_for(cfg, decoder_path);
  const auto r = run_e2e(cfg, decoder, text);
  write_spell_report(cfg, r.spelled);
  save_stream(r.link.clean, out_path(cfg, "tx_stream.csv"), StreamFormat::csv);
  save_stream(r.link.detected, out_path(cfg, "rx_stream.csv"), StreamFormat::csv);
  save_bits(r.link.bits, out_path(cfg, "bits.txt"));
  write_text(out_path(cfg, "received.txt"), r.link.received + "\n");
  write_json(out_path(cfg, "e2e_report.json"),
             {{"text", std::string(text)},
              {"spelled", r.spelled.text},
              {"received", r.link.received},
              {"spelling_errors", r.spelling_errors},
              {"character_errors", r.character_errors},
              {"bit_error_rate", r.bit_error_rate},
              {"synced", r.link.synced},
              {"snr_channel_db", cfg.snr_channel_db},
              {"level_high", r.link.levels.high},
              {"level_low", r.link.levels.low},
              {"simulated_spelling_time_s", r.spelled.elapsed_s()}});
  std::cout << "spelled:  " << r.spelled.text << "\nreceived: " << r.link.received
            << "\ncharacter errors: " << r.character_errors << "\nbit error rate: " << r.bit_error_rate << '\n';
  if (!r.link.synced) std::cerr << "e2e: " << r.link.diagnostic << '\n';
  if (r.character_errors != 0) {
    std::cerr << "e2e: " << r.character_errors << " character error(s); spelling errors " << r.spelling_errors
              << ", BER " << r.bit_error_rate << " at " << cfg.snr_channel_db << " dB\n";
    return kFailed;
  }
  return kOk;
}

void write_pattern_outputs(const SessionConfig& cfg, const PatternReport& r, const std::string& prefix) {
  save_pattern(r.pattern, out_path(cfg, prefix + "pattern.txt"));
  save_far_field(r.field, out_path(cfg, prefix + "farfield.csv"));
  save_far_field(r.field, out_path(cfg, prefix + "farfield_db.csv"), true);
  write_json(out_path(cfg, prefix + "summary.json"), r.summary);
}

int cmd_pattern(const Globals& g, const std::string& kind, PatternRequest req, const std::string& level,
                const std::string& axis) {
  const SessionConfig cfg = load_session(g);
  if (axis == "x") {
    req.axis = Axis::x;
  } else if (axis == "y") {
    req.axis = Axis::y;
  } else {
    throw ParameterError("axis must be x or y");
  }
  if (kind == "uniform") {
    req.kind = PatternKind::uniform;
  } else if (kind == "gradient") {
    req.kind = PatternKind::gradient;
  } else if (kind == "oam") {
    req.kind = PatternKind::oam;
  } else if (kind == "rcs") {
    req.kind = PatternKind::rcs;
  } else {
    throw ParameterError("unknown pattern kind '" + kind + "'");
  }

  if (req.kind == PatternKind::rcs && level == "all") {
    bool ok = true;
    double previous = std::numeric_limits<double>::infinity();
    nlohmann::json all = nlohmann::json::array();
    for (int l = 1; l <= 4; ++l) {
      req.level = l;
      const auto r = make_pattern(cfg, req);
      write_pattern_outputs(cfg, r, "rcs" + std::to_string(l) + "_");
      const double red = r.summary["peak_reduction_db"].get<double>();
      ok = ok && r.passed && red < previous;
      previous = red;
      all.push_back(r.summary);
      std::cout << "level " << l << ": peak reduction " << red << " dB\n";
    }
    write_json(out_path(cfg, "rcs_summary.json"), {{"levels", all}, {"strictly_decreasing", ok}});
    return ok ? kOk : kFailed;
  }
  if (req.kind == PatternKind::rcs) {
    try {
      req.level = std::stoi(level);
    } catch (const std::exception&) {
      throw ParameterError("level must be 1..4 or 'all'");
    }
  }
  const auto r = make_pattern(cfg, req);
  write_pattern_outputs(cfg, r, "");
  std::cout << r.summary.dump(2) << '\n';
  return r.passed ? kOk : kFailed;
}

int cmd_farfield(const Globals& g, const std::string& pattern_path, double theta_step, double phi_step) {
  const SessionConfig cfg = load_session(g);
  const auto pattern = load_pattern(pattern_path, cfg.spacing_wavelengths);
  const auto ff = far_field(pattern, theta_step, phi_step);
  const auto lobe = main_lobe(ff);
  save_far_field(ff, out_path(cfg, "farfield.csv"));
  save_far_field(ff, out_path(cfg, "farfield_db.csv"), true);
  const nlohmann::json summary{{"array_n", pattern.size()},
                               {"main_lobe_theta_deg", lobe.theta_deg},
                               {"main_lobe_phi_deg", lobe.phi_deg},
                               {"peak_magnitude", ff.peak},
                               {"null_depth_db", null_depth_db(ff)}};
  write_json(out_path(cfg, "summary.json"), summary);
  std::cout << summary.dump(2) << '\n';
  return kOk;
}

int cmd_ber_sweep(const Globals& g, std::vector<double> snrs, std::size_t n_bits) {
  const SessionConfig cfg = load_session(g);
  const auto patterns = link_patterns(cfg);
  const auto points = ber_sweep(patterns.levels, snrs, n_bits, cfg.channel());
  std::ostringstream out;
  out << "snr_db,ber\n";
  bool monotone = true;
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << detail::format_double(points[i].snr_db) << ',' << detail::format_double(points[i].ber) << '\n';
    std::cout << points[i].snr_db << " dB: " << points[i].errors << "/" << points[i].bits << " errors\n";
    if (i > 0 && points[i].snr_db > points[i - 1].snr_db && points[i].ber > points[i - 1].ber) monotone = false;
  }
  write_text(out_path(cfg, "ber.csv"), out.str());
  return monotone ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated P300 BCI driving a 2-bit coding metasurface text link"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "Session config JSON");
  auto* seed_opt = app.add_option("--seed", seed, "Session seed");
  app.add_option("--out", g.out, "Output directory");

  std::string text;
  std::string decoder_path;
  std::optional<std::size_t> trials;
  bool dump_features = false;

  auto* calibrate_cmd = app.add_subcommand("calibrate", "Train the P300 decoder on synthetic calibration trials");
  calibrate_cmd->add_option("--trials", trials, "Override the number of calibration trials");
  calibrate_cmd->add_flag("--features", dump_features, "Also write features.csv");

  auto* spell_cmd = app.add_subcommand("spell", "Spell text with the trained decoder");
  spell_cmd->add_option("--text", text, "Text to spell")->required();
  spell_cmd->add_option("--decoder", decoder_path, "Decoder JSON (default <out>/decoder.json)");

  auto* encode_cmd = app.add_subcommand("encode", "Frame text as a header+ASCII bitstream");
  encode_cmd->add_option("--text", text, "Text to encode")->required();

  std::string bits_path;
  std::string format = "csv";
  bool clean = false;
  auto* transmit_cmd = app.add_subcommand("transmit", "Modulate, add channel noise and detect");
  auto* text_opt = transmit_cmd->add_option("--text", text, "Text to transmit");
  auto* bits_opt = transmit_cmd->add_option("--bits", bits_path, "Bitstream file of '0'/'1' characters");
  text_opt->excludes(bits_opt);
  transmit_cmd->add_option("--format", format, "csv or f32")->check(CLI::IsMember({"csv", "f32"}));
  transmit_cmd->add_flag("--clean", clean, "Skip the noise stage");

  std::string stream_path;
  auto* receive_cmd = app.add_subcommand("receive", "Decode a detector sample stream");
  receive_cmd->add_option("--stream", stream_path, "Sample stream file")->required();
  receive_cmd->add_option("--format", format, "csv or f32")->check(CLI::IsMember({"csv", "f32"}));

  auto* e2e_cmd = app.add_subcommand("e2e", "Spell, transmit and receive text end to end");
  e2e_cmd->add_option("--text", text, "Text to send")->required();
  e2e_cmd->add_option("--decoder", decoder_path, "Decoder JSON (calibrates when absent)");

  std::string kind;
  std::string level = "1";
  std::string axis = "x";
  PatternRequest req;
  auto* pattern_cmd = app.add_subcommand("pattern", "Synthesize a coding pattern and verify its far field");
  pattern_cmd->add_option("--kind", kind, "uniform, gradient, oam or rcs")->required();
  pattern_cmd->add_option("--state", req.state, "Uniform state 0..3");
  pattern_cmd->add_option("--theta", req.theta_deg, "Gradient deflection angle (deg)");
  pattern_cmd->add_option("--axis", axis, "Gradient axis x or y");
  pattern_cmd->add_option("--mode", req.mode, "OAM mode");
  pattern_cmd->add_option("--level", level, "RCS level 1..4 or 'all'");
  pattern_cmd->add_option("--theta-step", req.theta_step_deg, "Far-field theta step (deg)");
  pattern_cmd->add_option("--phi-step", req.phi_step_deg, "Far-field phi step (deg)");

  std::string pattern_path;
  double theta_step = kDefaultThetaStep;
  double phi_step = kDefaultPhiStep;
  auto* farfield_cmd = app.add_subcommand("farfield", "Far field of a pattern file");
  farfield_cmd->add_option("--pattern", pattern_path, "Pattern text file")->required();
  farfield_cmd->add_option("--theta-step", theta_step, "Theta step (deg)");
  farfield_cmd->add_option("--phi-step", phi_step, "Phi step (deg)");

  std::vector<double> snrs{0, 5, 10, 15, 20};
  std::size_t n_bits = 100000;
  auto* ber_cmd = app.add_subcommand("ber-sweep", "Bit error rate versus channel SNR");
  ber_cmd->add_option("--snr", snrs, "SNR points in dB");
  ber_cmd->add_option("--bits", n_bits, "Bits per SNR point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*calibrate_cmd) return cmd_calibrate(g, trials, dump_features);
    if (*spell_cmd) return cmd_spell(g, text, decoder_path);
    if (*encode_cmd) return cmd_encode(g, text);
    if (*transmit_cmd) return cmd_transmit(g, text, bits_path, format, clean);
    if (*receive_cmd) return cmd_receive(g, stream_path, format);
    if (*e2e_cmd) return cmd_e2e(g, text, decoder_path);
    if (*pattern_cmd) return cmd_pattern(g, kind, req, level, axis);
    if (*farfield_cmd) return cmd_farfield(g, pattern_path, theta_step, phi_step);
    if (*ber_cmd) return cmd_ber_sweep(g, snrs, n_bits);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << '\n';
    return kFailed;
  } catch (const ParameterError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
  return kUsage;
}
