#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "mindlink/session.hpp"

using namespace mindlink;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MINDLINK_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("mindlink_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

SessionConfig quick_config() {
  SessionConfig cfg;
  cfg.calibration_trials = 8;
  return cfg;
}

}  // namespace

TEST(Config, MergeOverridesKnownKeysAndRejectsOthers) {
  SessionConfig c;
  merge_config(c, nlohmann::json{{"seed", 9}, {"snr_channel_db", 12.5}, {"receiver_theta_deg", 3.0}});
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.snr_channel_db, 12.5);
  EXPECT_EQ(c.receiver.theta_deg, 3.0);
  EXPECT_EQ(c.rounds_max, 10u);
  EXPECT_THROW(merge_config(c, nlohmann::json{{"sed", 1}}), ParameterError);
  EXPECT_THROW(merge_config(c, nlohmann::json{{"seed", "x"}}), ParameterError);
  EXPECT_THROW(merge_config(c, nlohmann::json::array()), ParameterError);
  SessionConfig round;
  merge_config(round, nlohmann::json(c));
  EXPECT_EQ(nlohmann::json(round), nlohmann::json(c));
}

TEST(Config, ValidationCatchesBadValues) {
  SessionConfig c;
  c.layout = "AAB";
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.header = "";
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.oversample = 1;
  EXPECT_THROW(c.validate(), ParameterError);
  EXPECT_NO_THROW(SessionConfig{}.validate());
}

TEST(Calibrate, DeterministicAndSeparatesTrainingTrials) {
  const auto a = calibrate(quick_config());
  const auto b = calibrate(quick_config());
  EXPECT_EQ(a.decoder.weights(), b.decoder.weights());
  EXPECT_EQ(a.decoder.dimension(), 750u);
  ASSERT_EQ(a.trials.size(), 8u);
  for (const auto& t : a.trials) EXPECT_EQ(t.predicted, t.target);
  EXPECT_EQ(a.decoder.training_meta().n_trials, 8u);
}

TEST(Calibrate, ZeroTrialsIsTrainingError) {
  SessionConfig c;
  c.calibration_trials = 0;
  EXPECT_THROW(calibrate(c), TrainingError);
}

TEST(Spell, TimePerCharacterAtOneRound) {
  EXPECT_NEAR(selection_time_s(1, 40, 120.0), 4.8, 1e-12);
}

TEST(Spell, HelloAtDefaultSnr) {
  const SessionConfig cfg;
  const auto dec = calibrate(cfg).decoder;
  const auto r = spell(cfg, dec, "HELLO");
  EXPECT_EQ(r.text, "HELLO");
  EXPECT_EQ(r.errors(), 0u);
  for (const auto& c : r.chars) EXPECT_NEAR(c.elapsed_s, 4.8 * static_cast<double>(c.rounds_used), 1e-9);
  EXPECT_THROW(spell(cfg, dec, "hello"), ParameterError);
}

TEST(Link, BciMetasurfaceAtThirtyDb) {
  const SessionConfig cfg;
  const auto r = transmit(cfg, "BCI METASURFACE");
  EXPECT_EQ(r.received, "BCI METASURFACE");
  EXPECT_TRUE(r.synced);
}

TEST(Link, WaveformFollowsEncodedBits) {
  SessionConfig cfg;
  cfg.snr_channel_db = std::numeric_limits<double>::infinity();
  const auto r = transmit(cfg, "HELO");
  ASSERT_EQ(r.detected.size(), r.bits.size() * 10);
  const double mid = 0.5 * (r.levels.high + r.levels.low);
  for (std::size_t k = 0; k < r.bits.size(); ++k) {
    for (std::size_t i = 0; i < 10; ++i) ASSERT_EQ(r.detected.samples[k * 10 + i] > mid, r.bits[k] == 1);
  }
}

TEST(Link, VeryLowSnrReportsErrors) {
  SessionConfig cfg;
  cfg.snr_channel_db = -10.0;
  const auto r = transmit(cfg, "BCI METASURFACE");
  EXPECT_GT(character_errors("BCI METASURFACE", r.received), 0u);
}

TEST(Cli, CalibrateWritesIdenticalDecoders) {
  const auto a = fresh_dir("cal_a");
  const auto b = fresh_dir("cal_b");
  ASSERT_EQ(run_cli("--seed 3 --out " + a.string() + " calibrate --trials 6"), 0);
  ASSERT_EQ(run_cli("--seed 3 --out " + b.string() + " calibrate --trials 6"), 0);
  EXPECT_EQ(slurp(a / "decoder.json"), slurp(b / "decoder.json"));
  EXPECT_EQ(read_json(a / "decoder.json").at("weights").size(), 750u);
  EXPECT_TRUE(fs::exists(a / "calibration_report.csv"));
}

TEST(Cli, ZeroTrialsExitsWithOne) {
  EXPECT_EQ(run_cli("--out " + fresh_dir("cal0").string() + " calibrate --trials 0"), 1);
}

TEST(Cli, MissingDecoderExitsWithTwo) {
  EXPECT_EQ(run_cli("--out " + fresh_dir("nodec").string() + " spell --text HI"), 2);
}

TEST(Cli, MalformedStreamExitsWithTwo) {
  const auto d = fresh_dir("badstream");
  std::ofstream(d / "stream.csv") << "index,amplitude\n0,abc\n";
  EXPECT_EQ(run_cli("--out " + d.string() + " receive --stream " + (d / "stream.csv").string()), 2);
}

TEST(Cli, UsageErrorsExitWithThree) {
  const auto d = fresh_dir("usage").string();
  EXPECT_EQ(run_cli("--out " + d + " frobnicate"), 3);
  EXPECT_EQ(run_cli("--out " + d + " pattern --kind gradient --theta 75"), 3);
  EXPECT_EQ(run_cli("--out " + d + " transmit"), 3);
}

TEST(Cli, EncodeWritesFrameBits) {
  const auto d = fresh_dir("encode");
  ASSERT_EQ(run_cli("--out " + d.string() + " encode --text A"), 0);
  const auto bits = slurp(d / "bits.txt");
  EXPECT_EQ(bits.substr(0, 22), "1111111000000001000001");
}

TEST(Cli, TransmitThenReceive) {
  const auto d = fresh_dir("txrx");
  ASSERT_EQ(run_cli("--out " + d.string() + " transmit --text \"HI, SEU\""), 0);
  ASSERT_EQ(run_cli("--out " + d.string() + " receive --stream " + (d / "stream.csv").string()), 0);
  EXPECT_EQ(slurp(d / "received.txt").substr(0, 7), "HI, SEU");
}

TEST(Cli, PatternSummaries) {
  const auto d = fresh_dir("pattern");
  ASSERT_EQ(run_cli("--out " + d.string() + " pattern --kind gradient --theta 30"), 0);
  EXPECT_LE(std::abs(read_json(d / "summary.json").at("main_lobe_theta_deg").get<double>() - 30.0), 0.5);
  ASSERT_EQ(run_cli("--out " + d.string() + " pattern --kind oam --mode 2"), 0);
  EXPECT_GE(read_json(d / "summary.json").at("null_depth_db").get<double>(), 20.0);
  EXPECT_TRUE(fs::exists(d / "pattern.txt"));
  EXPECT_TRUE(fs::exists(d / "farfield.csv"));
  ASSERT_EQ(run_cli("--out " + d.string() + " farfield --pattern " + (d / "pattern.txt").string()), 0);
}

TEST(Cli, RcsLevelsAllOrdered) {
  const auto d = fresh_dir("rcs");
  ASSERT_EQ(run_cli("--out " + d.string() + " pattern --kind rcs --level all"), 0);
  double previous = 1e9;
  for (int level = 1; level <= 4; ++level) {
    const auto s = read_json(d / ("rcs" + std::to_string(level) + "_summary.json"));
    const double r = s.at("peak_reduction_db").get<double>();
    EXPECT_LT(r, previous);
    previous = r;
  }
}

TEST(Cli, BerSweepCsv) {
  const auto d = fresh_dir("ber");
  ASSERT_EQ(run_cli("--out " + d.string() + " ber-sweep --bits 20000"), 0);
  std::istringstream in(slurp(d / "ber.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "snr_db,ber");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 5u);
}
