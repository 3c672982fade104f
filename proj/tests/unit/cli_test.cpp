#include "farsm/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gtest/gtest.h"

namespace farsm::cli {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int status;
  std::string out;
  std::string err;
};

RunResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "farsm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = parse_and_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "farsm_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// Golden snapshot; FARSM_UPDATE_GOLDEN=1 rewrites it.
void expect_matches_golden(const std::string& actual, const std::string& name) {
  const fs::path path = fs::path(FARSM_GOLDEN_DIR) / name;
  if (std::getenv("FARSM_UPDATE_GOLDEN")) {
    std::ofstream(path) << actual;
  }
  ASSERT_TRUE(fs::exists(path)) << path;
  EXPECT_EQ(actual, read_file(path)) << "help text changed; rerun with FARSM_UPDATE_GOLDEN=1";
}

TEST(SnrSpecTest, Forms) {
  const auto range = parse_snr_spec("0:2:20");
  ASSERT_EQ(range.size(), 11u);
  EXPECT_EQ(range.front(), 0.0);
  EXPECT_EQ(range.back(), 20.0);
  EXPECT_EQ(parse_snr_spec("-5:2.5:0"), (std::vector<double>{-5.0, -2.5, 0.0}));
  EXPECT_EQ(parse_snr_spec("7"), (std::vector<double>{7.0}));
  EXPECT_EQ(parse_snr_spec("0, 5,10"), (std::vector<double>{0.0, 5.0, 10.0}));
  EXPECT_THROW(parse_snr_spec("0:0:10"), ConfigError);
  EXPECT_THROW(parse_snr_spec("10:1:0"), ConfigError);
  EXPECT_THROW(parse_snr_spec("0:1"), ConfigError);
  EXPECT_THROW(parse_snr_spec("abc"), ConfigError);
}

TEST(ConfigIoTest, DefaultFileMatchesDefaults) {
  const SimConfig cfg = load_config(std::string(FARSM_CONFIG_DIR) + "/default.json");
  EXPECT_EQ(cfg, SimConfig{});
  EXPECT_EQ(cfg.grid.w1, 1.0);
  EXPECT_EQ(cfg.grid.n1, 4u);
  EXPECT_EQ(cfg.n_a, 4u);
  EXPECT_EQ(cfg.n_r, 4u);
  EXPECT_EQ(cfg.mod_order, 4u);
}

TEST(ConfigIoTest, EmptyTextGivesDefaults) {
  EXPECT_EQ(parse_config_text(""), SimConfig{});
  EXPECT_EQ(parse_config_text(" \n\t"), SimConfig{});
  EXPECT_EQ(parse_config_text("{}"), SimConfig{});
}

TEST(ConfigIoTest, RoundTrip) {
  SimConfig cfg;
  cfg.grid = {0.5, 2.0, 3, 5};
  cfg.n_r = 2;
  cfg.n_a = 6;
  cfg.n_b = 9;
  cfg.mod_order = 16;
  cfg.precoder = PrecoderKind::kMmse;
  cfg.portsel = SelectionKind::kMceTmd;
  cfg.detectors = {DetectorKind::kRttd, DetectorKind::kMed};
  cfg.gamma = 0.25;
  cfg.snr_db = {-3.5, 0.1, 12.0};
  cfg.trials = 123;
  cfg.master_seed = 0xdeadbeefcafeULL;
  cfg.select_snr_db = 7.5;
  cfg.threads = 2;
  EXPECT_EQ(config_from_json(config_to_json(cfg)), cfg);
  EXPECT_EQ(parse_config_text(config_to_json(cfg).dump(2)), cfg);
}

TEST(ConfigIoTest, RejectsUnknownKeysAndBadTypes) {
  try {
    parse_config_text(R"({"n_a": 4, "nA": 5})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown config key 'nA'"), std::string::npos);
  }
  EXPECT_THROW(parse_config_text(R"({"n_a": "four"})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"n_a": -1})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"precoder": "dpc"})"), ConfigError);
  EXPECT_THROW(parse_config_text("[1, 2]"), ConfigError);
}

TEST(ConfigIoTest, ParseErrorReportsLineAndColumn) {
  try {
    parse_config_text("{\n  \"n_a\": 4,\n  oops\n}", "cfg.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("cfg.json:3:3:", 0), 0u) << e.what();
  }
}

TEST(DispatchTest, InvariantViolationExitsWithConfigCode) {
  const auto r = run({"ber", "--na", "2", "--nr", "4"});
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("N_a must be >= N_r for precoder invertibility"), std::string::npos) << r.err;
}

TEST(DispatchTest, UsageErrorsExitWithConfigCode) {
  EXPECT_EQ(run({"ber", "--no-such-flag"}).status, 2);
  EXPECT_EQ(run({}).status, 2);
  EXPECT_EQ(run({"ber", "--precoder", "dpc"}).status, 2);
  EXPECT_EQ(run({"ber", "--snr", "1:2"}).status, 2);
}

TEST(DispatchTest, DegenerateChannelExitsWithNumericalCode) {
  // Zero aperture: all ports coincide and every Gram matrix is singular.
  const auto r = run({"ber", "--w1", "0", "--w2", "0", "--portsel", "tmd", "--trials", "1"});
  EXPECT_EQ(r.status, 3) << r.err;
  EXPECT_NE(r.err.find("numerical failure"), std::string::npos);
}

TEST(DispatchTest, BerWritesCsvAndManifest) {
  const auto r = run({"ber", "--precoder", "zf", "--portsel", "tmd", "--detector", "mld,med",
                      "--snr", "0:5:10", "--trials", "300", "--seed", "7", "--threads", "1"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out.rfind("variant,snr_db,trials,bits,bit_errors,ber,ci_low,ci_high", 0), 0u);
  EXPECT_EQ(count_lines(r.out), 7u);
  EXPECT_NE(r.out.find("fa-rsm-zf-tmd-med,10,300,1200,"), std::string::npos) << r.out;

  const auto manifest = nlohmann::json::parse(r.err);
  EXPECT_EQ(manifest.at("command"), "ber");
  EXPECT_EQ(manifest.at("seed"), 7);
  const SimConfig echoed = config_from_json(manifest.at("config"));
  EXPECT_EQ(echoed.trials, 300u);
  EXPECT_EQ(echoed.portsel, SelectionKind::kTmd);

  // The manifest alone reproduces the run.
  const fs::path cfg_path = scratch_dir() / "from_manifest.json";
  std::ofstream(cfg_path) << manifest.at("config").dump();
  const auto again = run({"ber", "--config", cfg_path.string()});
  ASSERT_EQ(again.status, 0) << again.err;
  EXPECT_EQ(again.out, r.out);

  // So does the whole manifest file.
  const fs::path manifest_path = scratch_dir() / "manifest.json";
  std::ofstream(manifest_path) << r.err;
  const auto replay = run({"ber", "--config", manifest_path.string()});
  ASSERT_EQ(replay.status, 0) << replay.err;
  EXPECT_EQ(replay.out, r.out);
}

TEST(DispatchTest, MceDefaultsToTwelvePreselected) {
  const auto r = run({"ber", "--portsel", "mce-tmd", "--trials", "10", "--snr", "5"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.err).at("config").at("n_b"), 12);
}

TEST(DispatchTest, FlagOverridesConfigAndIsLogged) {
  const fs::path cfg_path = scratch_dir() / "override.json";
  std::ofstream(cfg_path) << R"({"n_a": 6, "portsel": "tmd", "trials": 20, "snr_db": [5]})";
  const auto r = run({"ber", "--config", cfg_path.string(), "--na", "5"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.err.find("flag overrides config n_a: 6 -> 5"), std::string::npos) << r.err;
  const auto brace = r.err.find('{');
  EXPECT_EQ(nlohmann::json::parse(r.err.substr(brace)).at("config").at("n_a"), 5);
}

TEST(DispatchTest, OutFileGetsSiblingManifest) {
  const fs::path dir = scratch_dir();
  const fs::path out = dir / "ber.json";
  fs::remove(out);
  fs::remove(dir / "ber.json.manifest.json");
  const auto r = run({"ber", "--portsel", "tmd", "--trials", "50", "--snr", "0,10", "--json",
                      "--out", out.string(), "--dump-correlation", (dir / "j.csv").string(),
                      "--dump-channels", (dir / "h.csv").string(), "--dump-limit", "3"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  const auto rows = nlohmann::json::parse(read_file(out));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].at("snr_db"), 10.0);
  const auto manifest = nlohmann::json::parse(read_file(dir / "ber.json.manifest.json"));
  EXPECT_EQ(manifest.at("outputs").size(), 3u);
  EXPECT_EQ(count_lines(read_file(dir / "j.csv")), 16u);
  EXPECT_EQ(count_lines(read_file(dir / "h.csv")), 1u + 3u * 64u);
}

TEST(DispatchTest, TheoryAndHistogramCommands) {
  auto r = run({"capacity-loss", "--portsel", "tmd", "--snr", "0:10:30", "--draws", "5"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out.rfind("snr_db,capacity_loss,bound\n", 0), 0u);
  EXPECT_EQ(count_lines(r.out), 5u);

  r = run({"mse", "--portsel", "tmd", "--snr", "0,10", "--draws", "5"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out.rfind("snr_db,mse,mse_difference\n", 0), 0u);

  r = run({"ratio-hist", "--precoder", "mmse", "--portsel", "tmd", "--snr", "10", "--trials",
           "200", "--bins", "10"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out.rfind("snr_db,bin_low,bin_high,count\n", 0), 0u);
  EXPECT_EQ(count_lines(r.out), 11u);

  r = run({"ratio-hist", "--precoder", "zf", "--trials", "10"});
  EXPECT_EQ(r.status, 2);

  r = run({"portsel-bench", "--reps", "3"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("optimal,"), std::string::npos);
  EXPECT_NE(r.out.find(",1820,"), std::string::npos);
  EXPECT_NE(r.err.find("timing order optimal > tmd > mce-tmd"), std::string::npos);
}

TEST(DispatchTest, TheoryDefaultsToFirstPorts) {
  const auto implicit = run({"capacity-loss", "--snr", "0,20", "--draws", "4"});
  const auto first = run({"capacity-loss", "--portsel", "first", "--snr", "0,20", "--draws", "4"});
  ASSERT_EQ(implicit.status, 0) << implicit.err;
  EXPECT_EQ(implicit.out, first.out);
  EXPECT_EQ(nlohmann::json::parse(implicit.err).at("config").at("portsel"), "first");

  const auto tmd = run({"capacity-loss", "--portsel", "tmd", "--snr", "0,20", "--draws", "4"});
  EXPECT_NE(tmd.out, first.out);
}

TEST(DispatchTest, MmseOptimalNeedsSelectionSnr) {
  for (const std::string cmd : {"ber", "mse", "ratio-hist"}) {
    std::vector<std::string> args{cmd, "--precoder", "mmse", "--portsel", "optimal", "--snr",
                                  "5", "--trials", "5"};
    if (cmd == "mse") args.insert(args.end(), {"--draws", "2"});
    auto r = run(args);
    EXPECT_EQ(r.status, 2) << cmd;
    EXPECT_NE(r.err.find("--select-snr-db"), std::string::npos) << cmd;
    args.insert(args.end(), {"--select-snr-db", "10"});
    r = run(args);
    EXPECT_EQ(r.status, 0) << cmd << ": " << r.err;
  }
}

TEST(HelpTest, GoldenSnapshots) {
  const auto top = run({"--help"});
  EXPECT_EQ(top.status, 0);
  expect_matches_golden(top.out, "help.txt");
  const auto ber = run({"ber", "--help"});
  EXPECT_EQ(ber.status, 0);
  expect_matches_golden(ber.out, "ber_help.txt");
  for (const char* flag : {"--precoder", "--portsel", "--detector", "--gamma", "--snr", "--trials",
                           "--seed", "--na", "--nr", "--nb", "--mod-order", "--w1", "--w2",
                           "--n1", "--n2", "--select-snr-db", "--baseline", "--out", "--json",
                           "--manifest", "--dump-correlation", "--dump-channels", "--threads"}) {
    EXPECT_NE(ber.out.find(flag), std::string::npos) << flag;
  }
}

}  // namespace
}  // namespace farsm::cli
