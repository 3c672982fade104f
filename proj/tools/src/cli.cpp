#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "farsm/cli.hpp"
#include "farsm/theory.hpp"

#ifndef FARSM_VERSION
#define FARSM_VERSION "unknown"
#endif

namespace farsm::cli {

using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// Raw flag values; each flag only overrides the config when given.
struct Flags {
  std::string config_path;
  std::string precoder = "zf";
  std::string portsel = "optimal";
  std::string detector = "mld";
  double gamma = kDefaultGamma;
  std::string snr = "0:5:15";
  std::uint64_t trials = 100000;
  std::uint64_t seed = 1;
  std::size_t na = 4;
  std::size_t nr = 4;
  std::size_t nb = 12;
  std::size_t mod_order = 4;
  double w1 = 1.0;
  double w2 = 1.0;
  std::size_t n1 = 4;
  std::size_t n2 = 4;
  double select_snr_db = 0.0;
  bool baseline = false;
  bool noiseless = false;
  std::size_t threads = 0;

  std::string out_path;
  bool json_output = false;
  std::string manifest_path;
  std::string dump_correlation;
  std::string dump_channels;
  std::size_t dump_limit = 100;

  std::size_t draws = 200;
  std::size_t bins = 50;
  std::size_t reps = 100;
};

struct SharedOptions {
  std::vector<std::pair<std::string, CLI::Option*>> sim;  // flag name -> option
  CLI::Option* select_snr = nullptr;
  CLI::Option* portsel = nullptr;
};

SharedOptions add_shared_options(CLI::App& cmd, Flags& f) {
  SharedOptions so;
  const auto sim = [&](const std::string& name, CLI::Option* opt) {
    so.sim.emplace_back(name, opt);
    return opt;
  };
  cmd.add_option("--config", f.config_path, "JSON config file; flags override its values")
      ->check(CLI::ExistingFile);
  sim("precoder", cmd.add_option("--precoder", f.precoder, "Precoder: zf | mmse")
                      ->capture_default_str());
  so.portsel = sim("portsel", cmd.add_option("--portsel", f.portsel,
                                "Port selection: optimal | tmd | mce-tmd | first")
                     ->capture_default_str());
  sim("detector", cmd.add_option("--detector", f.detector,
                                 "Detectors, comma-separated: mld, med, rttd")
                      ->capture_default_str());
  sim("gamma", cmd.add_option("--gamma", f.gamma, "RTTD ratio threshold in [0, 1]")
                   ->capture_default_str());
  sim("snr", cmd.add_option("--snr", f.snr, "SNR points in dB: start:step:stop or a,b,c")
                 ->capture_default_str());
  sim("trials", cmd.add_option("--trials", f.trials, "Trials per SNR point")->capture_default_str());
  sim("seed", cmd.add_option("--seed", f.seed, "Master seed")->capture_default_str());
  sim("na", cmd.add_option("--na", f.na, "Activated ports N_a")->capture_default_str());
  sim("nr", cmd.add_option("--nr", f.nr, "Receive antennas N_r")->capture_default_str());
  sim("nb", cmd.add_option("--nb", f.nb, "MCE-TMD pre-selection size N_b")->capture_default_str());
  sim("mod-order", cmd.add_option("--mod-order", f.mod_order, "QAM order: 4 | 16 | 64")
                       ->capture_default_str());
  sim("w1", cmd.add_option("--w1", f.w1, "Vertical aperture in wavelengths")->capture_default_str());
  sim("w2", cmd.add_option("--w2", f.w2, "Horizontal aperture in wavelengths")
                ->capture_default_str());
  sim("n1", cmd.add_option("--n1", f.n1, "Ports along the vertical axis")->capture_default_str());
  sim("n2", cmd.add_option("--n2", f.n2, "Ports along the horizontal axis")->capture_default_str());
  so.select_snr = sim("select-snr-db",
                      cmd.add_option("--select-snr-db", f.select_snr_db,
                                     "Operating SNR for MMSE optimal selection (required for that pairing)"));
  sim("baseline", cmd.add_flag("--baseline", f.baseline,
                               "Traditional RSM: i.i.d. channel with N_a antennas, no selection"));
  sim("noiseless", cmd.add_flag("--noiseless", f.noiseless, "Disable receiver noise (test mode)"));
  sim("threads", cmd.add_option("--threads", f.threads,
                                "Worker threads (0: FARSM_THREADS or all cores)")
                     ->capture_default_str());
  cmd.add_option("--out", f.out_path, "Write results here instead of stdout");
  cmd.add_flag("--json", f.json_output, "Emit JSON instead of CSV");
  cmd.add_option("--manifest", f.manifest_path,
                 "Run manifest path (default: <out>.manifest.json, or stderr)");
  cmd.add_option("--dump-correlation", f.dump_correlation, "Write the port correlation matrix as CSV");
  cmd.add_option("--dump-channels", f.dump_channels, "Write sampled channel matrices as CSV");
  cmd.add_option("--dump-limit", f.dump_limit, "Trials covered by --dump-channels")
      ->capture_default_str();
  return so;
}

bool config_sets_key(const std::string& path, const std::string& key) {
  if (path.empty()) return false;
  std::ifstream in(path, std::ios::binary);
  json j = json::parse(in, nullptr, false);
  if (j.is_object() && j.contains("tool") && j.contains("config")) j = j.at("config");
  return j.is_object() && j.contains(key);
}

// Config file (if any) overlaid with the flags that were actually given.
SimConfig resolve_config(const Flags& f, const SharedOptions& so, std::ostream& err) {
  SimConfig cfg = f.config_path.empty() ? SimConfig{} : load_config(f.config_path);
  const bool from_file = !f.config_path.empty();
  const json before = config_to_json(cfg);

  const auto given = [&](const std::string& name) {
    for (const auto& [n, opt] : so.sim) {
      if (n == name) return opt->count() > 0;
    }
    return false;
  };
  if (given("precoder")) cfg.precoder = parse_precoder(f.precoder);
  if (given("portsel")) cfg.portsel = parse_selection(f.portsel);
  if (given("detector")) cfg.detectors = parse_detector_list(f.detector);
  if (given("gamma")) cfg.gamma = f.gamma;
  if (given("snr")) cfg.snr_db = parse_snr_spec(f.snr);
  if (given("trials")) cfg.trials = f.trials;
  if (given("seed")) cfg.master_seed = f.seed;
  if (given("na")) cfg.n_a = f.na;
  if (given("nr")) cfg.n_r = f.nr;
  if (given("nb")) cfg.n_b = f.nb;
  if (given("mod-order")) cfg.mod_order = f.mod_order;
  if (given("w1")) cfg.grid.w1 = f.w1;
  if (given("w2")) cfg.grid.w2 = f.w2;
  if (given("n1")) cfg.grid.n1 = f.n1;
  if (given("n2")) cfg.grid.n2 = f.n2;
  if (given("select-snr-db")) cfg.select_snr_db = f.select_snr_db;
  if (given("baseline")) cfg.baseline = f.baseline;
  if (given("noiseless")) cfg.noiseless = f.noiseless;
  if (given("threads")) cfg.threads = f.threads;

  if (from_file) {
    const json after = config_to_json(cfg);
    for (const auto& [key, value] : after.items()) {
      if (before.at(key) != value) {
        err << "farsm: flag overrides config " << key << ": " << before.at(key).dump() << " -> "
            << value.dump() << "\n";
      }
    }
  }
  validate(cfg);
  return cfg;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// Results go to --out or `out`; the manifest records what was written.
class RunContext {
 public:
  RunContext(std::string command, const Flags& f, std::ostream& out, std::ostream& err)
      : command_(std::move(command)), flags_(f), out_(out), err_(err) {
    if (!f.out_path.empty()) {
      file_ = std::make_unique<std::ofstream>(f.out_path);
      if (!*file_) throw ConfigError("cannot open output file '" + f.out_path + "'");
      outputs_.push_back(f.out_path);
    }
  }

  std::ostream& results() { return file_ ? *file_ : out_; }
  void add_output(const std::string& path) { outputs_.push_back(path); }

  void write_manifest(const SimConfig& cfg, const json& extra = json::object()) {
    json m{{"tool", "farsm"},
           {"version", FARSM_VERSION},
           {"command", command_},
           {"timestamp", utc_timestamp()},
           {"seed", cfg.master_seed},
           {"config", config_to_json(cfg)},
           {"outputs", outputs_}};
    if (!extra.empty()) m["parameters"] = extra;
    std::string path = flags_.manifest_path;
    if (path.empty() && !flags_.out_path.empty()) path = flags_.out_path + ".manifest.json";
    if (path.empty()) {
      err_ << m.dump(2) << "\n";
      return;
    }
    std::ofstream mf(path);
    if (!mf) throw ConfigError("cannot open manifest file '" + path + "'");
    mf << m.dump(2) << "\n";
  }

 private:
  std::string command_;
  const Flags& flags_;
  std::ostream& out_;
  std::ostream& err_;
  std::unique_ptr<std::ofstream> file_;
  std::vector<std::string> outputs_;
};

void write_dumps(const SimConfig& cfg, const Flags& f, RunContext& ctx) {
  if (f.dump_correlation.empty() && f.dump_channels.empty()) return;
  const LinkSimulator sim(cfg);
  if (!f.dump_correlation.empty()) {
    if (!sim.correlation()) throw ConfigError("--dump-correlation needs a fluid-antenna channel");
    std::ofstream os(f.dump_correlation);
    if (!os) throw ConfigError("cannot open '" + f.dump_correlation + "'");
    write_correlation_csv(os, *sim.correlation());
    ctx.add_output(f.dump_correlation);
  }
  if (!f.dump_channels.empty()) {
    std::ofstream os(f.dump_channels);
    if (!os) throw ConfigError("cannot open '" + f.dump_channels + "'");
    os << kChannelCsvHeader << "\n";
    const std::uint64_t n = std::min<std::uint64_t>(cfg.trials, f.dump_limit);
    for (std::uint64_t t = 0; t < n; ++t) write_channel_csv_rows(os, t, sim.sample_channel(t));
    ctx.add_output(f.dump_channels);
  }
}

void emit_table(std::ostream& os, bool as_json, const std::vector<std::string>& header,
                const std::vector<std::vector<json>>& rows) {
  if (as_json) {
    json arr = json::array();
    for (const auto& row : rows) {
      json obj = json::object();
      for (std::size_t i = 0; i < header.size(); ++i) obj[header[i]] = row[i];
      arr.push_back(obj);
    }
    os << arr.dump(2) << "\n";
    return;
  }
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << "\n";
  const auto old = os.precision(17);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      const json& v = row[i];
      if (v.is_string()) {
        os << v.get<std::string>();
      } else if (v.is_number_float()) {
        os << v.get<double>();
      } else {
        os << v.dump();
      }
    }
    os << "\n";
  }
  os.precision(old);
}

// The MMSE capacity ranking moves with N0, so the operating point must be named.
void require_select_snr(const SimConfig& cfg) {
  if (cfg.precoder == PrecoderKind::kMmse && cfg.portsel == SelectionKind::kOptimal &&
      !cfg.baseline && !cfg.noiseless && !cfg.select_snr_db) {
    throw ConfigError(
        "MMSE precoding with optimal port selection needs --select-snr-db: the "
        "capacity-optimal set depends on the SNR it is evaluated at");
  }
}

void cmd_ber(const SimConfig& cfg, const Flags& f, RunContext& ctx) {
  const auto points = run_ber_sweep(cfg);
  std::vector<std::vector<json>> rows;
  for (const auto& p : points) {
    rows.push_back({p.variant, p.snr_db, p.trials, p.bits, p.bit_errors, p.ber, p.ci_low,
                    p.ci_high, p.symbol_errors, p.med_path_decisions, p.redraws});
  }
  emit_table(ctx.results(), f.json_output,
             {"variant", "snr_db", "trials", "bits", "bit_errors", "ber", "ci_low", "ci_high",
              "symbol_errors", "med_path_decisions", "redraws"},
             rows);
}

// Nested pair per draw: the configured selection inside the full port set.
template <typename Fn>
void for_each_draw(const SimConfig& cfg, std::size_t draws, double select_n0, Fn&& fn) {
  if (cfg.baseline) throw ConfigError("theory curves need the fluid-antenna channel (no --baseline)");
  if (cfg.n_a >= cfg.num_ports()) {
    throw ConfigError("theory curves need N_a < N so that port selection discards ports");
  }
  const LinkSimulator sim(cfg);
  for (std::size_t d = 0; d < draws; ++d) {
    ChannelMatrix h = sim.sample_channel(d);
    std::uint32_t attempt = 0;
    for (;;) {
      try {
        const NestedSetPair pair(sim.select(h, select_n0).ports,
                                 PortSet::first(cfg.num_ports(), cfg.num_ports()));
        fn(sim, h, pair);
        break;
      } catch (const NumericalError&) {
        if (++attempt > LinkSimulator::kMaxRedraws) throw;
        h = sim.sample_channel(d, attempt);
      }
    }
  }
}

void cmd_capacity_loss(SimConfig cfg, const Flags& f, RunContext& ctx) {
  cfg.precoder = PrecoderKind::kZf;
  std::vector<double> loss(cfg.snr_db.size(), 0.0);
  double bound = 0.0;
  for_each_draw(cfg, f.draws, 1.0, [&](const LinkSimulator&, const ChannelMatrix& h,
                                       const NestedSetPair& pair) {
    for (std::size_t i = 0; i < cfg.snr_db.size(); ++i) {
      loss[i] += zf_capacity_loss(h, pair, NoiseModel::from_snr_db(cfg.snr_db[i]).n0);
    }
    bound += zf_capacity_loss_bound(h, pair);
  });
  const double n = static_cast<double>(f.draws);
  std::vector<std::vector<json>> rows;
  for (std::size_t i = 0; i < cfg.snr_db.size(); ++i) {
    rows.push_back({cfg.snr_db[i], loss[i] / n, bound / n});
  }
  emit_table(ctx.results(), f.json_output, {"snr_db", "capacity_loss", "bound"}, rows);
}

void cmd_mse(SimConfig cfg, const Flags& f, RunContext& ctx) {
  cfg.precoder = PrecoderKind::kMmse;
  const std::size_t n_pts = cfg.snr_db.size();
  std::vector<double> mse(n_pts, 0.0), diff(n_pts, 0.0);
  require_select_snr(cfg);
  const double select_n0 =
      cfg.select_snr_db ? NoiseModel::from_snr_db(*cfg.select_snr_db).n0 : 1.0;
  for_each_draw(cfg, f.draws, select_n0, [&](const LinkSimulator&, const ChannelMatrix& h,
                                             const NestedSetPair& pair) {
    for (std::size_t i = 0; i < n_pts; ++i) {
      const double n0 = NoiseModel::from_snr_db(cfg.snr_db[i]).n0;
      mse[i] += mmse_mse(h, pair.inner(), n0);
      diff[i] += mmse_mse_difference(h, pair, n0);
    }
  });
  const double n = static_cast<double>(f.draws);
  std::vector<std::vector<json>> rows;
  for (std::size_t i = 0; i < n_pts; ++i) rows.push_back({cfg.snr_db[i], mse[i] / n, diff[i] / n});
  emit_table(ctx.results(), f.json_output, {"snr_db", "mse", "mse_difference"}, rows);
}

void cmd_ratio_hist(const SimConfig& cfg, const Flags& f, RunContext& ctx) {
  std::vector<std::vector<json>> rows;
  for (double snr : cfg.snr_db) {
    const auto hist = ratio_histogram(cfg, snr, cfg.trials, f.bins);
    for (std::size_t b = 0; b < hist.counts.size(); ++b) {
      rows.push_back({snr, hist.bin_edges[b], hist.bin_edges[b + 1], hist.counts[b]});
    }
  }
  emit_table(ctx.results(), f.json_output, {"snr_db", "bin_low", "bin_high", "count"}, rows);
}

// Returns whether the medians came out optimal > TMD > MCE-TMD.
bool cmd_portsel_bench(const SimConfig& cfg, const Flags& f, RunContext& ctx, std::ostream& err) {
  const auto timings = portsel_benchmark(cfg, f.reps);
  const bool ordered = timings.size() == 3 && timings[0].median_us > timings[1].median_us &&
                       timings[1].median_us > timings[2].median_us;
  err << "farsm: timing order optimal > tmd > mce-tmd " << (ordered ? "holds" : "NOT observed")
      << "\n";
  std::vector<std::vector<json>> rows;
  for (const auto& t : timings) {
    rows.push_back({std::string(to_string(t.kind)), t.median_us, t.stats.candidates_evaluated,
                    t.stats.preselect_iterations, t.stats.removal_iterations});
  }
  emit_table(ctx.results(), f.json_output,
             {"algorithm", "median_us", "candidates", "preselect_iterations", "removal_iterations"},
             rows);
  return ordered;
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"FA-RSM link-level simulator", "farsm"};
  app.set_version_flag("--version", FARSM_VERSION);
  app.require_subcommand(1);

  Flags f;
  struct Sub {
    CLI::App* app;
    SharedOptions opts;
  };
  std::vector<Sub> subs;
  const auto add = [&](const char* name, const char* desc) {
    CLI::App* cmd = app.add_subcommand(name, desc);
    subs.push_back({cmd, add_shared_options(*cmd, f)});
    return cmd;
  };
  add("ber", "Monte Carlo BER sweep (CSV: variant,snr_db,trials,bits,bit_errors,ber,ci_low,ci_high,...)");
  add("capacity-loss", "ZF capacity loss of N_a ports (first N_a, or --portsel) against all ports, with its bound")
      ->add_option("--draws", f.draws, "Channel draws to average")
      ->capture_default_str();
  add("mse", "MMSE mean-square error of N_a ports (first N_a, or --portsel) and its reduction by all ports")
      ->add_option("--draws", f.draws, "Channel draws to average")
      ->capture_default_str();
  add("ratio-hist", "Histogram of the received energy ratio r (MMSE precoding)")
      ->add_option("--bins", f.bins, "Histogram bins over [0, 1]")
      ->capture_default_str();
  add("portsel-bench", "Median run time of the port selection algorithms")
      ->add_option("--reps", f.reps, "Channel draws timed per algorithm")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();  // delegates to the selected subcommand
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::Success& e) {
    // --version
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "farsm: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    const Sub* chosen = nullptr;
    for (const auto& s : subs) {
      if (s.app->parsed()) chosen = &s;
    }
    const std::string name = chosen->app->get_name();
    SimConfig cfg = resolve_config(f, chosen->opts, err);
    if ((name == "capacity-loss" || name == "mse") && chosen->opts.portsel->count() == 0 &&
        !config_sets_key(f.config_path, "portsel")) {
      // Theory curves compare the first N_a ports with all N unless asked otherwise.
      cfg.portsel = SelectionKind::kFirst;
    }
    if (name == "ber" || name == "ratio-hist") require_select_snr(cfg);
    RunContext ctx(name, f, out, err);
    write_dumps(cfg, f, ctx);

    json params = json::object();
    if (name == "ber") {
      cmd_ber(cfg, f, ctx);
    } else if (name == "capacity-loss") {
      cmd_capacity_loss(cfg, f, ctx);
      params["draws"] = f.draws;
    } else if (name == "mse") {
      cmd_mse(cfg, f, ctx);
      params["draws"] = f.draws;
    } else if (name == "ratio-hist") {
      cmd_ratio_hist(cfg, f, ctx);
      params["bins"] = f.bins;
    } else if (name == "portsel-bench") {
      params["timing_order_holds"] = cmd_portsel_bench(cfg, f, ctx, err);
      params["reps"] = f.reps;
    }
    ctx.results().flush();
    ctx.write_manifest(cfg, params);
    return 0;
  } catch (const ConfigError& e) {
    err << "farsm: configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "farsm: numerical failure: " << e.what();
    if (e.condition_estimate() > 0.0) err << " (condition estimate " << e.condition_estimate() << ")";
    err << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "farsm: error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace farsm::cli
