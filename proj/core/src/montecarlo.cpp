#include "farsm/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace farsm {

namespace {

enum StreamTag : std::uint64_t { kChannelTag = 1, kPayloadTag = 2, kBenchTag = 3 };

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

std::uint64_t snr_key(double snr_db) { return std::bit_cast<std::uint64_t>(snr_db); }

}  // namespace

void validate(const SimConfig& cfg) {
  if (cfg.grid.n1 == 0 || cfg.grid.n2 == 0) throw ConfigError("grid needs n1 >= 1 and n2 >= 1");
  if (!(cfg.grid.w1 >= 0.0) || !(cfg.grid.w2 >= 0.0)) {
    throw ConfigError("grid apertures must be non-negative");
  }
  if (!is_power_of_two(cfg.n_r)) throw ConfigError("N_r must be a power of two");
  if (cfg.mod_order != 4 && cfg.mod_order != 16 && cfg.mod_order != 64) {
    throw ConfigError("modulation order must be 4, 16 or 64");
  }
  if (cfg.n_a < cfg.n_r) {
    throw ConfigError("N_a must be >= N_r for precoder invertibility (N_a=" +
                      std::to_string(cfg.n_a) + ", N_r=" + std::to_string(cfg.n_r) + ")");
  }
  if (cfg.trials == 0) throw ConfigError("trials must be >= 1");
  if (cfg.snr_db.empty()) throw ConfigError("SNR list must not be empty");
  for (double s : cfg.snr_db) {
    if (!std::isfinite(s)) throw ConfigError("SNR values must be finite");
  }
  if (cfg.detectors.empty()) throw ConfigError("at least one detector is required");
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  const bool uses_ratio = std::find(cfg.detectors.begin(), cfg.detectors.end(),
                                    DetectorKind::kRttd) != cfg.detectors.end();
  if (uses_ratio && cfg.n_r < 2) throw ConfigError("RTTD needs N_r >= 2");
  if (cfg.noiseless && !(cfg.noiseless_design_n0 > 0.0)) {
    throw ConfigError("noiseless mode needs a positive design N0");
  }
  if (cfg.baseline) return;

  const std::size_t n = cfg.num_ports();
  if (cfg.n_a > n) {
    throw ConfigError("N_a=" + std::to_string(cfg.n_a) + " exceeds the " + std::to_string(n) +
                      " available ports");
  }
  if (cfg.portsel == SelectionKind::kMceTmd && !(n > cfg.n_b && cfg.n_b > cfg.n_a)) {
    throw ConfigError("MCE-TMD needs N > N_b > N_a (N=" + std::to_string(n) +
                      ", N_b=" + std::to_string(cfg.n_b) + ", N_a=" + std::to_string(cfg.n_a) +
                      ")");
  }
  if (cfg.portsel == SelectionKind::kOptimal &&
      binomial(n, cfg.n_a) > kMaxExhaustiveCandidates) {
    throw ConfigError("optimal selection over C(" + std::to_string(n) + "," +
                      std::to_string(cfg.n_a) + ") sets exceeds the exhaustive-search budget; "
                      "use --portsel tmd or mce-tmd");
  }
}

std::string variant_label(const SimConfig& cfg, DetectorKind detector) {
  std::string label = cfg.baseline ? "rsm-" : "fa-rsm-";
  label += to_string(cfg.precoder);
  if (!cfg.baseline) {
    label += '-';
    label += to_string(cfg.portsel);
  }
  label += '-';
  label += to_string(detector);
  return label;
}

std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // The interval endpoints are exactly 0 and 1 at the extremes.
  const double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = successes == n ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FARSM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// --- LinkSimulator ---------------------------------------------------------

LinkSimulator::LinkSimulator(SimConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  constellation_ = build_qam(cfg_.mod_order);
  if (!cfg_.baseline) {
    model_ = build_correlation_model(port_coordinates(cfg_.grid));
    if (cfg_.num_ports() >= 2) pairs_ = sorted_pair_correlations(*model_);
  }
}

ChannelMatrix LinkSimulator::sample_channel(std::uint64_t trial, std::uint32_t attempt) const {
  SeededRng rng(cfg_.master_seed, stream_id({kChannelTag, trial, attempt}));
  if (cfg_.baseline) return sample_iid_cscg(cfg_.n_r, cfg_.n_a, rng);
  return sample_correlated_channel(*model_, cfg_.n_r, rng);
}

Selection LinkSimulator::select(const ChannelMatrix& h, double n0) const {
  const std::size_t n = static_cast<std::size_t>(h.cols());
  if (cfg_.baseline) return {PortSet::first(n, n), {}};
  switch (cfg_.portsel) {
    case SelectionKind::kOptimal:
      return optimal_select(h, cfg_.n_a, cfg_.precoder, {n0});
    case SelectionKind::kTmd:
      return tmd_select(h, cfg_.n_a);
    case SelectionKind::kMceTmd:
      return mce_tmd_select(h, *pairs_, cfg_.n_b, cfg_.n_a);
    case SelectionKind::kFirst:
      return {PortSet::first(cfg_.n_a, n), {}};
  }
  throw ConfigError("unknown port selection kind");
}

bool LinkSimulator::selection_depends_on_snr() const {
  if (cfg_.baseline || cfg_.noiseless) return false;
  return cfg_.portsel == SelectionKind::kOptimal && cfg_.precoder == PrecoderKind::kMmse &&
         !cfg_.select_snr_db.has_value();
}

double LinkSimulator::design_n0(double snr_db) const {
  return cfg_.noiseless ? cfg_.noiseless_design_n0 : NoiseModel::from_snr_db(snr_db).n0;
}

TrialOutcome LinkSimulator::run(std::uint64_t trial) const {
  for (std::uint32_t attempt = 0; attempt <= kMaxRedraws; ++attempt) {
    try {
      TrialOutcome out = run_attempt(trial, attempt);
      out.redraws = attempt;
      return out;
    } catch (const NumericalError&) {
      // fall through to a fresh channel draw
    }
  }
  throw NumericalError("trial " + std::to_string(trial) + " failed after " +
                       std::to_string(kMaxRedraws) + " channel re-draws");
}

TrialOutcome LinkSimulator::run_attempt(std::uint64_t trial, std::uint32_t attempt) const {
  const ChannelMatrix h = sample_channel(trial, attempt);
  const std::size_t n_r = cfg_.n_r;
  const unsigned spatial_bits = log2_exact(n_r);
  const unsigned total_bits = spatial_bits + constellation_.bits_per_symbol;

  // Selection at a fixed operating point: ZF ranking is N0-free, heuristics
  // ignore N0, and MMSE uses the pinned selection SNR when one is given.
  const auto fixed_select_n0 = [&]() {
    if (cfg_.noiseless) return cfg_.noiseless_design_n0;
    if (cfg_.select_snr_db) return NoiseModel::from_snr_db(*cfg_.select_snr_db).n0;
    return design_n0(cfg_.snr_db.front());
  };

  std::optional<ChannelMatrix> shared_sel;
  if (!selection_depends_on_snr()) {
    shared_sel = restrict_to_ports(h, select(h, fixed_select_n0()).ports);
  }
  std::optional<Precoder> shared_zf;
  if (shared_sel && cfg_.precoder == PrecoderKind::kZf) shared_zf = zf_precoder(*shared_sel);

  TrialOutcome out;
  out.points.reserve(cfg_.snr_db.size());
  const Eigen::Index nr = static_cast<Eigen::Index>(n_r);
  for (double snr : cfg_.snr_db) {
    const double n0_design = design_n0(snr);
    const double n0_channel = cfg_.noiseless ? 0.0 : n0_design;

    ChannelMatrix local_sel;
    const ChannelMatrix* h_sel = shared_sel ? &*shared_sel : nullptr;
    if (!h_sel) {
      local_sel = restrict_to_ports(h, select(h, n0_design).ports);
      h_sel = &local_sel;
    }
    const Precoder prec =
        shared_zf ? *shared_zf : build_precoder(cfg_.precoder, *h_sel, {n0_design});
    const CMatrix eff = h_sel->entries * prec.p;
    const CMatrix g = cfg_.precoder == PrecoderKind::kZf ? CMatrix(CMatrix::Identity(nr, nr))
                                                         : CMatrix(eff / prec.beta);

    SeededRng rng(cfg_.master_seed, stream_id({kPayloadTag, trial, snr_key(snr), attempt}));
    const BitBlock tx{static_cast<std::uint32_t>(rng.below(std::uint64_t{1} << total_bits)),
                      total_bits};
    const SpatialSymbol sym = bits_to_symbol(tx, n_r, constellation_);
    CVector y = eff.col(static_cast<Eigen::Index>(sym.k)) * constellation_.points[sym.m];
    add_noise(y, n0_channel, rng);

    PointOutcome po;
    po.snr_db = snr;
    po.tx = tx;
    po.ratio = n_r >= 2 ? energy_ratio(y) : 1.0;
    po.rx.reserve(cfg_.detectors.size());
    po.paths.reserve(cfg_.detectors.size());
    for (DetectorKind det : cfg_.detectors) {
      DetectionResult r;
      switch (det) {
        case DetectorKind::kMld:
          r = cfg_.precoder == PrecoderKind::kZf ? mld_zf(y, prec.beta, constellation_)
                                                 : mld_mmse(y, prec.beta, g, constellation_);
          break;
        case DetectorKind::kMed:
          if (cfg_.precoder == PrecoderKind::kZf) {
            r = med(y, prec.beta, constellation_);
          } else {
            const CVector diag = g.diagonal();
            r = med(y, prec.beta, constellation_,
                    {diag.data(), static_cast<std::size_t>(diag.size())});
          }
          break;
        case DetectorKind::kRttd:
          r = rttd(y, prec.beta, g, constellation_, {cfg_.gamma});
          break;
      }
      po.rx.push_back(symbol_to_bits(r.symbol(), n_r, constellation_));
      po.paths.push_back(r.path);
    }
    out.points.push_back(std::move(po));
  }
  return out;
}

std::pair<BitBlock, BitBlock> run_trial(const SimConfig& cfg, double snr_db,
                                        std::uint64_t trial_index) {
  SimConfig single = cfg;
  single.snr_db = {snr_db};
  single.detectors = {cfg.detectors.at(0)};
  const TrialOutcome out = LinkSimulator(std::move(single)).run(trial_index);
  return {out.points[0].tx, out.points[0].rx[0]};
}

// --- sweeps ----------------------------------------------------------------

namespace {

struct Tally {
  std::uint64_t bit_errors = 0;
  std::uint64_t symbol_errors = 0;
  std::uint64_t med_path = 0;
};

// Runs `trials` trials over a worker pool and hands each outcome to
// `consume(worker, trial, outcome)`. Chunk assignment is dynamic but every
// trial's result depends only on its index.
template <typename Consume>
std::uint64_t for_each_trial(const LinkSimulator& sim, std::uint64_t trials,
                             std::size_t workers, Consume&& consume) {
  constexpr std::uint64_t kChunk = 256;
  std::atomic<std::uint64_t> next{0};
  std::atomic<std::uint64_t> redraws{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  const auto work = [&](std::size_t worker) {
    try {
      for (;;) {
        const std::uint64_t begin = next.fetch_add(kChunk);
        if (begin >= trials) break;
        const std::uint64_t end = std::min(trials, begin + kChunk);
        for (std::uint64_t t = begin; t < end; ++t) {
          TrialOutcome out = sim.run(t);
          redraws += out.redraws;
          consume(worker, t, out);
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
      next = trials;
    }
  };

  workers = std::max<std::size_t>(1, std::min<std::size_t>(workers, (trials + kChunk - 1) / kChunk));
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return redraws.load();
}

}  // namespace

std::vector<BerPoint> run_ber_sweep(const SimConfig& cfg) {
  const LinkSimulator sim(cfg);
  const std::size_t n_points = cfg.snr_db.size();
  const std::size_t n_det = cfg.detectors.size();
  const std::size_t workers = resolve_threads(cfg.threads);

  std::vector<std::vector<Tally>> per_worker(workers, std::vector<Tally>(n_points * n_det));
  const std::uint64_t redraws =
      for_each_trial(sim, cfg.trials, workers,
                     [&](std::size_t w, std::uint64_t, const TrialOutcome& out) {
                       auto& tallies = per_worker[w];
                       for (std::size_t p = 0; p < n_points; ++p) {
                         const PointOutcome& po = out.points[p];
                         for (std::size_t d = 0; d < n_det; ++d) {
                           Tally& t = tallies[d * n_points + p];
                           const unsigned errs = bit_errors(po.tx, po.rx[d]);
                           t.bit_errors += errs;
                           t.symbol_errors += errs != 0;
                           t.med_path += po.paths[d] == DetectionPath::kRttdMed;
                         }
                       }
                     });

  const unsigned bits_per_trial = log2_exact(cfg.n_r) + log2_exact(cfg.mod_order);
  std::vector<BerPoint> points;
  points.reserve(n_points * n_det);
  for (std::size_t d = 0; d < n_det; ++d) {
    for (std::size_t p = 0; p < n_points; ++p) {
      Tally sum;
      for (const auto& tallies : per_worker) {
        sum.bit_errors += tallies[d * n_points + p].bit_errors;
        sum.symbol_errors += tallies[d * n_points + p].symbol_errors;
        sum.med_path += tallies[d * n_points + p].med_path;
      }
      BerPoint bp;
      bp.variant = variant_label(cfg, cfg.detectors[d]);
      bp.snr_db = cfg.snr_db[p];
      bp.trials = cfg.trials;
      bp.bits = cfg.trials * bits_per_trial;
      bp.bit_errors = sum.bit_errors;
      bp.symbol_errors = sum.symbol_errors;
      bp.ber = static_cast<double>(bp.bit_errors) / static_cast<double>(bp.bits);
      std::tie(bp.ci_low, bp.ci_high) = wilson_interval(bp.bit_errors, bp.bits);
      bp.med_path_decisions = sum.med_path;
      bp.redraws = redraws;
      points.push_back(std::move(bp));
    }
  }
  return points;
}

double RatioHistogram::fraction_below(double edge) const {
  if (total == 0) return 0.0;
  std::uint64_t below = 0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (bin_edges[b + 1] <= edge + 1e-12) below += counts[b];
  }
  return static_cast<double>(below) / static_cast<double>(total);
}

double RatioHistogram::quantile(double q) const {
  if (total == 0) return 0.0;
  const double target = q * static_cast<double>(total);
  double acc = 0.0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    const double c = static_cast<double>(counts[b]);
    if (c > 0.0 && acc + c >= target) {
      const double frac = (target - acc) / c;
      return bin_edges[b] + frac * (bin_edges[b + 1] - bin_edges[b]);
    }
    acc += c;
  }
  return bin_edges.back();
}

RatioHistogram ratio_histogram(const SimConfig& cfg, double snr_db, std::uint64_t trials,
                               std::size_t bins) {
  if (cfg.precoder != PrecoderKind::kMmse) {
    throw ConfigError("the ratio histogram is defined for MMSE precoding");
  }
  if (cfg.n_r < 2) throw ConfigError("the ratio histogram needs N_r >= 2");
  if (bins == 0) throw ConfigError("histogram needs at least one bin");
  if (trials == 0) throw ConfigError("trials must be >= 1");
  SimConfig single = cfg;
  single.snr_db = {snr_db};
  single.trials = trials;
  single.detectors = {DetectorKind::kMed};
  const LinkSimulator sim(single);
  const std::size_t workers = resolve_threads(cfg.threads);

  std::vector<std::vector<std::uint64_t>> per_worker(workers, std::vector<std::uint64_t>(bins, 0));
  for_each_trial(sim, trials, workers, [&](std::size_t w, std::uint64_t, const TrialOutcome& out) {
    const double r = out.points[0].ratio;
    auto bin = static_cast<std::size_t>(r * static_cast<double>(bins));
    per_worker[w][std::min(bin, bins - 1)] += 1;
  });

  RatioHistogram hist;
  hist.bin_edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    hist.bin_edges[b] = static_cast<double>(b) / static_cast<double>(bins);
  }
  hist.counts.assign(bins, 0);
  for (const auto& counts : per_worker) {
    for (std::size_t b = 0; b < bins; ++b) hist.counts[b] += counts[b];
  }
  hist.total = trials;
  return hist;
}

std::vector<SelectionTiming> portsel_benchmark(const SimConfig& cfg, std::size_t repetitions) {
  if (repetitions == 0) throw ConfigError("repetitions must be >= 1");
  SimConfig base = cfg;
  base.baseline = false;
  base.portsel = SelectionKind::kTmd;
  validate(base);
  if (!(base.num_ports() > base.n_b && base.n_b > base.n_a)) {
    throw ConfigError("benchmark needs N > N_b > N_a");
  }
  const CorrelationModel model = build_correlation_model(port_coordinates(base.grid));
  const SortedPairArrays pairs = sorted_pair_correlations(model);
  const double n0 = NoiseModel::from_snr_db(
                        base.select_snr_db.value_or(base.snr_db.empty() ? 10.0 : base.snr_db.front()))
                        .n0;

  std::vector<ChannelMatrix> channels;
  channels.reserve(repetitions);
  for (std::size_t r = 0; r < repetitions; ++r) {
    SeededRng rng(base.master_seed, stream_id({kBenchTag, r}));
    channels.push_back(sample_correlated_channel(model, base.n_r, rng));
  }

  std::vector<SelectionTiming> table;
  for (SelectionKind kind : {SelectionKind::kOptimal, SelectionKind::kTmd, SelectionKind::kMceTmd}) {
    SelectionTiming row;
    row.kind = kind;
    std::vector<double> samples;
    samples.reserve(repetitions);
    for (const auto& h : channels) {
      const auto start = std::chrono::steady_clock::now();
      Selection sel;
      try {
        switch (kind) {
          case SelectionKind::kOptimal:
            sel = optimal_select(h, base.n_a, base.precoder, {n0});
            break;
          case SelectionKind::kTmd:
            sel = tmd_select(h, base.n_a);
            break;
          default:
            sel = mce_tmd_select(h, pairs, base.n_b, base.n_a);
            break;
        }
      } catch (const NumericalError&) {
        continue;
      }
      const auto stop = std::chrono::steady_clock::now();
      samples.push_back(std::chrono::duration<double, std::micro>(stop - start).count());
      row.stats = sel.stats;
    }
    if (!samples.empty()) {
      auto mid = samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2);
      std::nth_element(samples.begin(), mid, samples.end());
      row.median_us = *mid;
    }
    table.push_back(row);
  }
  return table;
}

}  // namespace farsm
