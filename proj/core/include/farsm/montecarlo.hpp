#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "farsm/channel.hpp"
#include "farsm/detection.hpp"
#include "farsm/geometry.hpp"
#include "farsm/modulation.hpp"
#include "farsm/port_selection.hpp"
#include "farsm/precoding.hpp"

namespace farsm {

/// Every knob of a link-level run. Defaults reproduce the reference
/// configuration: 4x4 ports on a 1x1 wavelength aperture, N_a = N_r = 4,
/// 4QAM, optimal selection, ML detection.
struct SimConfig {
  GridParams grid;
  std::size_t n_r = 4;
  std::size_t n_a = 4;
  std::size_t n_b = 12;
  std::size_t mod_order = 4;
  PrecoderKind precoder = PrecoderKind::kZf;
  SelectionKind portsel = SelectionKind::kOptimal;
  /// Detectors evaluated on the same received samples; one output variant each.
  std::vector<DetectorKind> detectors{DetectorKind::kMld};
  double gamma = kDefaultGamma;
  std::vector<double> snr_db{0.0, 5.0, 10.0, 15.0};
  std::uint64_t trials = 100000;
  std::uint64_t master_seed = 1;
  /// Traditional RSM: i.i.d. channel with N_t = n_a antennas, no selection.
  bool baseline = false;
  /// Operating point for MMSE capacity-based selection. Unset means the
  /// N0 of each simulated SNR point.
  std::optional<double> select_snr_db;
  /// Noise-free received signal; precoders and selection use
  /// `noiseless_design_n0` instead of the SNR grid.
  bool noiseless = false;
  double noiseless_design_n0 = 1e-6;
  /// Worker threads; 0 = FARSM_THREADS or hardware concurrency.
  std::size_t threads = 0;

  std::size_t num_ports() const { return grid.num_ports(); }
  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// Throws ConfigError describing the first violated invariant.
void validate(const SimConfig& cfg);

/// "fa-rsm-zf-optimal-mld", "rsm-mmse-rttd", ...
std::string variant_label(const SimConfig& cfg, DetectorKind detector);

struct BerPoint {
  std::string variant;
  double snr_db = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t bits = 0;
  std::uint64_t bit_errors = 0;
  std::uint64_t symbol_errors = 0;
  double ber = 0.0;
  double ci_low = 0.0;   ///< 95% Wilson interval
  double ci_high = 0.0;
  std::uint64_t med_path_decisions = 0;  ///< RTTD only
  std::uint64_t redraws = 0;  ///< channel re-draws after numerical failures
};

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t n,
                                          double z = 1.959963984540054);

/// Result of one received sample under every configured detector.
struct PointOutcome {
  double snr_db = 0.0;
  BitBlock tx;
  std::vector<BitBlock> rx;            ///< parallel to SimConfig::detectors
  std::vector<DetectionPath> paths;
  double ratio = 1.0;                  ///< energy_ratio(y); 1 when N_r == 1
};

struct TrialOutcome {
  std::vector<PointOutcome> points;    ///< parallel to SimConfig::snr_db
  std::uint32_t redraws = 0;
};

/// Precomputed, immutable simulation state for one configuration. One
/// trial draws a channel and selects ports once, then evaluates every SNR
/// point and detector on it; all randomness comes from streams keyed by
/// (master_seed, trial index), so results do not depend on scheduling.
class LinkSimulator {
 public:
  explicit LinkSimulator(SimConfig cfg);

  const SimConfig& config() const noexcept { return cfg_; }
  const Constellation& constellation() const noexcept { return constellation_; }
  /// Empty for the i.i.d. baseline.
  const std::optional<CorrelationModel>& correlation() const noexcept { return model_; }
  const std::optional<SortedPairArrays>& pairs() const noexcept { return pairs_; }

  /// Channel of `trial` on re-draw `attempt`.
  ChannelMatrix sample_channel(std::uint64_t trial, std::uint32_t attempt = 0) const;

  /// Port selection per the configured algorithm at noise level `n0`.
  Selection select(const ChannelMatrix& h, double n0) const;

  /// Full pipeline for one trial. Numerical failures re-draw the channel
  /// from a derived stream, up to kMaxRedraws times.
  TrialOutcome run(std::uint64_t trial) const;

  static constexpr std::uint32_t kMaxRedraws = 64;

 private:
  bool selection_depends_on_snr() const;
  double design_n0(double snr_db) const;
  TrialOutcome run_attempt(std::uint64_t trial, std::uint32_t attempt) const;

  SimConfig cfg_;
  Constellation constellation_;
  std::optional<CorrelationModel> model_;
  std::optional<SortedPairArrays> pairs_;
};

/// One pass of the pipeline at a single SNR for the first configured
/// detector: (transmitted bits, detected bits).
std::pair<BitBlock, BitBlock> run_trial(const SimConfig& cfg, double snr_db,
                                        std::uint64_t trial_index);

/// Aggregates cfg.trials trials per SNR point. Points are ordered by
/// detector, then SNR.
std::vector<BerPoint> run_ber_sweep(const SimConfig& cfg);

struct RatioHistogram {
  std::vector<double> bin_edges;       ///< bins + 1 uniform edges over [0, 1]
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  /// Fraction of samples in bins entirely below `edge` (edge must be a bin edge
  /// for an exact answer).
  double fraction_below(double edge) const;
  /// Quantile by linear interpolation inside the containing bin.
  double quantile(double q) const;
};

/// Distribution of the second-to-first received energy ratio. Requires an
/// MMSE precoder and N_r >= 2.
RatioHistogram ratio_histogram(const SimConfig& cfg, double snr_db, std::uint64_t trials,
                               std::size_t bins = 50);

struct SelectionTiming {
  SelectionKind kind = SelectionKind::kOptimal;
  double median_us = 0.0;
  SelectionStats stats;  ///< from the last repetition
};

/// Median wall-clock time per selection call of the optimal, TMD and
/// MCE-TMD algorithms over `repetitions` channel draws.
std::vector<SelectionTiming> portsel_benchmark(const SimConfig& cfg, std::size_t repetitions);

/// Worker count: cfg.threads if set, else FARSM_THREADS, else hardware
/// concurrency (at least 1).
std::size_t resolve_threads(std::size_t requested);

}  // namespace farsm
