#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "farsm/channel.hpp"
#include "farsm/geometry.hpp"
#include "farsm/precoding.hpp"
#include "farsm/types.hpp"

namespace farsm {

enum class SelectionKind { kOptimal, kTmd, kMceTmd, kFirst };

std::string_view to_string(SelectionKind kind);

struct SelectionStats {
  std::size_t candidates_evaluated = 0;  ///< exhaustive search only
  std::size_t preselect_iterations = 0;  ///< MCE stage
  std::size_t removal_iterations = 0;    ///< trace-minimizing removals
};

struct Selection {
  PortSet ports;
  SelectionStats stats;
};

/// Greedy decremental state: `a` is the inverse Gram matrix of the active
/// columns, (H_I H_I^H)^{-1}.
struct TraceState {
  CMatrix a;
  std::vector<PortIndex> active;  ///< ascending
};

/// Direct inversion of the Gram matrix of `active`. Throws NumericalError if
/// that Gram matrix is singular.
TraceState make_trace_state(const ChannelMatrix& h, std::vector<PortIndex> active);

/// log2 det(I + H_I P_I P_I^H H_I^H / (N_r N0)) with P_I the requested
/// precoder for the columns in `ports`.
double capacity_of_set(const ChannelMatrix& h, const PortSet& ports, PrecoderKind kind,
                       const NoiseModel& noise);

/// Largest number of candidate sets the exhaustive search accepts. Equal to
/// C(20, 10), the worst case for grids of up to 20 ports.
inline constexpr std::size_t kMaxExhaustiveCandidates = 184756;

/// Exhaustive capacity maximization over all C(N, n_a) port sets. Ties go to
/// the lexicographically smallest index list. For ZF the capacity ranking is
/// independent of N0; for MMSE `noise` fixes the operating point.
Selection optimal_select(const ChannelMatrix& h, std::size_t n_a, PrecoderKind kind,
                         const NoiseModel& noise);

/// Denominators 1 - h^H A h at or below this mark a port as non-removable.
inline constexpr double kRemovalEpsilon = 1e-12;

/// Increase of tr(A) caused by dropping active port `i`:
/// ||A h_i||^2 / (1 - h_i^H A h_i). Returns +infinity when removing `i` would
/// leave a singular Gram matrix.
double tmd_trace_metric(const TraceState& state, PortIndex i, const ChannelMatrix& h);

/// Rank-one Sherman-Morrison downdate removing port `i`:
/// A' = A + A h h^H A / (1 - h^H A h).
TraceState smw_downdate(const TraceState& state, PortIndex i, const ChannelMatrix& h);

/// Called after every greedy removal with the state before and after it.
using TmdObserver =
    std::function<void(const TraceState& before, PortIndex removed, const TraceState& after)>;

/// Greedy trace-minimizing decremental selection: N - n_a removals, each
/// dropping the active port with the smallest tmd_trace_metric (lowest index
/// on ties), with the inverse Gram maintained by smw_downdate.
Selection tmd_select(const ChannelMatrix& h, std::size_t n_a,
                     const TmdObserver& observer = {});

/// Correlation-pruned TMD. Stage one removes N - n_b ports: each round scans
/// the first min(n_b, remaining) pairs of the filtered correlation ranking,
/// takes the pair with the largest |h_a^H h_b|, and drops its member with the
/// smaller column norm (the higher index on a norm tie); pairs containing the
/// dropped port are filtered out. Stage two runs the greedy TMD removal on
/// the n_b survivors.
Selection mce_tmd_select(const ChannelMatrix& h, const SortedPairArrays& pairs, std::size_t n_b,
                         std::size_t n_a, const TmdObserver& observer = {});

/// Binomial coefficient, saturating at SIZE_MAX.
std::size_t binomial(std::size_t n, std::size_t k);

}  // namespace farsm
