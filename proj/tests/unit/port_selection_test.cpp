#include "farsm/port_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.hpp"

namespace farsm {
namespace {

// 4 * log2(3.5): ZF capacity of the 4x4 identity channel at N0 = 0.1.
constexpr double kIdentityZfCapacity = 7.229419688230416;

std::vector<std::vector<PortIndex>> all_subsets(std::size_t n, std::size_t k) {
  std::vector<std::vector<PortIndex>> out;
  std::vector<bool> mask(n, false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(k), true);
  do {
    std::vector<PortIndex> s;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) s.push_back(i);
    }
    out.push_back(std::move(s));
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return out;  // lexicographic order
}

double inverse_gram_trace(const ChannelMatrix& h, const std::vector<PortIndex>& ports) {
  return testing::direct_inverse_gram(h, ports).trace().real();
}

// MMSE capacity from the eigenvalues s of H H^H.
double mmse_capacity_oracle(const ChannelMatrix& h_sel, double n0) {
  const CMatrix gram = h_sel.entries * h_sel.entries.adjoint();
  const RVector s = Eigen::SelfAdjointEigenSolver<CMatrix>(gram).eigenvalues();
  const double n_r = static_cast<double>(gram.rows());
  const double c = n_r * n0;
  double denom = 0.0;
  for (double v : s) denom += v / ((v + c) * (v + c));
  const double beta2 = n_r / denom;
  double cap = 0.0;
  for (double v : s) cap += std::log2(1.0 + beta2 * v * v / ((v + c) * (v + c) * c));
  return cap;
}

TEST(CapacityTest, IdentityChannelZf) {
  const ChannelMatrix h{CMatrix::Identity(4, 4), ChannelKind::kIidBaseline};
  EXPECT_NEAR(capacity_of_set(h, PortSet::first(4, 4), PrecoderKind::kZf, {0.1}),
              kIdentityZfCapacity, 1e-12);
}

TEST(CapacityTest, ZfClosedForm) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto h = testing::default_channel(seed);
    const std::vector<PortIndex> ports{1, 6, 11, 12};
    const double n0 = 0.05;
    const double expected = 4.0 * std::log2(1.0 + 1.0 / (n0 * inverse_gram_trace(h, ports)));
    EXPECT_NEAR(capacity_of_set(h, PortSet(ports, 16), PrecoderKind::kZf, {n0}), expected,
                1e-9 * expected);
  }
}

TEST(CapacityTest, MmseEigenvalueForm) {
  for (double n0 : {1.0, 0.1, 0.01}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto h = testing::default_channel(seed);
      const PortSet ports({0, 3, 9, 14}, 16);
      const double expected = mmse_capacity_oracle(restrict_to_ports(h, ports), n0);
      EXPECT_NEAR(capacity_of_set(h, ports, PrecoderKind::kMmse, {n0}), expected,
                  1e-9 * expected);
    }
  }
}

TEST(CapacityTest, RejectsZeroNoise) {
  const auto h = testing::default_channel(1);
  EXPECT_THROW(capacity_of_set(h, PortSet::first(4, 16), PrecoderKind::kZf, {0.0}), ConfigError);
}

class OptimalSelectTest : public ::testing::TestWithParam<PrecoderKind> {};

TEST_P(OptimalSelectTest, MatchesBruteForce) {
  const PrecoderKind kind = GetParam();
  const NoiseModel noise = NoiseModel::from_snr_db(10.0);
  const auto subsets = all_subsets(16, 4);
  ASSERT_EQ(subsets.size(), 1820u);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto h = testing::default_channel(seed, 77);
    double best = -1.0;
    std::vector<PortIndex> arg;
    for (const auto& s : subsets) {
      const double c = capacity_of_set(h, PortSet(s, 16), kind, noise);
      if (c > best) {
        best = c;
        arg = s;
      }
    }
    const auto sel = optimal_select(h, 4, kind, noise);
    EXPECT_EQ(sel.ports, PortSet(arg, 16)) << "seed " << seed;
    EXPECT_EQ(sel.stats.candidates_evaluated, 1820u);
  }
}

// Receive arrays of several sizes, including one past the small-matrix kernels.
TEST_P(OptimalSelectTest, MatchesBruteForceAcrossReceiveSizes) {
  const PrecoderKind kind = GetParam();
  const NoiseModel noise = NoiseModel::from_snr_db(5.0);
  for (std::size_t n_r : {2u, 6u, 10u}) {
    const std::size_t n = n_r + 3, n_a = n_r + 1;
    const auto h = testing::iid_channel(n_r, n, 100 + n_r);
    double best = -1.0;
    std::vector<PortIndex> arg;
    for (const auto& s : all_subsets(n, n_a)) {
      const double c = capacity_of_set(h, PortSet(s, n), kind, noise);
      if (c > best) {
        best = c;
        arg = s;
      }
    }
    EXPECT_EQ(optimal_select(h, n_a, kind, noise).ports, PortSet(arg, n)) << "N_r " << n_r;
  }
}

INSTANTIATE_TEST_SUITE_P(Precoders, OptimalSelectTest,
                         ::testing::Values(PrecoderKind::kZf, PrecoderKind::kMmse));

TEST(OptimalSelectEdgeTest, FullSetAndSingleAntenna) {
  const auto h = testing::default_channel(2);
  const auto full = optimal_select(restrict_to_ports(h, PortSet::first(4, 16)), 4,
                                   PrecoderKind::kZf, {0.1});
  EXPECT_EQ(full.ports, PortSet::first(4, 4));

  // One receive antenna: capacity grows with |h_i|^2.
  const auto h1 = testing::iid_channel(1, 9, 3);
  Eigen::Index argmax = 0;
  h1.entries.row(0).cwiseAbs2().maxCoeff(&argmax);
  const auto sel = optimal_select(h1, 1, PrecoderKind::kZf, {0.1});
  EXPECT_EQ(sel.ports, PortSet({static_cast<PortIndex>(argmax)}, 9));
}

TEST(OptimalSelectEdgeTest, Validation) {
  const auto h = testing::default_channel(2);
  EXPECT_THROW(optimal_select(h, 3, PrecoderKind::kZf, {0.1}), ConfigError);
  EXPECT_THROW(optimal_select(h, 17, PrecoderKind::kZf, {0.1}), ConfigError);
  const auto wide = testing::iid_channel(4, 30, 1);
  EXPECT_THROW(optimal_select(wide, 10, PrecoderKind::kZf, {0.1}), ConfigError);
}

TEST(BinomialTest, Values) {
  EXPECT_EQ(binomial(16, 4), 1820u);
  EXPECT_EQ(binomial(20, 10), kMaxExhaustiveCandidates);
  EXPECT_EQ(binomial(25, 4), 12650u);
  EXPECT_EQ(binomial(3, 5), 0u);
  EXPECT_EQ(binomial(200, 100), std::numeric_limits<std::size_t>::max());
}

TEST(SmwDowndateTest, MatchesDirectInverse) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto h = testing::default_channel(seed, 5);
    std::vector<PortIndex> all(16);
    std::iota(all.begin(), all.end(), PortIndex{0});
    const auto state = make_trace_state(h, all);
    const PortIndex drop = seed % 16;
    const auto next = smw_downdate(state, drop, h);
    std::vector<PortIndex> rest = all;
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(drop));
    EXPECT_EQ(next.active, rest);
    EXPECT_LE(testing::rel_frobenius(next.a, testing::direct_inverse_gram(h, rest)), 1e-9);
  }
}

TEST(SmwDowndateTest, TwoDowndatesCommute) {
  const auto h = testing::default_channel(9);
  const auto state = make_trace_state(h, {0, 2, 3, 5, 7, 8, 13});
  const auto ab = smw_downdate(smw_downdate(state, 3, h), 8, h);
  const auto ba = smw_downdate(smw_downdate(state, 8, h), 3, h);
  EXPECT_EQ(ab.active, ba.active);
  EXPECT_LE(testing::rel_frobenius(ab.a, ba.a), 1e-12);
}

TEST(SmwDowndateTest, RejectsInactivePort) {
  const auto h = testing::default_channel(9);
  const auto state = make_trace_state(h, {0, 2, 3, 5, 7});
  EXPECT_THROW(smw_downdate(state, 4, h), ConfigError);
}

TEST(TmdMetricTest, EqualsTraceIncrease) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto h = testing::default_channel(seed, 6);
    std::vector<PortIndex> active{0, 1, 4, 6, 9, 10, 15};
    const auto state = make_trace_state(h, active);
    const double base = state.a.trace().real();
    for (PortIndex p : active) {
      std::vector<PortIndex> rest;
      std::copy_if(active.begin(), active.end(), std::back_inserter(rest),
                   [p](PortIndex q) { return q != p; });
      const double increase = inverse_gram_trace(h, rest) - base;
      EXPECT_NEAR(tmd_trace_metric(state, p, h), increase, 1e-9 * std::max(1.0, increase));
    }
  }
}

TEST(TmdMetricTest, NonRemovablePortIsInfinite) {
  const auto h = testing::default_channel(4);
  const auto state = make_trace_state(h, {1, 5, 9, 13});
  EXPECT_TRUE(std::isinf(tmd_trace_metric(state, 5, h)));
}

TEST(TmdSelectTest, EachRemovalIsTraceArgmin) {
  std::size_t steps = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto h = testing::default_channel(seed, 8);
    auto check = [&](const TraceState& before, PortIndex removed, const TraceState& after) {
      double best = std::numeric_limits<double>::infinity();
      PortIndex arg = before.active.front();
      for (PortIndex p : before.active) {
        std::vector<PortIndex> rest;
        std::copy_if(before.active.begin(), before.active.end(), std::back_inserter(rest),
                     [p](PortIndex q) { return q != p; });
        const double t = inverse_gram_trace(h, rest);
        if (t < best) {
          best = t;
          arg = p;
        }
      }
      EXPECT_EQ(removed, arg);
      EXPECT_LE(testing::rel_frobenius(after.a, testing::direct_inverse_gram(h, after.active)),
                1e-9);
      ++steps;
    };
    const auto sel = tmd_select(h, 4, check);
    EXPECT_EQ(sel.ports.size(), 4u);
    EXPECT_EQ(sel.stats.removal_iterations, 12u);
  }
  EXPECT_EQ(steps, 50u * 12u);
}

TEST(TmdSelectTest, BeatsMedianRandomSet) {
  const auto h = testing::default_channel(10);
  const auto sel = tmd_select(h, 4);
  const double tmd_trace = inverse_gram_trace(h, {sel.ports.begin(), sel.ports.end()});
  SeededRng rng(99, 0);
  std::vector<double> traces;
  for (int r = 0; r < 200; ++r) {
    std::vector<PortIndex> perm(16);
    std::iota(perm.begin(), perm.end(), PortIndex{0});
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    perm.resize(4);
    traces.push_back(inverse_gram_trace(h, perm));
  }
  std::nth_element(traces.begin(), traces.begin() + 100, traces.end());
  EXPECT_LE(tmd_trace, traces[100]);
}

TEST(TmdSelectTest, NearOptimalCapacity) {
  const NoiseModel noise = NoiseModel::from_snr_db(15.0);
  double tmd_sum = 0.0, opt_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto h = testing::default_channel(seed, 11);
    tmd_sum += capacity_of_set(h, tmd_select(h, 4).ports, PrecoderKind::kZf, noise);
    opt_sum += capacity_of_set(h, optimal_select(h, 4, PrecoderKind::kZf, noise).ports,
                               PrecoderKind::kZf, noise);
  }
  EXPECT_LE(tmd_sum, opt_sum + 1e-9);
  EXPECT_GE(tmd_sum, 0.97 * opt_sum);
}

TEST(TmdSelectTest, FullSetIsIdentity) {
  const auto h = testing::iid_channel(4, 4, 2);
  const auto sel = tmd_select(h, 4);
  EXPECT_EQ(sel.ports, PortSet::first(4, 4));
  EXPECT_EQ(sel.stats.removal_iterations, 0u);
}

// Straightforward transcription of the correlation-pruning stage.
std::vector<PortIndex> mce_survivors_reference(const ChannelMatrix& h, const SortedPairArrays& pairs,
                                               std::size_t n_b) {
  const auto n = static_cast<std::size_t>(h.cols());
  struct Pair {
    PortIndex a, b;
  };
  std::vector<Pair> list;
  for (std::size_t j = 0; j < pairs.size(); ++j) list.push_back({pairs.first[j], pairs.second[j]});
  std::vector<PortIndex> alive(n);
  std::iota(alive.begin(), alive.end(), PortIndex{0});
  while (alive.size() > n_b) {
    const std::size_t window = std::min(n_b, list.size());
    std::size_t best = 0;
    for (std::size_t j = 1; j < window; ++j) {
      if (std::abs(h.column(list[j].a).dot(h.column(list[j].b))) >
          std::abs(h.column(list[best].a).dot(h.column(list[best].b)))) {
        best = j;
      }
    }
    const auto [a, b] = list[best];
    const PortIndex drop = h.column(a).squaredNorm() >= h.column(b).squaredNorm() ? b : a;
    alive.erase(std::find(alive.begin(), alive.end(), drop));
    std::erase_if(list, [drop](const Pair& p) { return p.a == drop || p.b == drop; });
  }
  return alive;
}

TEST(MceTmdSelectTest, PreselectionMatchesReference) {
  const auto pairs = sorted_pair_correlations(testing::default_model());
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto h = testing::default_channel(seed, 12);
    const auto survivors = mce_survivors_reference(h, pairs, 12);
    std::vector<PortIndex> seen;
    auto capture = [&](const TraceState& before, PortIndex, const TraceState&) {
      if (seen.empty()) seen = before.active;
    };
    const auto sel = mce_tmd_select(h, pairs, 12, 4, capture);
    EXPECT_EQ(seen, survivors) << "seed " << seed;
    EXPECT_EQ(sel.stats.preselect_iterations, 4u);
    EXPECT_EQ(sel.stats.removal_iterations, 8u);
    EXPECT_EQ(sel.ports.size(), 4u);
    for (PortIndex p : sel.ports) {
      EXPECT_TRUE(std::find(survivors.begin(), survivors.end(), p) != survivors.end());
    }
  }
}

TEST(MceTmdSelectTest, FullBudgetEqualsTmd) {
  const auto pairs = sorted_pair_correlations(testing::default_model());
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto h = testing::default_channel(seed, 13);
    EXPECT_EQ(mce_tmd_select(h, pairs, 16, 4).ports, tmd_select(h, 4).ports);
  }
}

TEST(MceTmdSelectTest, NormTieDropsHigherIndex) {
  const auto model = build_correlation_model(port_coordinates({1.0, 1.0, 3, 1}));
  const auto pairs = sorted_pair_correlations(model);
  CMatrix e = testing::iid_channel(2, 3, 4).entries;
  e.col(1) = e.col(0);  // identical columns: most aligned pair, equal norms
  e.col(2) *= 0.1 * e.col(0).norm() / e.col(2).norm();
  const ChannelMatrix h{e, ChannelKind::kCorrelatedFa};
  const auto sel = mce_tmd_select(h, pairs, 2, 2);
  EXPECT_EQ(sel.ports, PortSet({0, 2}, 3));
}

TEST(MceTmdSelectTest, Validation) {
  const auto pairs = sorted_pair_correlations(testing::default_model());
  const auto h = testing::default_channel(1);
  EXPECT_THROW(mce_tmd_select(h, pairs, 3, 4), ConfigError);
  EXPECT_THROW(mce_tmd_select(h, pairs, 17, 4), ConfigError);
  const auto other = sorted_pair_correlations(
      build_correlation_model(port_coordinates({1.0, 1.0, 3, 3})));
  EXPECT_THROW(mce_tmd_select(h, other, 12, 4), ConfigError);
}

TEST(NestedCapacityTest, SupersetNeverLoses) {
  const NoiseModel noise{0.1};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto h = testing::default_channel(seed, 14);
    const double inner = capacity_of_set(h, PortSet({0, 5, 10, 15}, 16), PrecoderKind::kZf, noise);
    const double outer =
        capacity_of_set(h, PortSet({0, 3, 5, 10, 12, 15}, 16), PrecoderKind::kZf, noise);
    EXPECT_GE(outer, inner - 1e-12);
  }
}

}  // namespace
}  // namespace farsm
