#include "farsm/port_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace farsm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_selection_sizes(const ChannelMatrix& h, std::size_t n_a) {
  const auto n_r = static_cast<std::size_t>(h.rows());
  const auto n = static_cast<std::size_t>(h.cols());
  if (n_a < n_r) {
    throw ConfigError("N_a must be >= N_r for precoder invertibility (N_a=" +
                      std::to_string(n_a) + ", N_r=" + std::to_string(n_r) + ")");
  }
  if (n_a > n) {
    throw ConfigError("cannot activate " + std::to_string(n_a) + " of " + std::to_string(n) +
                      " ports");
  }
}

// Small-matrix capacity kernels used by the exhaustive search. `Mat` is an
// Eigen complex matrix type, typically with a fixed upper bound on its size
// so that no heap allocation happens per candidate.
// Small Hermitian kernels for the exhaustive search, sized for N_r <= 8.
// Complex arithmetic is spelled out on real and imaginary parts because
// std::complex multiplication goes through a slow NaN-recovery path.
constexpr int kSmall = 8;

struct SmallMat {
  int n = 0;
  double re[kSmall][kSmall];
  double im[kSmall][kSmall];
};

// Lower Cholesky factor of a Hermitian matrix stored in `a` (lower triangle
// read). Returns false unless the matrix is numerically positive definite.
bool cholesky(const SmallMat& a, SmallMat& l, double* inv_diag) {
  l.n = a.n;
  for (int j = 0; j < a.n; ++j) {
    double d = a.re[j][j];
    for (int k = 0; k < j; ++k) d -= l.re[j][k] * l.re[j][k] + l.im[j][k] * l.im[j][k];
    if (!(d > 0.0)) return false;
    l.re[j][j] = std::sqrt(d);
    l.im[j][j] = 0.0;
    inv_diag[j] = 1.0 / l.re[j][j];
    for (int i = j + 1; i < a.n; ++i) {
      // L(i,j) = (A(i,j) - sum_k L(i,k) conj(L(j,k))) / L(j,j)
      double re = a.re[i][j], im = a.im[i][j];
      for (int k = 0; k < j; ++k) {
        re -= l.re[i][k] * l.re[j][k] + l.im[i][k] * l.im[j][k];
        im -= l.im[i][k] * l.re[j][k] - l.re[i][k] * l.im[j][k];
      }
      l.re[i][j] = re * inv_diag[j];
      l.im[i][j] = im * inv_diag[j];
    }
  }
  return true;
}

// X = L^{-1} (lower triangular) by forward substitution.
void lower_inverse(const SmallMat& l, const double* inv_diag, SmallMat& x) {
  x.n = l.n;
  for (int j = 0; j < l.n; ++j) {
    for (int i = 0; i < j; ++i) x.re[i][j] = x.im[i][j] = 0.0;
    x.re[j][j] = inv_diag[j];
    x.im[j][j] = 0.0;
    for (int i = j + 1; i < l.n; ++i) {
      double re = 0.0, im = 0.0;
      for (int k = j; k < i; ++k) {
        re += l.re[i][k] * x.re[k][j] - l.im[i][k] * x.im[k][j];
        im += l.re[i][k] * x.im[k][j] + l.im[i][k] * x.re[k][j];
      }
      x.re[i][j] = -re * inv_diag[i];
      x.im[i][j] = -im * inv_diag[i];
    }
  }
}

template <typename Mat>
void load(const Mat& m, SmallMat& out) {
  out.n = static_cast<int>(m.rows());
  for (int i = 0; i < out.n; ++i) {
    for (int j = 0; j < out.n; ++j) {
      out.re[i][j] = m(i, j).real();
      out.im[i][j] = m(i, j).imag();
    }
  }
}

// Eigen versions for receive arrays beyond the small kernels' size.
double zf_capacity_eigen(const CMatrix& gram, double n0) {
  Eigen::LLT<CMatrix> llt(gram);
  if (llt.info() != Eigen::Success) return -kInf;
  const CMatrix l_inv = llt.matrixL().solve(CMatrix::Identity(gram.rows(), gram.cols()));
  const double tr_inv = l_inv.squaredNorm();
  if (!std::isfinite(tr_inv) || tr_inv <= 0.0) return -kInf;
  return static_cast<double>(gram.rows()) * std::log2(1.0 + 1.0 / (n0 * tr_inv));
}

double mmse_capacity_eigen(const CMatrix& gram, double n0) {
  const Eigen::Index n_r = gram.rows();
  const double reg = static_cast<double>(n_r) * n0;
  CMatrix shifted = gram;
  shifted.diagonal().array() += reg;
  Eigen::LLT<CMatrix> llt(shifted);
  if (llt.info() != Eigen::Success) return -kInf;
  const CMatrix r = llt.solve(CMatrix::Identity(n_r, n_r));
  CMatrix g = -reg * r;
  g.diagonal().array() += 1.0;
  const double power = r.trace().real() - reg * r.squaredNorm();
  if (!(power > 0.0)) return -kInf;
  CMatrix m = (static_cast<double>(n_r) / power / reg) * (g * g.adjoint());
  m.diagonal().array() += 1.0;
  Eigen::LLT<CMatrix> det_llt(m);
  if (det_llt.info() != Eigen::Success) return -kInf;
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n_r; ++i) {
    log_det += 2.0 * std::log(det_llt.matrixLLT()(i, i).real());
  }
  return log_det / std::numbers::ln2;
}

template <typename Mat>
double zf_capacity_from_gram(const Mat& gram, double n0) {
  if (gram.rows() > kSmall) return zf_capacity_eigen(gram, n0);
  SmallMat g, l, x;
  double inv_diag[kSmall];
  load(gram, g);
  if (!cholesky(g, l, inv_diag)) return -kInf;
  lower_inverse(l, inv_diag, x);
  // tr(G^{-1}) = ||L^{-1}||_F^2
  double tr_inv = 0.0;
  for (int i = 0; i < x.n; ++i) {
    for (int j = 0; j <= i; ++j) tr_inv += x.re[i][j] * x.re[i][j] + x.im[i][j] * x.im[i][j];
  }
  if (!std::isfinite(tr_inv) || tr_inv <= 0.0) return -kInf;
  return static_cast<double>(x.n) * std::log2(1.0 + 1.0 / (n0 * tr_inv));
}

template <typename Mat>
double mmse_capacity_from_gram(const Mat& gram, double n0) {
  if (gram.rows() > kSmall) return mmse_capacity_eigen(gram, n0);
  SmallMat shifted, l, x, r, m;
  double inv_diag[kSmall];
  load(gram, shifted);
  const int n = shifted.n;
  const double reg = static_cast<double>(n) * n0;
  for (int i = 0; i < n; ++i) shifted.re[i][i] += reg;
  if (!cholesky(shifted, l, inv_diag)) return -kInf;
  lower_inverse(l, inv_diag, x);
  // R = (Gram + reg I)^{-1} = X^H X, lower triangle only.
  double tr_r = 0.0, r_norm2 = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double re = 0.0, im = 0.0;
      for (int k = i; k < n; ++k) {
        // conj(X(k,i)) X(k,j)
        re += x.re[k][i] * x.re[k][j] + x.im[k][i] * x.im[k][j];
        im += x.re[k][i] * x.im[k][j] - x.im[k][i] * x.re[k][j];
      }
      r.re[i][j] = re;
      r.im[i][j] = im;
      r.re[j][i] = re;
      r.im[j][i] = -im;
      const double sq = re * re + im * im;
      r_norm2 += i == j ? sq : 2.0 * sq;
      if (i == j) tr_r += re;
    }
  }
  r.n = n;
  // G = Gram R = I - reg R, and tr(Gram R^2) = tr(R) - reg ||R||_F^2.
  const double power = tr_r - reg * r_norm2;
  if (!(power > 0.0)) return -kInf;
  const double scale = static_cast<double>(n) / power / reg;
  // G is Hermitian, so G G^H = G^2. M = I + scale G^2, lower triangle only.
  m.n = n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double re = 0.0, im = 0.0;
      for (int k = 0; k < n; ++k) {
        const double ar = (i == k ? 1.0 : 0.0) - reg * r.re[i][k];
        const double ai = -reg * r.im[i][k];
        const double br = (k == j ? 1.0 : 0.0) - reg * r.re[k][j];
        const double bi = -reg * r.im[k][j];
        re += ar * br - ai * bi;
        im += ar * bi + ai * br;
      }
      m.re[i][j] = scale * re + (i == j ? 1.0 : 0.0);
      m.im[i][j] = scale * im;
    }
  }
  if (!cholesky(m, l, inv_diag)) return -kInf;
  double log_det = 0.0;
  for (int i = 0; i < n; ++i) log_det += 2.0 * std::log(l.re[i][i]);
  return log_det / std::numbers::ln2;
}

template <typename Mat>
class ExhaustiveSearch {
 public:
  ExhaustiveSearch(const ChannelMatrix& h, std::size_t n_a, PrecoderKind kind, double n0)
      : n_(static_cast<std::size_t>(h.cols())), n_a_(n_a), kind_(kind), n0_(n0) {
    const Eigen::Index n_r = h.rows();
    outer_.reserve(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto col = h.column(i);
      outer_.push_back(col * col.adjoint());
    }
    partial_.assign(n_a_ + 1, Mat::Zero(n_r, n_r));
    current_.resize(n_a_);
  }

  Selection run() {
    recurse(0, 0);
    if (best_.empty()) {
      throw NumericalError("exhaustive port selection: every candidate set is singular");
    }
    Selection sel{PortSet(best_, n_), {}};
    sel.stats.candidates_evaluated = evaluated_;
    return sel;
  }

 private:
  void recurse(std::size_t depth, std::size_t start) {
    if (depth == n_a_) {
      ++evaluated_;
      const double c = kind_ == PrecoderKind::kZf ? zf_capacity_from_gram(partial_[depth], n0_)
                                                  : mmse_capacity_from_gram(partial_[depth], n0_);
      // Strict comparison keeps the lexicographically first maximizer.
      if (c > best_capacity_) {
        best_capacity_ = c;
        best_ = current_;
      }
      return;
    }
    for (std::size_t i = start; i + (n_a_ - depth) <= n_; ++i) {
      current_[depth] = i;
      partial_[depth + 1] = partial_[depth] + outer_[i];
      recurse(depth + 1, i + 1);
    }
  }

  std::size_t n_;
  std::size_t n_a_;
  PrecoderKind kind_;
  double n0_;
  std::vector<Mat> outer_;
  std::vector<Mat> partial_;
  std::vector<PortIndex> current_;
  std::vector<PortIndex> best_;
  double best_capacity_ = -kInf;
  std::size_t evaluated_ = 0;
};

// Greedy removal loop shared by TMD and the second MCE-TMD stage.
void run_tmd_removals(const ChannelMatrix& h, TraceState& state, std::size_t n_a,
                      const TmdObserver& observer, SelectionStats& stats) {
  const CMatrix& hm = h.entries;
  CMatrix ah(hm.rows(), hm.cols());
  while (state.active.size() > n_a) {
    ah.noalias() = state.a * hm;
    double best_metric = kInf;
    std::size_t best_pos = state.active.size();
    for (std::size_t pos = 0; pos < state.active.size(); ++pos) {
      const auto i = static_cast<Eigen::Index>(state.active[pos]);
      const double denom = 1.0 - hm.col(i).dot(ah.col(i)).real();
      if (denom <= kRemovalEpsilon) continue;
      const double metric = ah.col(i).squaredNorm() / denom;
      if (metric < best_metric) {
        best_metric = metric;
        best_pos = pos;
      }
    }
    if (best_pos == state.active.size()) {
      throw NumericalError("TMD port selection: no port can be removed without making the "
                           "Gram matrix singular (degenerate channel)");
    }
    const PortIndex removed = state.active[best_pos];
    const auto col = static_cast<Eigen::Index>(removed);
    const double denom = 1.0 - hm.col(col).dot(ah.col(col)).real();
    if (observer) {
      TraceState before = state;
      state.a.noalias() += ah.col(col) * ah.col(col).adjoint() / denom;
      state.active.erase(state.active.begin() + static_cast<std::ptrdiff_t>(best_pos));
      observer(before, removed, state);
    } else {
      state.a.noalias() += ah.col(col) * ah.col(col).adjoint() / denom;
      state.active.erase(state.active.begin() + static_cast<std::ptrdiff_t>(best_pos));
    }
    ++stats.removal_iterations;
  }
}

}  // namespace

std::string_view to_string(SelectionKind kind) {
  switch (kind) {
    case SelectionKind::kOptimal:
      return "optimal";
    case SelectionKind::kTmd:
      return "tmd";
    case SelectionKind::kMceTmd:
      return "mce-tmd";
    case SelectionKind::kFirst:
      return "first";
  }
  return "unknown";
}

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t result = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    const std::size_t num = n - k + i;
    // result * num / i is exact at every step; guard the multiplication.
    if (result > std::numeric_limits<std::size_t>::max() / num) {
      return std::numeric_limits<std::size_t>::max();
    }
    result = result * num / i;
  }
  return result;
}

TraceState make_trace_state(const ChannelMatrix& h, std::vector<PortIndex> active) {
  std::sort(active.begin(), active.end());
  CMatrix gram = CMatrix::Zero(h.rows(), h.rows());
  for (PortIndex p : active) {
    if (p >= static_cast<std::size_t>(h.cols())) throw ConfigError("active port out of range");
    gram.noalias() += h.column(p) * h.column(p).adjoint();
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double cond = lo > 0.0 ? eig.eigenvalues().maxCoeff() / lo : kInf;
  if (!(cond <= kMaxGramCondition)) {
    throw NumericalError("Gram matrix of the active ports is singular", cond);
  }
  Eigen::LLT<CMatrix> llt(gram);
  return {llt.solve(CMatrix::Identity(h.rows(), h.rows())), std::move(active)};
}

double capacity_of_set(const ChannelMatrix& h, const PortSet& ports, PrecoderKind kind,
                       const NoiseModel& noise) {
  if (!(noise.n0 > 0.0)) throw ConfigError("capacity needs a positive noise power");
  const ChannelMatrix h_sel = restrict_to_ports(h, ports);
  const Precoder prec = build_precoder(kind, h_sel, noise);
  const CMatrix eff = h_sel.entries * prec.p;
  const Eigen::Index n_r = eff.rows();
  CMatrix m = eff * eff.adjoint() / (static_cast<double>(n_r) * noise.n0);
  m.diagonal().array() += 1.0;
  Eigen::LLT<CMatrix> llt(m);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n_r; ++i) log_det += 2.0 * std::log(llt.matrixLLT()(i, i).real());
  return log_det / std::numbers::ln2;
}

Selection optimal_select(const ChannelMatrix& h, std::size_t n_a, PrecoderKind kind,
                         const NoiseModel& noise) {
  require_selection_sizes(h, n_a);
  if (!(noise.n0 > 0.0)) throw ConfigError("optimal selection needs a positive noise power");
  const auto n = static_cast<std::size_t>(h.cols());
  const std::size_t candidates = binomial(n, n_a);
  if (candidates > kMaxExhaustiveCandidates) {
    throw ConfigError("exhaustive selection over C(" + std::to_string(n) + "," +
                      std::to_string(n_a) + ") = " + std::to_string(candidates) +
                      " sets exceeds the budget of " + std::to_string(kMaxExhaustiveCandidates) +
                      "; use tmd or mce-tmd");
  }
  if (h.rows() <= 8) {
    using Small = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;
    return ExhaustiveSearch<Small>(h, n_a, kind, noise.n0).run();
  }
  return ExhaustiveSearch<CMatrix>(h, n_a, kind, noise.n0).run();
}

double tmd_trace_metric(const TraceState& state, PortIndex i, const ChannelMatrix& h) {
  const CVector ah = state.a * h.column(i);
  const double denom = 1.0 - h.column(i).dot(ah).real();
  if (denom <= kRemovalEpsilon) return kInf;
  return ah.squaredNorm() / denom;
}

TraceState smw_downdate(const TraceState& state, PortIndex i, const ChannelMatrix& h) {
  const auto it = std::lower_bound(state.active.begin(), state.active.end(), i);
  if (it == state.active.end() || *it != i) {
    throw ConfigError("port " + std::to_string(i) + " is not active");
  }
  const CVector ah = state.a * h.column(i);
  const double denom = 1.0 - h.column(i).dot(ah).real();
  if (denom <= kRemovalEpsilon) {
    throw NumericalError("removing port " + std::to_string(i) +
                         " would make the Gram matrix singular");
  }
  TraceState next{state.a + ah * ah.adjoint() / denom, state.active};
  next.active.erase(next.active.begin() + (it - state.active.begin()));
  return next;
}

Selection tmd_select(const ChannelMatrix& h, std::size_t n_a, const TmdObserver& observer) {
  require_selection_sizes(h, n_a);
  const auto n = static_cast<std::size_t>(h.cols());
  Selection sel;
  if (n == n_a) {
    sel.ports = PortSet::first(n, n);
    return sel;
  }
  std::vector<PortIndex> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  TraceState state = make_trace_state(h, std::move(all));
  run_tmd_removals(h, state, n_a, observer, sel.stats);
  sel.ports = PortSet(state.active, n);
  return sel;
}

Selection mce_tmd_select(const ChannelMatrix& h, const SortedPairArrays& pairs, std::size_t n_b,
                         std::size_t n_a, const TmdObserver& observer) {
  require_selection_sizes(h, n_a);
  const auto n = static_cast<std::size_t>(h.cols());
  if (n_b < n_a || n_b > n) {
    throw ConfigError("MCE-TMD needs N >= N_b >= N_a (N=" + std::to_string(n) +
                      ", N_b=" + std::to_string(n_b) + ", N_a=" + std::to_string(n_a) + ")");
  }
  if (pairs.size() != n * (n - 1) / 2) {
    throw ConfigError("pair correlation arrays do not match the channel's port count");
  }

  Selection sel;
  std::vector<double> norm2(n);
  for (std::size_t i = 0; i < n; ++i) norm2[i] = h.column(i).squaredNorm();

  std::vector<PortIndex> first = pairs.first;
  std::vector<PortIndex> second = pairs.second;
  std::vector<bool> removed(n, false);

  for (std::size_t t = 0; t < n - n_b; ++t) {
    const std::size_t window = std::min(n_b, first.size());
    if (window == 0) {
      throw NumericalError("MCE pre-selection ran out of port pairs");
    }
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t b = 0; b < window; ++b) {
      const double mag = std::abs(h.column(first[b]).dot(h.column(second[b])));
      if (mag > best_mag) {
        best_mag = mag;
        best = b;
      }
    }
    const PortIndex lo = first[best];
    const PortIndex hi = second[best];
    const PortIndex drop = norm2[lo] >= norm2[hi] ? hi : lo;
    removed[drop] = true;

    std::size_t keep = 0;
    for (std::size_t j = 0; j < first.size(); ++j) {
      if (first[j] != drop && second[j] != drop) {
        first[keep] = first[j];
        second[keep] = second[j];
        ++keep;
      }
    }
    first.resize(keep);
    second.resize(keep);
    ++sel.stats.preselect_iterations;
  }

  std::vector<PortIndex> survivors;
  survivors.reserve(n_b);
  for (std::size_t i = 0; i < n; ++i) {
    if (!removed[i]) survivors.push_back(i);
  }
  if (survivors.size() == n_a) {
    sel.ports = PortSet(std::move(survivors), n);
    return sel;
  }
  TraceState state = make_trace_state(h, std::move(survivors));
  run_tmd_removals(h, state, n_a, observer, sel.stats);
  sel.ports = PortSet(state.active, n);
  return sel;
}

}  // namespace farsm
