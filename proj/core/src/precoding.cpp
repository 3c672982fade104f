#include "farsm/precoding.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace farsm {

namespace {

void require_wide(const ChannelMatrix& h_sel) {
  if (h_sel.rows() == 0 || h_sel.cols() < h_sel.rows()) {
    throw ConfigError("precoding needs N_a >= N_r (got " + std::to_string(h_sel.cols()) +
                      " ports for " + std::to_string(h_sel.rows()) + " receive antennas)");
  }
}

double gram_condition(const CMatrix& gram) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace

std::string_view to_string(PrecoderKind kind) {
  return kind == PrecoderKind::kZf ? "zf" : "mmse";
}

NoiseModel NoiseModel::from_snr_db(double snr_db) {
  return {std::pow(10.0, -snr_db / 10.0)};
}

double NoiseModel::snr_db() const { return -10.0 * std::log10(n0); }

Precoder zf_precoder(const ChannelMatrix& h_sel) {
  require_wide(h_sel);
  const CMatrix& h = h_sel.entries;
  const CMatrix gram = h * h.adjoint();
  const double cond = gram_condition(gram);
  if (!(cond <= kMaxGramCondition)) {
    std::ostringstream msg;
    msg << "ZF precoding: Gram matrix is singular or ill-conditioned (condition estimate "
        << cond << ")";
    throw NumericalError(msg.str(), cond);
  }
  Eigen::LLT<CMatrix> llt(gram);
  const CMatrix gram_inv = llt.solve(CMatrix::Identity(gram.rows(), gram.cols()));
  const double n_r = static_cast<double>(h.rows());
  const double beta = std::sqrt(n_r / gram_inv.trace().real());
  return {beta * h.adjoint() * gram_inv, beta, PrecoderKind::kZf, 0.0};
}

Precoder mmse_precoder(const ChannelMatrix& h_sel, const NoiseModel& noise) {
  require_wide(h_sel);
  if (!(noise.n0 >= 0.0)) throw ConfigError("noise power must be non-negative");
  if (noise.n0 == 0.0) {
    Precoder zf = zf_precoder(h_sel);
    zf.kind = PrecoderKind::kMmse;
    return zf;
  }
  const CMatrix& h = h_sel.entries;
  const Eigen::Index n_r = h.rows();
  const double reg = static_cast<double>(n_r) * noise.n0;
  const CMatrix gram = h * h.adjoint();
  CMatrix shifted = gram;
  shifted.diagonal().array() += reg;
  Eigen::LLT<CMatrix> llt(shifted);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("MMSE precoding: regularized Gram matrix is not positive definite");
  }
  const CMatrix r = llt.solve(CMatrix::Identity(n_r, n_r));
  const double denom = (gram * r * r).trace().real();
  const double beta = std::sqrt(static_cast<double>(n_r) / denom);
  return {beta * h.adjoint() * r, beta, PrecoderKind::kMmse, noise.n0};
}

Precoder build_precoder(PrecoderKind kind, const ChannelMatrix& h_sel, const NoiseModel& noise) {
  return kind == PrecoderKind::kZf ? zf_precoder(h_sel) : mmse_precoder(h_sel, noise);
}

CMatrix effective_gain_matrix(const ChannelMatrix& h_sel, const NoiseModel& noise) {
  require_wide(h_sel);
  const CMatrix& h = h_sel.entries;
  const Eigen::Index n_r = h.rows();
  const CMatrix gram = h * h.adjoint();
  CMatrix shifted = gram;
  shifted.diagonal().array() += static_cast<double>(n_r) * noise.n0;
  Eigen::LLT<CMatrix> llt(shifted);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("effective gain: regularized Gram matrix is not positive definite");
  }
  return gram * llt.solve(CMatrix::Identity(n_r, n_r));
}

void add_noise(CVector& y, double n0, SeededRng& rng) {
  if (n0 <= 0.0) return;
  const double sigma = std::sqrt(n0);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += sigma * rng.cscg();
}

CVector transmit(const ChannelMatrix& h_sel, const Precoder& prec, const SpatialSymbol& sym,
                 const Constellation& constellation, const NoiseModel& noise, SeededRng& rng) {
  if (prec.p.rows() != h_sel.cols() || prec.p.cols() != h_sel.rows()) {
    throw ConfigError("precoder dimensions do not match the selected channel");
  }
  if (sym.k >= static_cast<std::size_t>(h_sel.rows()) || sym.m >= constellation.order) {
    throw ConfigError("spatial symbol out of range");
  }
  CVector y = h_sel.entries * prec.p.col(static_cast<Eigen::Index>(sym.k)) *
              constellation.points[sym.m];
  add_noise(y, noise.n0, rng);
  return y;
}

}  // namespace farsm
