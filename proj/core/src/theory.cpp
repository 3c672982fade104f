#include "farsm/theory.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace farsm {

namespace {

// (H_S H_S^H + reg I)^{-1}
CMatrix regularized_gram_inverse(const ChannelMatrix& h, const PortSet& ports, double reg) {
  const CMatrix hs = restrict_to_ports(h, ports).entries;
  CMatrix gram = hs * hs.adjoint();
  gram.diagonal().array() += reg;
  Eigen::LLT<CMatrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("Gram matrix of port set " + to_string(ports) + " is singular");
  }
  return llt.solve(CMatrix::Identity(gram.rows(), gram.cols()));
}

struct WoodburySplit {
  CMatrix b;
  CMatrix d;
};

// (H_I H_I^H + reg I)^{-1} = B + D where B is the outer-set inverse and
// D = B H_diff (I - H_diff^H B H_diff)^{-1} H_diff^H B.
WoodburySplit woodbury_split(const ChannelMatrix& h, const NestedSetPair& pair, double reg) {
  WoodburySplit s;
  s.b = regularized_gram_inverse(h, pair.outer(), reg);
  const CMatrix hd = restrict_to_ports(h, pair.difference()).entries;
  CMatrix core = -(hd.adjoint() * s.b * hd);
  core.diagonal().array() += 1.0;
  Eigen::FullPivLU<CMatrix> lu(core);
  if (!lu.isInvertible()) {
    throw NumericalError("Woodbury core matrix I - H^H B H is singular");
  }
  s.d = s.b * hd * lu.inverse() * hd.adjoint() * s.b;
  return s;
}

void require_positive_n0(double n0) {
  if (!(n0 > 0.0)) throw ConfigError("noise power N0 must be positive");
}

}  // namespace

NestedSetPair::NestedSetPair(PortSet inner, PortSet outer)
    : inner_(std::move(inner)), outer_(std::move(outer)) {
  if (inner_.num_ports() != outer_.num_ports() || !inner_.is_strict_subset_of(outer_)) {
    throw ConfigError("nested set pair needs inner " + to_string(inner_) +
                      " to be a strict subset of outer " + to_string(outer_));
  }
}

PortSet NestedSetPair::difference() const {
  std::vector<PortIndex> diff;
  for (PortIndex p : outer_) {
    if (!inner_.contains(p)) diff.push_back(p);
  }
  return PortSet(std::move(diff), outer_.num_ports());
}

double woodbury_trace_d(const ChannelMatrix& h, const NestedSetPair& pair, double regularizer) {
  return woodbury_split(h, pair, regularizer).d.trace().real();
}

double zf_capacity_loss(const ChannelMatrix& h, const NestedSetPair& pair, double n0) {
  require_positive_n0(n0);
  const WoodburySplit s = woodbury_split(h, pair, 0.0);
  const double tr_b = s.b.trace().real();
  const double tr_d = s.d.trace().real();
  const double tr_inner = tr_b + tr_d;
  const double n_r = static_cast<double>(h.rows());
  return n_r * std::log2(1.0 + tr_d / (tr_b * tr_inner * n0 + tr_b));
}

double zf_capacity_loss_direct(const ChannelMatrix& h, const NestedSetPair& pair, double n0) {
  require_positive_n0(n0);
  const double n_r = static_cast<double>(h.rows());
  const auto capacity = [&](const PortSet& ports) {
    const double tr = regularized_gram_inverse(h, ports, 0.0).trace().real();
    return n_r * std::log2(1.0 + 1.0 / (n0 * tr));
  };
  return capacity(pair.outer()) - capacity(pair.inner());
}

double zf_capacity_loss_bound(const ChannelMatrix& h, const NestedSetPair& pair) {
  const WoodburySplit s = woodbury_split(h, pair, 0.0);
  const double n_r = static_cast<double>(h.rows());
  return n_r * std::log2(1.0 + s.d.trace().real() / s.b.trace().real());
}

double mmse_mse(const ChannelMatrix& h, const PortSet& ports, double n0) {
  require_positive_n0(n0);
  const double reg = static_cast<double>(h.rows()) * n0;
  return reg * regularized_gram_inverse(h, ports, reg).trace().real();
}

double mmse_mse_difference(const ChannelMatrix& h, const NestedSetPair& pair, double n0) {
  require_positive_n0(n0);
  const double reg = static_cast<double>(h.rows()) * n0;
  return reg * woodbury_trace_d(h, pair, reg);
}

}  // namespace farsm
