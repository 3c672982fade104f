#pragma once

#include "farsm/channel.hpp"
#include "farsm/types.hpp"

namespace farsm {

/// Activated set `inner` and a strictly larger set `outer` containing it.
class NestedSetPair {
 public:
  /// Throws ConfigError unless inner is a strict subset of outer.
  NestedSetPair(PortSet inner, PortSet outer);

  const PortSet& inner() const noexcept { return inner_; }
  const PortSet& outer() const noexcept { return outer_; }
  /// outer \ inner
  PortSet difference() const;

 private:
  PortSet inner_;
  PortSet outer_;
};

/// ZF capacity loss C_outer - C_inner in bits, evaluated through the
/// Woodbury split (H_I H_I^H)^{-1} = B + D with B = (H_out H_out^H)^{-1}:
///   N_r log2(1 + tr(D) / (tr(B) tr((H_I H_I^H)^{-1}) N0 + tr(B))).
double zf_capacity_loss(const ChannelMatrix& h, const NestedSetPair& pair, double n0);

/// Same quantity as the plain difference of the two ZF capacities
/// N_r log2(1 + 1/(N0 tr((H H^H)^{-1}))). Independent oracle for the above.
double zf_capacity_loss_direct(const ChannelMatrix& h, const NestedSetPair& pair, double n0);

/// N0 -> 0 limit of zf_capacity_loss: N_r log2(1 + tr(D) / tr(B)).
double zf_capacity_loss_bound(const ChannelMatrix& h, const NestedSetPair& pair);

/// MMSE mean-square error N_r N0 tr((H_I H_I^H + N_r N0 I)^{-1}).
double mmse_mse(const ChannelMatrix& h, const PortSet& ports, double n0);

/// MSE reduction eps_inner - eps_outer computed as N_r N0 tr(D') with
/// B' = (H_out H_out^H + N_r N0 I)^{-1}.
double mmse_mse_difference(const ChannelMatrix& h, const NestedSetPair& pair, double n0);

/// tr(D) of the Woodbury split; positive for non-singular instances.
double woodbury_trace_d(const ChannelMatrix& h, const NestedSetPair& pair, double regularizer);

}  // namespace farsm
