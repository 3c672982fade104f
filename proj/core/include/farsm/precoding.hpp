#pragma once

#include <string_view>

#include "farsm/channel.hpp"
#include "farsm/modulation.hpp"
#include "farsm/rng.hpp"
#include "farsm/types.hpp"

namespace farsm {

enum class PrecoderKind { kZf, kMmse };

std::string_view to_string(PrecoderKind kind);

/// Per-antenna complex noise variance N0. With unit average transmit power
/// the SNR is 1/N0.
struct NoiseModel {
  double n0 = 0.0;

  static NoiseModel from_snr_db(double snr_db);
  double snr_db() const;
};

/// N_a x N_r precoding matrix normalized to tr(P P^H) = N_r.
struct Precoder {
  CMatrix p;
  double beta = 0.0;
  PrecoderKind kind = PrecoderKind::kZf;
  double noise_power_used = 0.0;  ///< N0 inside the MMSE regularizer; 0 for ZF
};

/// Gram matrices with a condition number above this are rejected by ZF.
inline constexpr double kMaxGramCondition = 1e12;

/// P = beta * H^H (H H^H)^{-1}, beta = sqrt(N_r / tr((H H^H)^{-1})).
/// Throws NumericalError (carrying the condition estimate) when H H^H is
/// singular or worse conditioned than kMaxGramCondition.
Precoder zf_precoder(const ChannelMatrix& h_sel);

/// P = beta * H^H (H H^H + N_r N0 I)^{-1} with
/// beta = sqrt(N_r / tr(H H^H (H H^H + N_r N0 I)^{-2})).
Precoder mmse_precoder(const ChannelMatrix& h_sel, const NoiseModel& noise);

Precoder build_precoder(PrecoderKind kind, const ChannelMatrix& h_sel,
                        const NoiseModel& noise);

/// G = H H^H (H H^H + N_r N0 I)^{-1}; H * P_mmse == beta_mmse * G.
CMatrix effective_gain_matrix(const ChannelMatrix& h_sel, const NoiseModel& noise);

/// y = H P (s_m e_k) + w with w ~ CN(0, N0 I). N0 = 0 gives the noiseless
/// signal and consumes no randomness.
CVector transmit(const ChannelMatrix& h_sel, const Precoder& prec, const SpatialSymbol& sym,
                 const Constellation& constellation, const NoiseModel& noise, SeededRng& rng);

/// Adds CN(0, n0) noise to every entry of y in place.
void add_noise(CVector& y, double n0, SeededRng& rng);

}  // namespace farsm
