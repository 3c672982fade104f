#pragma once

#include <span>
#include <string_view>

#include "farsm/modulation.hpp"
#include "farsm/types.hpp"

namespace farsm {

enum class DetectorKind { kMld, kMed, kRttd };
enum class DetectionPath { kMld, kMed, kRttdMed, kRttdMld };

std::string_view to_string(DetectorKind kind);
std::string_view to_string(DetectionPath path);

struct DetectionResult {
  std::size_t k_hat = 0;
  std::size_t m_hat = 0;
  DetectionPath path = DetectionPath::kMld;

  SpatialSymbol symbol() const { return {k_hat, m_hat}; }
};

/// Default ratio threshold.
inline constexpr double kDefaultGamma = 0.6;

struct RttdConfig {
  double gamma = kDefaultGamma;  ///< in [0, 1]
};

// All detectors break ties toward the smallest (k, m), k first.

/// Exhaustive ML over every (k, m) with an arbitrary effective channel
/// E = H P: argmin ||y - E e_k s_m||^2.
DetectionResult mld_generic(const CVector& y, const CMatrix& effective,
                            const Constellation& constellation);

/// ML for zero-forcing: argmin ||y - beta s_m e_k||^2.
DetectionResult mld_zf(const CVector& y, double beta, const Constellation& constellation);

/// ML for MMSE precoding: argmin ||y - beta s_m g_k||^2 with g_k the k-th
/// column of the effective gain matrix.
DetectionResult mld_mmse(const CVector& y, double beta, const CMatrix& g,
                         const Constellation& constellation);

/// Two-stage maximum-energy detector: k = argmax |y_k|^2, then
/// m = argmin |y_k - beta * gain_k * s_m|^2 where gain_k = gain_diag[k] when a
/// diagonal is supplied (MMSE) and 1 otherwise (ZF).
DetectionResult med(const CVector& y, double beta, const Constellation& constellation,
                    std::span<const Complex> gain_diag = {});

/// Ratio of the second-largest to the largest |y_k|^2, in [0, 1]. An
/// all-zero y yields 1. Needs at least two entries.
double energy_ratio(const CVector& y);

/// MED (with MMSE demapping on the diagonal of g) when energy_ratio(y) <
/// gamma, full mld_mmse otherwise.
DetectionResult rttd(const CVector& y, double beta, const CMatrix& g,
                     const Constellation& constellation, const RttdConfig& cfg);

}  // namespace farsm
