#include "farsm/detection.hpp"

#include <limits>

namespace farsm {

std::string_view to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kMld:
      return "mld";
    case DetectorKind::kMed:
      return "med";
    case DetectorKind::kRttd:
      return "rttd";
  }
  return "unknown";
}

std::string_view to_string(DetectionPath path) {
  switch (path) {
    case DetectionPath::kMld:
      return "mld";
    case DetectionPath::kMed:
      return "med";
    case DetectionPath::kRttdMed:
      return "rttd-med";
    case DetectionPath::kRttdMld:
      return "rttd-mld";
  }
  return "unknown";
}

DetectionResult mld_generic(const CVector& y, const CMatrix& effective,
                            const Constellation& constellation) {
  if (effective.rows() != y.size()) throw ConfigError("effective channel does not match y");
  DetectionResult best;
  double best_metric = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < effective.cols(); ++k) {
    for (std::size_t m = 0; m < constellation.order; ++m) {
      const double metric = (y - effective.col(k) * constellation.points[m]).squaredNorm();
      if (metric < best_metric) {
        best_metric = metric;
        best = {static_cast<std::size_t>(k), m, DetectionPath::kMld};
      }
    }
  }
  return best;
}

DetectionResult mld_zf(const CVector& y, double beta, const Constellation& constellation) {
  // ||y - beta s e_k||^2 = ||y||^2 - |y_k|^2 + |y_k - beta s|^2
  const double total = y.squaredNorm();
  DetectionResult best;
  double best_metric = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double rest = total - std::norm(y(k));
    for (std::size_t m = 0; m < constellation.order; ++m) {
      const double metric = rest + std::norm(y(k) - beta * constellation.points[m]);
      if (metric < best_metric) {
        best_metric = metric;
        best = {static_cast<std::size_t>(k), m, DetectionPath::kMld};
      }
    }
  }
  return best;
}

DetectionResult mld_mmse(const CVector& y, double beta, const CMatrix& g,
                         const Constellation& constellation) {
  if (g.rows() != y.size() || g.cols() != y.size()) {
    throw ConfigError("effective gain matrix must be N_r x N_r");
  }
  DetectionResult best;
  double best_metric = std::numeric_limits<double>::infinity();
  const Eigen::Index n_r = y.size();
  for (Eigen::Index k = 0; k < n_r; ++k) {
    for (std::size_t m = 0; m < constellation.order; ++m) {
      const Complex s = beta * constellation.points[m];
      double metric = 0.0;
      for (Eigen::Index j = 0; j < n_r; ++j) metric += std::norm(y(j) - s * g(j, k));
      if (metric < best_metric) {
        best_metric = metric;
        best = {static_cast<std::size_t>(k), m, DetectionPath::kMld};
      }
    }
  }
  return best;
}

DetectionResult med(const CVector& y, double beta, const Constellation& constellation,
                    std::span<const Complex> gain_diag) {
  if (!gain_diag.empty() && gain_diag.size() != static_cast<std::size_t>(y.size())) {
    throw ConfigError("gain diagonal must have N_r entries");
  }
  Eigen::Index k_hat = 0;
  double best_energy = -1.0;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double e = std::norm(y(k));
    if (e > best_energy) {
      best_energy = e;
      k_hat = k;
    }
  }
  const Complex gain =
      gain_diag.empty() ? Complex(1.0) : gain_diag[static_cast<std::size_t>(k_hat)];
  const Complex scale = beta * gain;
  std::size_t m_hat = 0;
  double best_metric = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < constellation.order; ++m) {
    const double metric = std::norm(y(k_hat) - scale * constellation.points[m]);
    if (metric < best_metric) {
      best_metric = metric;
      m_hat = m;
    }
  }
  return {static_cast<std::size_t>(k_hat), m_hat, DetectionPath::kMed};
}

double energy_ratio(const CVector& y) {
  if (y.size() < 2) throw ConfigError("energy ratio needs at least two receive antennas");
  double first = -1.0;
  double second = -1.0;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double e = std::norm(y(k));
    if (e > first) {
      second = first;
      first = e;
    } else if (e > second) {
      second = e;
    }
  }
  if (first <= 0.0) return 1.0;
  return second / first;
}

DetectionResult rttd(const CVector& y, double beta, const CMatrix& g,
                     const Constellation& constellation, const RttdConfig& cfg) {
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (energy_ratio(y) < cfg.gamma) {
    const CVector diag = g.diagonal();
    DetectionResult r = med(y, beta, constellation, {diag.data(), static_cast<std::size_t>(diag.size())});
    r.path = DetectionPath::kRttdMed;
    return r;
  }
  DetectionResult r = mld_mmse(y, beta, g, constellation);
  r.path = DetectionPath::kRttdMld;
  return r;
}

}  // namespace farsm
