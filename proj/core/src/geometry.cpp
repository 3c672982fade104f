#include "farsm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

#include <Eigen/Eigenvalues>

namespace farsm {

double spherical_bessel_j0(double x) {
  // Below ~1e-4 the Taylor terms past x^4 are under one ulp.
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

FluidAntennaGrid port_coordinates(const GridParams& params) {
  if (params.n1 == 0 || params.n2 == 0) {
    throw ConfigError("port grid needs n1 >= 1 and n2 >= 1");
  }
  if (!(params.w1 >= 0.0) || !(params.w2 >= 0.0) || !std::isfinite(params.w1) ||
      !std::isfinite(params.w2)) {
    throw ConfigError("port grid apertures must be finite and non-negative");
  }

  const auto spacing = [](double width, std::size_t n) {
    return n > 1 ? width / static_cast<double>(n - 1) : 0.0;
  };
  const double dx = spacing(params.w2, params.n2);
  const double dy = spacing(params.w1, params.n1);

  FluidAntennaGrid grid{params, {}};
  grid.coords.reserve(params.num_ports());
  for (std::size_t i2 = 0; i2 < params.n2; ++i2) {
    for (std::size_t i1 = 0; i1 < params.n1; ++i1) {
      grid.coords.push_back({static_cast<double>(i2) * dx,
                             static_cast<double>(i1) * dy});
    }
  }
  return grid;
}

CorrelationModel build_correlation_model(const FluidAntennaGrid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.num_ports());
  if (n == 0) throw ConfigError("correlation model needs at least one port");

  // Distances come from integer index offsets so that port pairs with the
  // same displacement get bit-identical correlations (exact ties).
  const GridParams& g = grid.params;
  if (static_cast<std::size_t>(n) != g.num_ports()) {
    throw ConfigError("grid coordinates do not match the grid parameters");
  }
  const double dx = g.n2 > 1 ? g.w2 / static_cast<double>(g.n2 - 1) : 0.0;
  const double dy = g.n1 > 1 ? g.w1 / static_cast<double>(g.n1 - 1) : 0.0;
  const auto offset = [](std::size_t u, std::size_t v) {
    return static_cast<double>(u > v ? u - v : v - u);
  };

  CorrelationModel model;
  model.j.resize(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    model.j(a, a) = 1.0;
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const auto ua = static_cast<std::size_t>(a);
      const auto ub = static_cast<std::size_t>(b);
      const double dist = std::hypot(offset(ua / g.n1, ub / g.n1) * dx,
                                     offset(ua % g.n1, ub % g.n1) * dy);
      const double v = spherical_bessel_j0(2.0 * std::numbers::pi * dist);
      model.j(a, b) = v;
      model.j(b, a) = v;
    }
  }

  Eigen::SelfAdjointEigenSolver<RMatrix> eig(model.j);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition of the port correlation matrix failed");
  }
  model.eigvecs = eig.eigenvectors();
  const RVector raw = eig.eigenvalues();
  const RMatrix rebuilt =
      model.eigvecs * raw.asDiagonal() * model.eigvecs.transpose();
  model.reconstruction_error = (rebuilt - model.j).norm() / model.j.norm();

  model.eigvals = raw.cwiseMax(0.0);
  model.root = model.eigvals.cwiseSqrt().asDiagonal() * model.eigvecs.transpose();
  return model;
}

SortedPairArrays sorted_pair_correlations(const CorrelationModel& model) {
  const std::size_t n = model.num_ports();
  if (n < 2) throw ConfigError("pair correlations need at least two ports");

  struct Pair {
    PortIndex a;
    PortIndex b;
    double v;
  };
  std::vector<Pair> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (PortIndex a = 0; a < n; ++a) {
    for (PortIndex b = a + 1; b < n; ++b) {
      pairs.push_back({a, b, model.j(static_cast<Eigen::Index>(a),
                                     static_cast<Eigen::Index>(b))});
    }
  }
  // Generation order is already lexicographic, so a stable sort on the value
  // alone yields the required tie-break.
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& l, const Pair& r) { return l.v > r.v; });

  SortedPairArrays out;
  out.first.reserve(pairs.size());
  out.second.reserve(pairs.size());
  out.values.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.first.push_back(p.a);
    out.second.push_back(p.b);
    out.values.push_back(p.v);
  }
  return out;
}

void write_correlation_csv(std::ostream& out, const CorrelationModel& model) {
  const auto old_precision = out.precision(17);
  for (Eigen::Index r = 0; r < model.j.rows(); ++r) {
    for (Eigen::Index c = 0; c < model.j.cols(); ++c) {
      if (c) out << ',';
      out << model.j(r, c);
    }
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace farsm
