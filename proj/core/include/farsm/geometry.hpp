#pragma once

#include <iosfwd>
#include <vector>

#include "farsm/types.hpp"

namespace farsm {

/// Aperture and port counts of a planar fluid-antenna grid. Lengths are in
/// carrier wavelengths.
struct GridParams {
  double w1 = 1.0;  ///< vertical aperture
  double w2 = 1.0;  ///< horizontal aperture
  std::size_t n1 = 4;  ///< ports per column (vertical)
  std::size_t n2 = 4;  ///< ports per row (horizontal)

  std::size_t num_ports() const noexcept { return n1 * n2; }
  friend bool operator==(const GridParams&, const GridParams&) = default;
};

struct PortCoordinate {
  double x = 0.0;
  double y = 0.0;
};

/// Port positions of a uniform grid, column-major: port (i2 * n1 + i1) sits
/// at (i2 * w2 / (n2 - 1), i1 * w1 / (n1 - 1)). Endpoints of both apertures
/// are occupied; a single-port axis collapses to coordinate 0.
struct FluidAntennaGrid {
  GridParams params;
  std::vector<PortCoordinate> coords;

  std::size_t num_ports() const noexcept { return coords.size(); }
};

/// Spatial correlation J between ports together with its eigen-factorization.
/// `root` satisfies root^T * root == J (up to clamping of tiny negative
/// eigenvalues) and colors an i.i.d. row vector: h = h_iid * root.
struct CorrelationModel {
  RMatrix j;
  RVector eigvals;  ///< clamped to >= 0, ascending
  RMatrix eigvecs;  ///< orthogonal, columns match eigvals
  RMatrix root;     ///< sqrt(diag(eigvals)) * eigvecs^T
  double reconstruction_error = 0.0;  ///< pre-clamp, relative Frobenius

  std::size_t num_ports() const noexcept {
    return static_cast<std::size_t>(j.rows());
  }
};

/// All unordered port pairs (first < second) ordered by descending
/// correlation; ties by ascending (first, second).
struct SortedPairArrays {
  std::vector<PortIndex> first;
  std::vector<PortIndex> second;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
};

/// sin(x)/x, with the continuous value 1 at the origin.
double spherical_bessel_j0(double x);

FluidAntennaGrid port_coordinates(const GridParams& params);

CorrelationModel build_correlation_model(const FluidAntennaGrid& grid);

SortedPairArrays sorted_pair_correlations(const CorrelationModel& model);

/// Full matrix, row-major, 17 significant digits, no header.
void write_correlation_csv(std::ostream& out, const CorrelationModel& model);

}  // namespace farsm
