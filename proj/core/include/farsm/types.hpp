#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace farsm {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Port indices are zero-based throughout the library.
using PortIndex = std::size_t;

/// Invalid parameters or inconsistent configuration. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown (singular Gram matrix, degenerate channel).
/// Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double condition_estimate = 0.0)
      : std::runtime_error(what), condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// Sorted set of distinct activated port indices.
class PortSet {
 public:
  PortSet() = default;

  /// Sorts and validates. Throws ConfigError on duplicates or
  /// any index >= num_ports.
  PortSet(std::vector<PortIndex> indices, std::size_t num_ports);
  PortSet(std::initializer_list<PortIndex> indices, std::size_t num_ports)
      : PortSet(std::vector<PortIndex>(indices), num_ports) {}

  /// Ports {0, ..., count-1}.
  static PortSet first(std::size_t count, std::size_t num_ports);

  std::span<const PortIndex> indices() const noexcept { return indices_; }
  std::size_t size() const noexcept { return indices_.size(); }
  std::size_t num_ports() const noexcept { return num_ports_; }
  PortIndex operator[](std::size_t i) const { return indices_[i]; }
  bool contains(PortIndex port) const;
  bool is_strict_subset_of(const PortSet& other) const;

  auto begin() const noexcept { return indices_.begin(); }
  auto end() const noexcept { return indices_.end(); }

  friend bool operator==(const PortSet&, const PortSet&) = default;

 private:
  std::vector<PortIndex> indices_;
  std::size_t num_ports_ = 0;
};

std::string to_string(const PortSet& ports);

}  // namespace farsm
