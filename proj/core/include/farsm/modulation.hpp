#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "farsm/types.hpp"

namespace farsm {

/// Unit-average-energy square QAM. Point `m` carries the bit label whose
/// natural binary value is `m`; the upper half of the label selects the
/// in-phase level and the lower half the quadrature level, each Gray coded.
struct Constellation {
  std::size_t order = 0;
  unsigned bits_per_symbol = 0;
  std::vector<Complex> points;

  std::string label(std::size_t m) const;
};

/// Supported orders: 4, 16, 64.
Constellation build_qam(std::size_t order);

/// Receive-antenna index k (0..n_r-1) and constellation index m (0..M-1).
struct SpatialSymbol {
  std::size_t k = 0;
  std::size_t m = 0;
  friend bool operator==(const SpatialSymbol&, const SpatialSymbol&) = default;
};

/// Up to 32 bits, most significant bit first: bit 0 of the block is bit
/// (length-1) of `value`.
struct BitBlock {
  std::uint32_t value = 0;
  unsigned length = 0;

  static BitBlock from_string(std::string_view bits);
  std::string to_string() const;
  friend bool operator==(const BitBlock&, const BitBlock&) = default;
};

unsigned log2_exact(std::size_t power_of_two);

/// Leading log2(n_r) bits pick the antenna (natural binary), the remaining
/// log2(M) bits are the constellation label.
SpatialSymbol bits_to_symbol(const BitBlock& bits, std::size_t n_r,
                             const Constellation& constellation);

BitBlock symbol_to_bits(const SpatialSymbol& sym, std::size_t n_r,
                        const Constellation& constellation);

/// log2(M) + log2(n_r) bits per channel use.
double spectral_efficiency(std::size_t m_order, std::size_t n_r);

/// Number of differing bits between two blocks of equal length.
unsigned bit_errors(const BitBlock& a, const BitBlock& b);

}  // namespace farsm
