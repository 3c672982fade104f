#include "farsm/modulation.hpp"

#include <bit>
#include <cmath>

namespace farsm {

namespace {

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

std::size_t gray_to_binary(std::size_t g) {
  std::size_t b = g;
  for (std::size_t shift = 1; (g >> shift) != 0; ++shift) b ^= g >> shift;
  return b;
}

}  // namespace

unsigned log2_exact(std::size_t power_of_two) {
  if (!is_power_of_two(power_of_two)) {
    throw ConfigError(std::to_string(power_of_two) + " is not a power of two");
  }
  return static_cast<unsigned>(std::countr_zero(power_of_two));
}

std::string Constellation::label(std::size_t m) const {
  return BitBlock{static_cast<std::uint32_t>(m), bits_per_symbol}.to_string();
}

Constellation build_qam(std::size_t order) {
  if (order != 4 && order != 16 && order != 64) {
    throw ConfigError("unsupported QAM order " + std::to_string(order) +
                      " (supported: 4, 16, 64)");
  }
  const unsigned bits = log2_exact(order);
  const unsigned axis_bits = bits / 2;
  const std::size_t levels = std::size_t{1} << axis_bits;
  const double scale = std::sqrt(2.0 * static_cast<double>(order - 1) / 3.0);

  Constellation c;
  c.order = order;
  c.bits_per_symbol = bits;
  c.points.resize(order);
  const std::size_t axis_mask = levels - 1;
  for (std::size_t label = 0; label < order; ++label) {
    const auto level = [&](std::size_t gray) {
      return 2.0 * static_cast<double>(gray_to_binary(gray)) - static_cast<double>(levels - 1);
    };
    const double re = level(label >> axis_bits);
    const double im = level(label & axis_mask);
    c.points[label] = Complex(re, im) / scale;
  }
  return c;
}

BitBlock BitBlock::from_string(std::string_view bits) {
  if (bits.size() > 32) throw ConfigError("bit block longer than 32 bits");
  BitBlock b{0, static_cast<unsigned>(bits.size())};
  for (char ch : bits) {
    if (ch != '0' && ch != '1') throw ConfigError("bit string may only contain 0 and 1");
    b.value = (b.value << 1) | static_cast<std::uint32_t>(ch == '1');
  }
  return b;
}

std::string BitBlock::to_string() const {
  std::string s(length, '0');
  for (unsigned i = 0; i < length; ++i) {
    if ((value >> (length - 1 - i)) & 1U) s[i] = '1';
  }
  return s;
}

SpatialSymbol bits_to_symbol(const BitBlock& bits, std::size_t n_r,
                             const Constellation& constellation) {
  const unsigned spatial_bits = log2_exact(n_r);
  if (bits.length != spatial_bits + constellation.bits_per_symbol) {
    throw ConfigError("bit block has " + std::to_string(bits.length) + " bits, expected " +
                      std::to_string(spatial_bits + constellation.bits_per_symbol));
  }
  const std::uint32_t symbol_mask = (1U << constellation.bits_per_symbol) - 1U;
  return {static_cast<std::size_t>(bits.value >> constellation.bits_per_symbol),
          static_cast<std::size_t>(bits.value & symbol_mask)};
}

BitBlock symbol_to_bits(const SpatialSymbol& sym, std::size_t n_r,
                        const Constellation& constellation) {
  const unsigned spatial_bits = log2_exact(n_r);
  return {static_cast<std::uint32_t>((sym.k << constellation.bits_per_symbol) | sym.m),
          spatial_bits + constellation.bits_per_symbol};
}

double spectral_efficiency(std::size_t m_order, std::size_t n_r) {
  return static_cast<double>(log2_exact(m_order)) + static_cast<double>(log2_exact(n_r));
}

unsigned bit_errors(const BitBlock& a, const BitBlock& b) {
  return static_cast<unsigned>(std::popcount(a.value ^ b.value));
}

}  // namespace farsm
