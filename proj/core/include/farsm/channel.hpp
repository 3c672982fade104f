#pragma once

#include <cstdint>
#include <iosfwd>

#include "farsm/geometry.hpp"
#include "farsm/rng.hpp"
#include "farsm/types.hpp"

namespace farsm {

enum class ChannelKind { kCorrelatedFa, kIidBaseline };

/// Downlink channel, one row per receive antenna and one column per
/// transmit port (or antenna, for the i.i.d. baseline).
struct ChannelMatrix {
  CMatrix entries;
  ChannelKind kind = ChannelKind::kIidBaseline;

  Eigen::Index rows() const noexcept { return entries.rows(); }
  Eigen::Index cols() const noexcept { return entries.cols(); }
  auto column(PortIndex i) const { return entries.col(static_cast<Eigen::Index>(i)); }
};

/// rows x cols matrix of i.i.d. CN(0, 1) entries.
ChannelMatrix sample_iid_cscg(std::size_t rows, std::size_t cols, SeededRng& rng);

/// H = H_iid * root, so each row of H has covariance J.
ChannelMatrix sample_correlated_channel(const CorrelationModel& model,
                                        std::size_t n_r, SeededRng& rng);

/// Columns of `h` listed in `ports`, in ascending port order.
ChannelMatrix restrict_to_ports(const ChannelMatrix& h, const PortSet& ports);

/// Appends rows "trial,row,col,re,im" for every entry of `h`.
void write_channel_csv_rows(std::ostream& out, std::uint64_t trial,
                            const ChannelMatrix& h);
inline constexpr const char* kChannelCsvHeader = "trial,row,col,re,im";

}  // namespace farsm
