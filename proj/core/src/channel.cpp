#include "farsm/channel.hpp"

#include <ostream>
#include <string>

namespace farsm {

ChannelMatrix sample_iid_cscg(std::size_t rows, std::size_t cols, SeededRng& rng) {
  if (rows == 0 || cols == 0) throw ConfigError("channel dimensions must be positive");
  ChannelMatrix h{CMatrix(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)),
                  ChannelKind::kIidBaseline};
  // Row-major draw order so that a row's samples are contiguous in the stream.
  for (Eigen::Index r = 0; r < h.entries.rows(); ++r) {
    for (Eigen::Index c = 0; c < h.entries.cols(); ++c) h.entries(r, c) = rng.cscg();
  }
  return h;
}

ChannelMatrix sample_correlated_channel(const CorrelationModel& model,
                                        std::size_t n_r, SeededRng& rng) {
  const std::size_t n = model.num_ports();
  if (n == 0 || model.root.rows() != model.root.cols() ||
      static_cast<std::size_t>(model.root.rows()) != n) {
    throw ConfigError("correlation model root has inconsistent dimensions");
  }
  ChannelMatrix h = sample_iid_cscg(n_r, n, rng);
  const RMatrix re = h.entries.real() * model.root;
  const RMatrix im = h.entries.imag() * model.root;
  h.entries.real() = re;
  h.entries.imag() = im;
  h.kind = ChannelKind::kCorrelatedFa;
  return h;
}

ChannelMatrix restrict_to_ports(const ChannelMatrix& h, const PortSet& ports) {
  const auto cols = static_cast<std::size_t>(h.cols());
  if (ports.size() == 0) throw ConfigError("cannot restrict a channel to an empty port set");
  ChannelMatrix out{CMatrix(h.rows(), static_cast<Eigen::Index>(ports.size())), h.kind};
  Eigen::Index j = 0;
  for (PortIndex p : ports) {
    if (p >= cols) {
      throw ConfigError("port index " + std::to_string(p) + " out of range for a channel with " +
                        std::to_string(cols) + " columns");
    }
    out.entries.col(j++) = h.column(p);
  }
  return out;
}

void write_channel_csv_rows(std::ostream& out, std::uint64_t trial, const ChannelMatrix& h) {
  const auto old_precision = out.precision(17);
  for (Eigen::Index r = 0; r < h.rows(); ++r) {
    for (Eigen::Index c = 0; c < h.cols(); ++c) {
      const Complex v = h.entries(r, c);
      out << trial << ',' << r << ',' << c << ',' << v.real() << ',' << v.imag() << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace farsm
