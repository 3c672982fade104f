#include "farsm/types.hpp"

#include <algorithm>
#include <sstream>

namespace farsm {

PortSet::PortSet(std::vector<PortIndex> indices, std::size_t num_ports)
    : indices_(std::move(indices)), num_ports_(num_ports) {
  std::sort(indices_.begin(), indices_.end());
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    throw ConfigError("port set contains duplicate indices");
  }
  if (!indices_.empty() && indices_.back() >= num_ports_) {
    throw ConfigError("port index " + std::to_string(indices_.back()) +
                      " out of range for " + std::to_string(num_ports_) + " ports");
  }
}

PortSet PortSet::first(std::size_t count, std::size_t num_ports) {
  std::vector<PortIndex> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = i;
  return PortSet(std::move(idx), num_ports);
}

bool PortSet::contains(PortIndex port) const {
  return std::binary_search(indices_.begin(), indices_.end(), port);
}

bool PortSet::is_strict_subset_of(const PortSet& other) const {
  return size() < other.size() &&
         std::includes(other.indices_.begin(), other.indices_.end(), indices_.begin(),
                       indices_.end());
}

std::string to_string(const PortSet& ports) {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (PortIndex p : ports) {
    if (!first) os << ',';
    os << p;
    first = false;
  }
  os << '}';
  return os.str();
}

}  // namespace farsm
