#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "farsm/montecarlo.hpp"

namespace farsm::cli {

/// JSON object holding every SimConfig field under its config-file key.
nlohmann::json config_to_json(const SimConfig& cfg);

/// Starts from defaults and applies the keys present in `j`. Unknown keys and
/// wrongly typed values throw ConfigError.
SimConfig config_from_json(const nlohmann::json& j);

/// Parses a config file. An empty (or whitespace-only) file yields defaults,
/// and a run manifest is read through its "config" object.
/// Syntax errors report "<source>:<line>:<column>: ...".
SimConfig parse_config_text(std::string_view text, const std::string& source = "<config>");
SimConfig load_config(const std::string& path);

/// "start:step:stop" (inclusive), a comma-separated list, or a single value.
std::vector<double> parse_snr_spec(const std::string& spec);

/// Comma-separated detector names, e.g. "mld,rttd".
std::vector<DetectorKind> parse_detector_list(const std::string& spec);

PrecoderKind parse_precoder(const std::string& name);
SelectionKind parse_selection(const std::string& name);

/// Runs the command line. Returns the process exit status: 0 on success,
/// 2 for configuration or usage errors, 3 for numerical failures, 1 for
/// anything else.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace farsm::cli
