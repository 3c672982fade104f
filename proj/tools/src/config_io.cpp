#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "farsm/cli.hpp"

namespace farsm::cli {

using nlohmann::json;

namespace {

DetectorKind parse_detector(const std::string& name) {
  if (name == "mld") return DetectorKind::kMld;
  if (name == "med") return DetectorKind::kMed;
  if (name == "rttd") return DetectorKind::kRttd;
  throw ConfigError("unknown detector '" + name + "' (expected mld, med or rttd)");
}

std::string trim(std::string s) {
  const auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

double parse_number(const std::string& token, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != token.size()) {
    throw ConfigError("invalid " + what + " '" + token + "'");
  }
  return v;
}

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type: " + j.dump());
  }
}

std::size_t get_count(const json& j, const std::string& key) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  }
  if (j.is_number_integer() && j.get<long long>() < 0) {
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

}  // namespace

PrecoderKind parse_precoder(const std::string& name) {
  if (name == "zf") return PrecoderKind::kZf;
  if (name == "mmse") return PrecoderKind::kMmse;
  throw ConfigError("unknown precoder '" + name + "' (expected zf or mmse)");
}

SelectionKind parse_selection(const std::string& name) {
  if (name == "optimal") return SelectionKind::kOptimal;
  if (name == "tmd") return SelectionKind::kTmd;
  if (name == "mce-tmd") return SelectionKind::kMceTmd;
  if (name == "first") return SelectionKind::kFirst;
  throw ConfigError("unknown port selection '" + name +
                    "' (expected optimal, tmd, mce-tmd or first)");
}

std::vector<DetectorKind> parse_detector_list(const std::string& spec) {
  std::vector<DetectorKind> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_detector(trim(item)));
  if (out.empty()) throw ConfigError("detector list is empty");
  return out;
}

std::vector<double> parse_snr_spec(const std::string& spec) {
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(trim(item));
    if (parts.size() != 3) throw ConfigError("SNR range must be start:step:stop, got '" + spec + "'");
    const double start = parse_number(parts[0], "SNR start");
    const double step = parse_number(parts[1], "SNR step");
    const double stop = parse_number(parts[2], "SNR stop");
    if (!(step > 0.0)) throw ConfigError("SNR step must be positive");
    if (stop < start) throw ConfigError("SNR stop must not be below start");
    std::vector<double> out;
    // Index-based stepping avoids accumulating rounding error.
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) out.push_back(start + static_cast<double>(i) * step);
    return out;
  }
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(trim(item), "SNR value"));
  if (out.empty()) throw ConfigError("SNR list is empty");
  return out;
}

json config_to_json(const SimConfig& cfg) {
  json detectors = json::array();
  for (DetectorKind d : cfg.detectors) detectors.push_back(std::string(to_string(d)));
  return json{
      {"w1", cfg.grid.w1},
      {"w2", cfg.grid.w2},
      {"n1", cfg.grid.n1},
      {"n2", cfg.grid.n2},
      {"n_r", cfg.n_r},
      {"n_a", cfg.n_a},
      {"n_b", cfg.n_b},
      {"mod_order", cfg.mod_order},
      {"precoder", std::string(to_string(cfg.precoder))},
      {"portsel", std::string(to_string(cfg.portsel))},
      {"detectors", detectors},
      {"gamma", cfg.gamma},
      {"snr_db", cfg.snr_db},
      {"trials", cfg.trials},
      {"seed", cfg.master_seed},
      {"baseline", cfg.baseline},
      {"select_snr_db", cfg.select_snr_db ? json(*cfg.select_snr_db) : json(nullptr)},
      {"noiseless", cfg.noiseless},
      {"noiseless_design_n0", cfg.noiseless_design_n0},
      {"threads", cfg.threads},
  };
}

SimConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  SimConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "w1") {
      cfg.grid.w1 = get_as<double>(value, key);
    } else if (key == "w2") {
      cfg.grid.w2 = get_as<double>(value, key);
    } else if (key == "n1") {
      cfg.grid.n1 = get_count(value, key);
    } else if (key == "n2") {
      cfg.grid.n2 = get_count(value, key);
    } else if (key == "n_r") {
      cfg.n_r = get_count(value, key);
    } else if (key == "n_a") {
      cfg.n_a = get_count(value, key);
    } else if (key == "n_b") {
      cfg.n_b = get_count(value, key);
    } else if (key == "mod_order") {
      cfg.mod_order = get_count(value, key);
    } else if (key == "precoder") {
      cfg.precoder = parse_precoder(get_as<std::string>(value, key));
    } else if (key == "portsel") {
      cfg.portsel = parse_selection(get_as<std::string>(value, key));
    } else if (key == "detectors") {
      cfg.detectors.clear();
      for (const auto& d : get_as<std::vector<std::string>>(value, key)) {
        cfg.detectors.push_back(parse_detector(d));
      }
    } else if (key == "gamma") {
      cfg.gamma = get_as<double>(value, key);
    } else if (key == "snr_db") {
      cfg.snr_db = get_as<std::vector<double>>(value, key);
    } else if (key == "trials") {
      cfg.trials = get_count(value, key);
    } else if (key == "seed") {
      cfg.master_seed = get_count(value, key);
    } else if (key == "baseline") {
      cfg.baseline = get_as<bool>(value, key);
    } else if (key == "select_snr_db") {
      if (value.is_null()) {
        cfg.select_snr_db.reset();
      } else {
        cfg.select_snr_db = get_as<double>(value, key);
      }
    } else if (key == "noiseless") {
      cfg.noiseless = get_as<bool>(value, key);
    } else if (key == "noiseless_design_n0") {
      cfg.noiseless_design_n0 = get_as<double>(value, key);
    } else if (key == "threads") {
      cfg.threads = get_count(value, key);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return cfg;
}

SimConfig parse_config_text(std::string_view text, const std::string& source) {
  if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) {
    return SimConfig{};
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset -> line/column (1-based).
    const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < pos; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    if (const auto colon = msg.rfind(": "); colon != std::string::npos) msg = msg.substr(colon + 2);
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": JSON parse error: " + msg);
  }
  // A run manifest carries its configuration under "config".
  if (j.is_object() && j.contains("tool") && j.contains("config")) j = j.at("config");
  try {
    return config_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace farsm::cli
