#pragma once

// Plain-text run configuration:
//
//   [grbp]
//   beta = 0.03
//   gamma = 0.03
//   tau = 0.7
//   max_tries = 10
//   min_size = 4
//   s_min = 0.8
//   s_max = 1.2
//   seed = 42
//
//   [score]
//   thresholds = 0.5, 0.75
//
// Every key is optional; unknown sections or keys are rejected.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "gmner/error.hpp"
#include "gmner/grbp.hpp"
#include "gmner/records.hpp"
#include "gmner/scoring.hpp"

namespace gmner {

struct FileConfig {
  GrbpConfig grbp;
  std::optional<std::uint64_t> seed;
  std::vector<double> thresholds = default_thresholds();
};

namespace detail {

template <typename T>
T parse_value(const std::string& key, const std::string& raw) {
  std::istringstream is(std::string(trim(raw)));
  T v{};
  is >> v;
  if (!is || !is.eof()) throw ConfigError("config key '" + key + "': cannot parse '" + raw + "'");
  return v;
}

}  // namespace detail

// Comma-separated list of reals.
inline std::vector<double> parse_threshold_list(const std::string& raw) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(raw);
  while (std::getline(is, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(detail::parse_value<double>("thresholds", item));
  }
  if (out.empty()) throw ConfigError("threshold list is empty");
  validate_thresholds(out);
  return out;
}

inline FileConfig parse_config(std::istream& in, const std::string& where = "<config>") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(where + ": " + e.what());
  }

  FileConfig cfg;
  for (const auto& [section, body] : tree) {
    if (section != "grbp" && section != "score") {
      throw ConfigError(where + ": unknown section '" + section + "'");
    }
    for (const auto& [key, node] : body) {
      const std::string raw = node.get_value<std::string>();
      const std::string name = section + "." + key;
      if (section == "score") {
        if (key != "thresholds") throw ConfigError(where + ": unknown key '" + name + "'");
        cfg.thresholds = parse_threshold_list(raw);
      } else if (key == "beta") {
        cfg.grbp.beta = detail::parse_value<double>(name, raw);
      } else if (key == "gamma") {
        cfg.grbp.gamma = detail::parse_value<double>(name, raw);
      } else if (key == "tau") {
        cfg.grbp.tau = detail::parse_value<double>(name, raw);
      } else if (key == "max_tries") {
        cfg.grbp.max_tries = detail::parse_value<int>(name, raw);
      } else if (key == "min_size") {
        cfg.grbp.min_size = detail::parse_value<double>(name, raw);
      } else if (key == "s_min") {
        cfg.grbp.s_min = detail::parse_value<double>(name, raw);
      } else if (key == "s_max") {
        cfg.grbp.s_max = detail::parse_value<double>(name, raw);
      } else if (key == "seed") {
        if (trim(raw).starts_with('-')) throw ConfigError(where + ": seed must be non-negative");
        cfg.seed = detail::parse_value<std::uint64_t>(name, raw);
      } else {
        throw ConfigError(where + ": unknown key '" + name + "'");
      }
    }
  }
  validate(cfg.grbp);
  return cfg;
}

inline FileConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_config(in, path);
}

}  // namespace gmner
