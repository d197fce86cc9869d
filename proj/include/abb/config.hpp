#pragma once
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "abb/voting_rule.hpp"

namespace abb {

// Sectioned key-value config text:
//
//   [rule]
//   pmf = {3: 1.0}          # arity distribution
//   majority = true
//   eta = {3: [0, 1, 0]}    # optional explicit threshold rows
//
// Keys are stored flattened as "section.key". Parsing is strict: content
// before the first section, missing '=', or duplicate keys all throw.
struct ConfigMap {
  std::map<std::string, std::string> kv;

  static ConfigMap parse(const std::string& text);
  static ConfigMap parse_file(const std::string& path);

  bool has(const std::string& key) const { return kv.count(key) != 0; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // "1.1, 1.2, 1.3"
  std::vector<double> get_list(const std::string& key) const;
  // "0.5:1, 1:2" -> {(0.5,1), (1,2)}
  std::vector<std::pair<double, double>> get_pairs(const std::string& key) const;
  // "{3: 0.4, 5: 0.6}"
  std::map<int, double> get_int_map(const std::string& key) const;
  // "{3: [0, 0.5, 0.5], 5: [0, 0, 1, 0, 0]}"
  std::map<int, std::vector<double>> get_row_map(const std::string& key) const;
};

// Builds the offspring/threshold rule from the [rule] section: explicit eta
// rows when given, otherwise majority thresholds.
VotingRule rule_from_config(const ConfigMap& cfg);

}  // namespace abb
