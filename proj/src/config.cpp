#include "abb/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace abb {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error("config: " + what); }

double to_double(const std::string& raw, const std::string& key) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(raw, &pos);
  } catch (const std::exception&) {
    fail("key '" + key + "' is not a number: '" + raw + "'");
  }
  if (trim(raw.substr(pos)) != "") fail("trailing junk after number in '" + key + "': '" + raw + "'");
  return v;
}

// splits on commas that sit at bracket depth zero
std::vector<std::string> split_top(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '[' || c == '{') ++depth;
    if (c == ']' || c == '}') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

std::string strip_braces(const std::string& s, char open, char close, const std::string& key) {
  std::string t = trim(s);
  if (t.size() < 2 || t.front() != open || t.back() != close)
    fail("key '" + key + "' must be wrapped in " + std::string(1, open) + "..." +
         std::string(1, close));
  return t.substr(1, t.size() - 2);
}

}  // namespace

ConfigMap ConfigMap::parse(const std::string& text) {
  ConfigMap c;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail("empty section name at line " + std::to_string(lineno));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value' at line " + std::to_string(lineno));
    if (section.empty()) fail("key before any [section] at line " + std::to_string(lineno));
    std::string key = section + "." + trim(line.substr(0, eq));
    if (trim(line.substr(0, eq)).empty()) fail("empty key at line " + std::to_string(lineno));
    if (c.kv.count(key)) fail("duplicate key '" + key + "' at line " + std::to_string(lineno));
    c.kv[key] = trim(line.substr(eq + 1));
  }
  return c;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ConfigMap::get_string(const std::string& key) const {
  auto it = kv.find(key);
  if (it == kv.end()) fail("missing key '" + key + "'");
  return it->second;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

double ConfigMap::get_double(const std::string& key) const {
  return to_double(get_string(key), key);
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long ConfigMap::get_int(const std::string& key) const {
  const std::string raw = get_string(key);
  size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(raw, &pos);
  } catch (const std::exception&) {
    fail("key '" + key + "' is not an integer: '" + raw + "'");
  }
  // allow exponent-free scientific counts like 2e4
  if (pos < raw.size() && (raw[pos] == 'e' || raw[pos] == 'E')) {
    const double d = to_double(raw, key);
    v = static_cast<long long>(d);
    if (static_cast<double>(v) != d) fail("key '" + key + "' is not an integer: '" + raw + "'");
    return v;
  }
  if (trim(raw.substr(pos)) != "") fail("trailing junk after integer in '" + key + "'");
  return v;
}

long long ConfigMap::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool ConfigMap::get_bool(const std::string& key) const {
  const std::string raw = get_string(key);
  if (raw == "true" || raw == "1" || raw == "yes") return true;
  if (raw == "false" || raw == "0" || raw == "no") return false;
  fail("key '" + key + "' is not a boolean: '" + raw + "'");
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::vector<double> ConfigMap::get_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& tok : split_top(get_string(key))) out.push_back(to_double(tok, key));
  if (out.empty()) fail("key '" + key + "' is an empty list");
  return out;
}

std::vector<std::pair<double, double>> ConfigMap::get_pairs(const std::string& key) const {
  std::vector<std::pair<double, double>> out;
  for (const auto& tok : split_top(get_string(key))) {
    auto colon = tok.find(':');
    if (colon == std::string::npos) fail("pair '" + tok + "' in '" + key + "' needs a ':'");
    out.emplace_back(to_double(trim(tok.substr(0, colon)), key),
                     to_double(trim(tok.substr(colon + 1)), key));
  }
  if (out.empty()) fail("key '" + key + "' is an empty pair list");
  return out;
}

std::map<int, double> ConfigMap::get_int_map(const std::string& key) const {
  std::map<int, double> out;
  const std::string body = strip_braces(get_string(key), '{', '}', key);
  for (const auto& tok : split_top(body)) {
    auto colon = tok.find(':');
    if (colon == std::string::npos) fail("entry '" + tok + "' in '" + key + "' needs a ':'");
    const int k = static_cast<int>(to_double(trim(tok.substr(0, colon)), key));
    if (out.count(k)) fail("duplicate entry " + std::to_string(k) + " in '" + key + "'");
    out[k] = to_double(trim(tok.substr(colon + 1)), key);
  }
  if (out.empty()) fail("key '" + key + "' is an empty map");
  return out;
}

std::map<int, std::vector<double>> ConfigMap::get_row_map(const std::string& key) const {
  std::map<int, std::vector<double>> out;
  const std::string body = strip_braces(get_string(key), '{', '}', key);
  for (const auto& tok : split_top(body)) {
    auto colon = tok.find(':');
    if (colon == std::string::npos) fail("entry '" + tok + "' in '" + key + "' needs a ':'");
    const int k = static_cast<int>(to_double(trim(tok.substr(0, colon)), key));
    std::vector<double> row;
    for (const auto& cell :
         split_top(strip_braces(trim(tok.substr(colon + 1)), '[', ']', key)))
      row.push_back(to_double(cell, key));
    out[k] = std::move(row);
  }
  if (out.empty()) fail("key '" + key + "' is an empty map");
  return out;
}

VotingRule rule_from_config(const ConfigMap& cfg) {
  auto pmf = cfg.get_int_map("rule.pmf");
  if (cfg.has("rule.eta")) return make_rule(pmf, cfg.get_row_map("rule.eta"));
  if (!cfg.get_bool("rule.majority", true))
    throw std::runtime_error("config: [rule] needs either eta rows or majority = true");
  return majority_rule(pmf);
}

}  // namespace abb
