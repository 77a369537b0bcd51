#include "quase/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "quase/corpus.hpp"

namespace quase {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return from_string(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(e.what()) + " (in " + path + ")");
  }
}

Config Config::from_string(const std::string& text) {
  Config c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config: line " + std::to_string(lineno) + ": empty key");
    }
    c.set(key, value);
  }
  return c;
}

void Config::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

std::string Config::get_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("config: missing required key " + key);
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& def) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? def : it->second;
}

double Config::get_double(const std::string& key, double def) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return def;
  try {
    return parse_double(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config: key " + key + " is not a number: " + it->second);
  }
}

int Config::get_int(const std::string& key, int def) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return def;
  try {
    std::size_t pos = 0;
    const int v = std::stoi(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key " + key + " is not an integer: " + it->second);
  }
}

bool Config::get_bool(const std::string& key, bool def) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return def;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: key " + key + " is not a boolean: " + it->second);
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t def) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return def;
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("config: key " + key + " is not an unsigned integer: " + it->second);
  }
}

std::vector<double> Config::get_double_list(const std::string& key,
                                            const std::vector<double>& def) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return def;
  std::vector<double> out;
  std::string item;
  std::istringstream is(it->second);
  while (std::getline(is, item, ',')) {
    const std::string v = trim(item);
    if (v.empty()) continue;
    try {
      out.push_back(parse_double(v));
    } catch (const std::exception&) {
      throw ConfigError("config: key " + key + " has a bad list element: " + v);
    }
  }
  return out;
}

std::string Config::canonical() const {
  std::ostringstream os;
  for (const auto& [key, value] : entries_) os << key << '=' << value << '\n';
  return os.str();
}

std::string Config::hash() const {
  std::ostringstream os;
  for (const auto& [key, value] : entries_) {
    if (key == "seed") continue;
    os << key << '=' << value << '\n';
  }
  return to_hex(fnv1a64(os.str()));
}

void Config::validate_keys(const std::set<std::string>& allowed) const {
  for (const auto& [key, value] : entries_) {
    if (!allowed.count(key)) {
      throw ConfigError("config: unknown key " + key);
    }
  }
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace quase
