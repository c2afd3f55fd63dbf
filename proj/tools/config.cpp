// SPDX-License-Identifier: Apache-2.0
#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace eulab::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config::Config(std::vector<Key> schema) : schema_(std::move(schema)) {
  for (const Key& k : schema_) values_[k.name] = k.default_value;
}

const Key& Config::key(const std::string& name) const {
  const auto it = std::find_if(schema_.begin(), schema_.end(), [&](const Key& k) { return k.name == name; });
  if (it == schema_.end()) throw UsageError("unknown config key '" + name + "'");
  return *it;
}

void Config::set(const std::string& name, const std::string& value) {
  key(name);
  values_[name] = value;
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError(path.string() + ":" + std::to_string(number) + ": expected key = value");
    const std::string name = trim(t.substr(0, eq));
    try {
      set(name, trim(t.substr(eq + 1)));
    } catch (const UsageError& e) {
      throw UsageError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

const std::string& Config::str(const std::string& name) const {
  key(name);
  return values_.at(name);
}

double Config::num(const std::string& name) const {
  const std::string& v = str(name);
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw UsageError("key '" + name + "' expects a number, got '" + v + "'");
  return d;
}

int Config::integer(const std::string& name) const {
  const double d = num(name);
  if (d != static_cast<int>(d)) throw UsageError("key '" + name + "' expects an integer");
  return static_cast<int>(d);
}

std::uint64_t Config::u64(const std::string& name) const {
  const std::string& v = str(name);
  std::size_t used = 0;
  std::uint64_t u = 0;
  try {
    u = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || v[0] == '-')
    throw UsageError("key '" + name + "' expects an unsigned integer, got '" + v + "'");
  return u;
}

bool Config::flag(const std::string& name) const {
  const std::string& v = str(name);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("key '" + name + "' expects true or false, got '" + v + "'");
}

std::vector<int> Config::int_list(const std::string& name) const {
  std::vector<int> out;
  std::stringstream ss(str(name));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size())
      throw UsageError("key '" + name + "' expects a comma-separated list of integers");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("key '" + name + "' is empty");
  return out;
}

Vec3i Config::vec3i(const std::string& name) const {
  const auto v = int_list(name);
  if (v.size() != 3) throw UsageError("key '" + name + "' expects three integers");
  return Vec3i(v[0], v[1], v[2]);
}

nlohmann::ordered_json Config::resolved() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const Key& k : schema_) j[k.name] = values_.at(k.name);
  return j;
}

std::string Config::describe() const {
  std::ostringstream os;
  for (const Key& k : schema_) os << "  " << k.name << " = " << k.default_value << "    # " << k.help << '\n';
  return os.str();
}

}  // namespace eulab::cli
