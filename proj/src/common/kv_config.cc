// Copyright 2026 The Dynaware Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dynaware/common/kv_config.h"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dynaware/common/error.h"

namespace dynaware {
namespace {

std::string Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

bool ParseDouble(const std::string& text, double* out) {
  if (text.empty()) return false;
  errno = 0;
  char* end = nullptr;
  *out = std::strtod(text.c_str(), &end);
  return errno == 0 && end == text.c_str() + text.size();
}

}  // namespace

KvConfig KvConfig::Parse(std::string_view text, std::string source) {
  KvConfig config;
  config.source_ = std::move(source);
  std::string section;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    auto hash = raw.find('#');
    std::string line = Trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const std::string where = config.source_ + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError(where + ": malformed section header '" + line + "'");
      }
      section = Trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    }
    std::string key = Trim(std::string_view(line).substr(0, eq));
    std::string value = Trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (config.entries_.count(key)) {
      throw ConfigError(where + ": duplicate key '" + key + "' (first at line " +
                        std::to_string(config.entries_[key].line) + ")");
    }
    config.entries_[key] = Entry{value, line_no};
  }
  return config;
}

KvConfig KvConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return Parse(buffer.str(), path.string());
}

bool KvConfig::Has(const std::string& key) const { return entries_.count(key) > 0; }

void KvConfig::Set(const std::string& key, std::string value) {
  entries_[key] = Entry{std::move(value), 0};
}

std::string KvConfig::Where(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end() || it->second.line == 0) return source_;
  return source_ + ":" + std::to_string(it->second.line);
}

const KvConfig::Entry& KvConfig::Require(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw ConfigError(source_ + ": missing required field '" + key + "'");
  }
  it->second.consumed = true;
  return it->second;
}

std::string KvConfig::GetString(const std::string& key) const { return Require(key).value; }

std::string KvConfig::GetString(const std::string& key, const std::string& fallback) const {
  return Has(key) ? GetString(key) : fallback;
}

double KvConfig::GetDouble(const std::string& key) const {
  const Entry& e = Require(key);
  double v = 0.0;
  if (!ParseDouble(e.value, &v)) {
    throw ConfigError(Where(key) + ": field '" + key + "' expects a number, got '" + e.value + "'");
  }
  return v;
}

double KvConfig::GetDouble(const std::string& key, double fallback) const {
  return Has(key) ? GetDouble(key) : fallback;
}

long long KvConfig::GetInt(const std::string& key) const {
  const Entry& e = Require(key);
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(e.value.c_str(), &end, 10);
  if (e.value.empty() || errno != 0 || end != e.value.c_str() + e.value.size()) {
    throw ConfigError(Where(key) + ": field '" + key + "' expects an integer, got '" + e.value +
                      "'");
  }
  return v;
}

long long KvConfig::GetInt(const std::string& key, long long fallback) const {
  return Has(key) ? GetInt(key) : fallback;
}

bool KvConfig::GetBool(const std::string& key, bool fallback) const {
  if (!Has(key)) return fallback;
  const Entry& e = Require(key);
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  throw ConfigError(Where(key) + ": field '" + key + "' expects a boolean, got '" + e.value + "'");
}

std::vector<double> KvConfig::GetDoubleList(const std::string& key) const {
  const Entry& e = Require(key);
  std::vector<double> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    std::string t = Trim(item);
    if (!ParseDouble(t, &v)) {
      throw ConfigError(Where(key) + ": field '" + key + "' has non-numeric list item '" + t +
                        "'");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<double> KvConfig::GetDoubleList(const std::string& key,
                                            const std::vector<double>& fallback) const {
  return Has(key) ? GetDoubleList(key) : fallback;
}

void KvConfig::CheckAllConsumed() const {
  for (const auto& [key, entry] : entries_) {
    if (!entry.consumed) {
      throw ConfigError(Where(key) + ": unknown field '" + key + "'");
    }
  }
}

std::vector<std::string> KvConfig::Keys() const {
  std::vector<std::string> keys;
  for (const auto& [key, entry] : entries_) keys.push_back(key);
  return keys;
}

}  // namespace dynaware
