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

#ifndef DYNAWARE_COMMON_KV_CONFIG_H_
#define DYNAWARE_COMMON_KV_CONFIG_H_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dynaware {

// Line-oriented key-value configuration.
//
//   # comment
//   format_version = 1
//   [train]
//   num_envs = 64
//   seeds = 1, 2, 3
//
// Keys inside a section are addressed as "section.key". Every accessor error
// carries "<source>:<line>" so messages point at the offending line. Keys that
// are never read can be reported with CheckAllConsumed().
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig Parse(std::string_view text, std::string source = "<string>");
  static KvConfig Load(const std::filesystem::path& path);

  bool Has(const std::string& key) const;
  // Adds or replaces a key (command-line overrides use line 0).
  void Set(const std::string& key, std::string value);

  std::string GetString(const std::string& key) const;
  std::string GetString(const std::string& key, const std::string& fallback) const;
  double GetDouble(const std::string& key) const;
  double GetDouble(const std::string& key, double fallback) const;
  long long GetInt(const std::string& key) const;
  long long GetInt(const std::string& key, long long fallback) const;
  bool GetBool(const std::string& key, bool fallback) const;
  std::vector<double> GetDoubleList(const std::string& key) const;
  std::vector<double> GetDoubleList(const std::string& key,
                                    const std::vector<double>& fallback) const;

  // Throws ConfigError naming the first key that no accessor has read.
  void CheckAllConsumed() const;

  // "<source>:<line>" for a key, or the source name if absent.
  std::string Where(const std::string& key) const;

  const std::string& source() const { return source_; }
  std::vector<std::string> Keys() const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool consumed = false;
  };
  const Entry& Require(const std::string& key) const;

  std::string source_ = "<string>";
  std::map<std::string, Entry> entries_;
};

}  // namespace dynaware

#endif  // DYNAWARE_COMMON_KV_CONFIG_H_
