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

#ifndef DYNAWARE_EVAL_METRICS_H_
#define DYNAWARE_EVAL_METRICS_H_

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "dynaware/reward/reward_bank.h"

namespace dynaware::eval {

inline constexpr int kMetricsSchemaVersion = 1;

struct TrajectoryStep {
  double time = 0.0;
  Eigen::VectorXd q;
  Eigen::VectorXd qd;
  Eigen::VectorXd target;  // commanded joint positions a_t
  Eigen::VectorXd torque;  // applied torque τ_a
  double command = 0.0;    // commanded forward velocity
  double base_velocity = 0.0;
  std::array<double, reward::kNumComponents> rewards{};
  double dynamics = 0.0;
};

struct TrajectoryLog {
  int n_joints = 0;
  std::vector<TrajectoryStep> steps;

  // Throws ConfigError on inconsistent sizes, non-finite values, or time that
  // is not strictly increasing with a uniform step.
  void Validate() const;
  double dt() const;
  double duration() const { return dt() * static_cast<double>(steps.size()); }
  TrajectoryLog Reversed() const;  // data in reverse order on the same clock
};

std::string TrajectoryCsvHeader(int n_joints);
void WriteTrajectoryCsv(const std::string& path, const TrajectoryLog& log);
TrajectoryLog ReadTrajectoryCsv(const std::string& path);

struct SafetyThresholds {
  double torque = 22.5;        // N·m, 0.9 · τ_max for τ_max = 25
  double torque_rate = 150.0;  // N·m/s
  static SafetyThresholds ForTorqueLimit(double torque_limit) {
    return SafetyThresholds{0.9 * torque_limit, 150.0};
  }
};

enum class Metric {
  kPositionErrorRms,
  kTorqueMean,
  kTorqueRateRms,
  kActionRateRms,
  kActionAccRms,
  kDofVelRms,
  kMechanicalPower,
  kEnergy,
  kSafeOccupancy,
};
inline constexpr int kNumMetrics = 9;

struct MetricInfo {
  const char* key;
  const char* label;
  const char* unit;
  bool higher_is_better;
};
const MetricInfo& GetMetricInfo(Metric m);

struct MetricsReport {
  int schema_version = kMetricsSchemaVersion;
  int n_joints = 0;
  int steps = 0;
  double dt = 0.0;
  SafetyThresholds thresholds;
  std::array<double, kNumMetrics> values{};
  nlohmann::json meta = nlohmann::json::object();

  double& operator[](Metric m) { return values[static_cast<int>(m)]; }
  double operator[](Metric m) const { return values[static_cast<int>(m)]; }

  nlohmann::json ToJson() const;
  static MetricsReport FromJson(const nlohmann::json& j);
};

// Requires at least 3 steps. Rates use forward differences over dt; the last
// step reuses the final difference for the safe-occupancy test.
MetricsReport ComputeMetrics(const TrajectoryLog& log, const SafetyThresholds& thresholds);

void WriteMetricsJson(const std::string& path, const MetricsReport& report);
MetricsReport ReadMetricsJson(const std::string& path);

struct ComparisonRow {
  Metric metric;
  double a = 0.0;
  double b = 0.0;
  double delta = 0.0;    // b - a
  double percent = 0.0;  // relative change in %, or percentage points for occupancy
  bool improved = false;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  std::string ToText(const std::string& name_a, const std::string& name_b) const;
};

// Throws ConfigError on schema-version or joint-count mismatch.
ComparisonTable CompareReports(const MetricsReport& a, const MetricsReport& b);

// Side-by-side table of several reports; per row the best value is marked
// with "**" and the second best with "*". Ties share a marker.
std::string CompareManyText(const std::vector<std::string>& names,
                            const std::vector<MetricsReport>& reports);

// Per-step series for velocity tracking, position error, torque and power.
void WritePlotCsv(const std::string& path, const TrajectoryLog& log);

}  // namespace dynaware::eval

#endif  // DYNAWARE_EVAL_METRICS_H_
