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

#include "dynaware/eval/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "dynaware/common/error.h"

namespace dynaware::eval {
namespace {

constexpr std::array<MetricInfo, kNumMetrics> kMetricInfo = {{
    {"position_error_rms", "Position Error RMS", "rad", false},
    {"torque_mean", "Torque Mean", "N·m", false},
    {"torque_rate_rms", "Torque Rate RMS", "N·m/s", false},
    {"action_rate_rms", "Action Rate RMS", "rad/s", false},
    {"action_acc_rms", "Action Acc. RMS", "rad/s²", false},
    {"dof_vel_rms", "DoF Vel. RMS", "rad/s", false},
    {"mechanical_power", "Mechanical Power", "W", false},
    {"energy", "Energy Consumption", "J", false},
    {"safe_occupancy", "Safe Occupancy Zone", "%", true},
}};

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double Power(const TrajectoryStep& s) { return (s.torque.array() * s.qd.array()).abs().sum(); }

std::string FormatNumber(double v) {
  char buf[32];
  const double a = std::fabs(v);
  if (a != 0.0 && (a >= 1e5 || a < 1e-3)) {
    std::snprintf(buf, sizeof(buf), "%.4g", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.4f", v);
  }
  return buf;
}

void CheckCompatible(const MetricsReport& a, const MetricsReport& b) {
  if (a.schema_version != b.schema_version) {
    throw ConfigError("metrics schema version mismatch: " + std::to_string(a.schema_version) +
                      " vs " + std::to_string(b.schema_version));
  }
  if (a.n_joints != b.n_joints) {
    throw ConfigError("metrics reports cover different robots: " + std::to_string(a.n_joints) +
                      " vs " + std::to_string(b.n_joints) + " joints");
  }
}

}  // namespace

const MetricInfo& GetMetricInfo(Metric m) { return kMetricInfo[static_cast<int>(m)]; }

void TrajectoryLog::Validate() const {
  if (n_joints < 1) throw ConfigError("trajectory: n_joints must be >= 1");
  for (size_t t = 0; t < steps.size(); ++t) {
    const TrajectoryStep& s = steps[t];
    if (s.q.size() != n_joints || s.qd.size() != n_joints || s.target.size() != n_joints ||
        s.torque.size() != n_joints) {
      throw ConfigError("trajectory step " + std::to_string(t) + ": joint vectors must have " +
                        std::to_string(n_joints) + " entries");
    }
    if (!std::isfinite(s.time) || !s.q.allFinite() || !s.qd.allFinite() ||
        !s.target.allFinite() || !s.torque.allFinite()) {
      throw ConfigError("trajectory step " + std::to_string(t) + ": non-finite value");
    }
  }
  if (steps.size() < 2) return;
  const double dt = steps[1].time - steps[0].time;
  if (!(dt > 0.0)) throw ConfigError("trajectory: time must be strictly increasing");
  for (size_t t = 1; t < steps.size(); ++t) {
    const double step = steps[t].time - steps[t - 1].time;
    if (std::fabs(step - dt) > 1e-6 * dt) {
      throw ConfigError("trajectory: non-uniform timestep at step " + std::to_string(t) + " (" +
                        FormatNumber(step) + " s vs " + FormatNumber(dt) + " s)");
    }
  }
}

double TrajectoryLog::dt() const {
  if (steps.size() < 2) throw ConfigError("trajectory: at least 2 steps needed for dt");
  return (steps.back().time - steps.front().time) / static_cast<double>(steps.size() - 1);
}

TrajectoryLog TrajectoryLog::Reversed() const {
  TrajectoryLog out = *this;
  std::reverse(out.steps.begin(), out.steps.end());
  for (size_t t = 0; t < steps.size(); ++t) out.steps[t].time = steps[t].time;
  return out;
}

std::string TrajectoryCsvHeader(int n_joints) {
  std::ostringstream s;
  s << "time,command,base_velocity";
  for (const char* group : {"q", "qd", "target", "torque"}) {
    for (int i = 0; i < n_joints; ++i) s << "," << group << i;
  }
  for (int k = 0; k < reward::kNumComponents; ++k) s << "," << reward::ComponentKey(k);
  s << ",dynamics";
  return s.str();
}

void WriteTrajectoryCsv(const std::string& path, const TrajectoryLog& log) {
  log.Validate();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write trajectory '" + path + "'");
  out << TrajectoryCsvHeader(log.n_joints) << "\n" << std::setprecision(17);
  for (const TrajectoryStep& s : log.steps) {
    out << s.time << "," << s.command << "," << s.base_velocity;
    for (const Eigen::VectorXd* v : {&s.q, &s.qd, &s.target, &s.torque}) {
      for (int i = 0; i < log.n_joints; ++i) out << "," << (*v)[i];
    }
    for (double r : s.rewards) out << "," << r;
    out << "," << s.dynamics << "\n";
  }
  if (!out) throw ConfigError("failed writing trajectory '" + path + "'");
}

TrajectoryLog ReadTrajectoryCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read trajectory '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty trajectory file");
  const std::vector<std::string> header = SplitCsv(line);
  const int fixed = 3 + reward::kNumComponents + 1;
  const int joint_cols = static_cast<int>(header.size()) - fixed;
  if (joint_cols <= 0 || joint_cols % 4 != 0 || line != TrajectoryCsvHeader(joint_cols / 4)) {
    throw ConfigError(path + ": unrecognized trajectory header");
  }
  TrajectoryLog log;
  log.n_joints = joint_cols / 4;
  const int n = log.n_joints;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::vector<std::string> cells = SplitCsv(line);
    if (cells.size() != header.size()) {
      throw ConfigError(path + ":" + std::to_string(row) + ": expected " +
                        std::to_string(header.size()) + " columns, found " +
                        std::to_string(cells.size()));
    }
    std::vector<double> v(cells.size());
    for (size_t c = 0; c < cells.size(); ++c) {
      try {
        size_t used = 0;
        v[c] = std::stod(cells[c], &used);
        if (used != cells[c].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(row) + ": bad number '" + cells[c] +
                          "' in column " + header[c]);
      }
    }
    TrajectoryStep s;
    s.time = v[0];
    s.command = v[1];
    s.base_velocity = v[2];
    s.q = Eigen::Map<const Eigen::VectorXd>(&v[3], n);
    s.qd = Eigen::Map<const Eigen::VectorXd>(&v[3 + n], n);
    s.target = Eigen::Map<const Eigen::VectorXd>(&v[3 + 2 * n], n);
    s.torque = Eigen::Map<const Eigen::VectorXd>(&v[3 + 3 * n], n);
    for (int k = 0; k < reward::kNumComponents; ++k) s.rewards[k] = v[3 + 4 * n + k];
    s.dynamics = v.back();
    log.steps.push_back(std::move(s));
  }
  log.Validate();
  return log;
}

nlohmann::json MetricsReport::ToJson() const {
  nlohmann::json j;
  j["schema_version"] = schema_version;
  j["n_joints"] = n_joints;
  j["steps"] = steps;
  j["dt"] = dt;
  j["thresholds"] = {{"torque", thresholds.torque}, {"torque_rate", thresholds.torque_rate}};
  nlohmann::json m;
  for (int k = 0; k < kNumMetrics; ++k) m[kMetricInfo[k].key] = values[k];
  j["metrics"] = m;
  j["meta"] = meta;
  return j;
}

MetricsReport MetricsReport::FromJson(const nlohmann::json& j) {
  MetricsReport r;
  try {
    r.schema_version = j.at("schema_version").get<int>();
    r.n_joints = j.at("n_joints").get<int>();
    r.steps = j.at("steps").get<int>();
    r.dt = j.at("dt").get<double>();
    r.thresholds.torque = j.at("thresholds").at("torque").get<double>();
    r.thresholds.torque_rate = j.at("thresholds").at("torque_rate").get<double>();
    const nlohmann::json& m = j.at("metrics");
    for (int k = 0; k < kNumMetrics; ++k) r.values[k] = m.at(kMetricInfo[k].key).get<double>();
    if (j.contains("meta")) r.meta = j.at("meta");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("metrics report: ") + e.what());
  }
  return r;
}

MetricsReport ComputeMetrics(const TrajectoryLog& log, const SafetyThresholds& thresholds) {
  log.Validate();
  const int steps = static_cast<int>(log.steps.size());
  if (steps < 3) throw ConfigError("metrics need at least 3 trajectory steps, got " +
                                   std::to_string(steps));
  const double dt = log.dt();
  const double n = log.n_joints;
  const std::vector<TrajectoryStep>& s = log.steps;

  double pos_err = 0.0, torque_abs = 0.0, dof_vel = 0.0, power = 0.0;
  double torque_rate = 0.0, action_rate = 0.0, action_acc = 0.0;
  int safe = 0;
  for (int t = 0; t < steps; ++t) {
    pos_err += (s[t].target - s[t].q).squaredNorm();
    torque_abs += s[t].torque.cwiseAbs().sum();
    dof_vel += s[t].qd.squaredNorm();
    power += Power(s[t]);
    const int f = std::min(t, steps - 2);
    const Eigen::VectorXd rate = (s[f + 1].torque - s[f].torque) / dt;
    if (t < steps - 1) {
      torque_rate += rate.squaredNorm();
      action_rate += ((s[t + 1].target - s[t].target) / dt).squaredNorm();
    }
    if (t < steps - 2) {
      action_acc +=
          ((s[t + 2].target - 2.0 * s[t + 1].target + s[t].target) / (dt * dt)).squaredNorm();
    }
    if (s[t].torque.cwiseAbs().maxCoeff() <= thresholds.torque &&
        rate.cwiseAbs().maxCoeff() <= thresholds.torque_rate) {
      ++safe;
    }
  }
  MetricsReport r;
  r.n_joints = log.n_joints;
  r.steps = steps;
  r.dt = dt;
  r.thresholds = thresholds;
  r[Metric::kPositionErrorRms] = std::sqrt(pos_err / (steps * n));
  r[Metric::kTorqueMean] = torque_abs / (steps * n);
  r[Metric::kTorqueRateRms] = std::sqrt(torque_rate / ((steps - 1) * n));
  r[Metric::kActionRateRms] = std::sqrt(action_rate / ((steps - 1) * n));
  r[Metric::kActionAccRms] = std::sqrt(action_acc / ((steps - 2) * n));
  r[Metric::kDofVelRms] = std::sqrt(dof_vel / (steps * n));
  r[Metric::kMechanicalPower] = power / steps;
  r[Metric::kEnergy] = power * dt;
  r[Metric::kSafeOccupancy] = 100.0 * safe / steps;
  return r;
}

void WriteMetricsJson(const std::string& path, const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write metrics '" + path + "'");
  out << report.ToJson().dump(2) << "\n";
}

MetricsReport ReadMetricsJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read metrics '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return MetricsReport::FromJson(j);
}

ComparisonTable CompareReports(const MetricsReport& a, const MetricsReport& b) {
  CheckCompatible(a, b);
  ComparisonTable table;
  for (int k = 0; k < kNumMetrics; ++k) {
    const Metric m = static_cast<Metric>(k);
    ComparisonRow row;
    row.metric = m;
    row.a = a[m];
    row.b = b[m];
    row.delta = row.b - row.a;
    if (m == Metric::kSafeOccupancy) {
      row.percent = row.delta;
    } else if (row.a != 0.0) {
      row.percent = 100.0 * row.delta / std::fabs(row.a);
    } else {
      row.percent = row.delta == 0.0 ? 0.0 : std::copysign(HUGE_VAL, row.delta);
    }
    row.improved = GetMetricInfo(m).higher_is_better ? row.b > row.a : row.b < row.a;
    table.rows.push_back(row);
  }
  return table;
}

std::string ComparisonTable::ToText(const std::string& name_a, const std::string& name_b) const {
  std::ostringstream s;
  s << std::left << std::setw(34) << "Metric" << std::right << std::setw(14) << name_a
    << std::setw(14) << name_b << std::setw(14) << "Delta" << std::setw(12) << "Change" << "\n";
  for (const ComparisonRow& row : rows) {
    const MetricInfo& info = GetMetricInfo(row.metric);
    const std::string label = std::string(info.label) + " [" + info.unit + "] " +
                              (info.higher_is_better ? "↑" : "↓");
    char change[32];
    if (!std::isfinite(row.percent)) {
      std::snprintf(change, sizeof(change), "n/a");
    } else if (row.metric == Metric::kSafeOccupancy) {
      std::snprintf(change, sizeof(change), "%+.2f pt", row.percent);
    } else {
      std::snprintf(change, sizeof(change), "%+.1f%%", row.percent);
    }
    // Labels hold multi-byte characters; pad by display width.
    int width = 0;
    for (unsigned char c : label) width += (c & 0xC0) != 0x80;
    s << label << std::string(std::max(1, 34 - width), ' ') << std::setw(14)
      << FormatNumber(row.a) << std::setw(14) << FormatNumber(row.b) << std::setw(14)
      << FormatNumber(row.delta) << std::setw(12) << change
      << (row.delta == 0.0 ? "" : row.improved ? "  better" : "  worse") << "\n";
  }
  return s.str();
}

std::string CompareManyText(const std::vector<std::string>& names,
                            const std::vector<MetricsReport>& reports) {
  if (reports.size() < 2) throw ConfigError("compare needs at least 2 reports");
  if (names.size() != reports.size()) throw ConfigError("compare: one name per report");
  for (size_t i = 1; i < reports.size(); ++i) CheckCompatible(reports[0], reports[i]);
  std::ostringstream s;
  s << std::left << std::setw(34) << "Metric" << std::right;
  for (const std::string& n : names) s << std::setw(18) << n;
  s << "\n";
  for (int k = 0; k < kNumMetrics; ++k) {
    const Metric m = static_cast<Metric>(k);
    const MetricInfo& info = GetMetricInfo(m);
    std::vector<double> distinct;
    for (const MetricsReport& r : reports) distinct.push_back(r[m]);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (info.higher_is_better) std::reverse(distinct.begin(), distinct.end());
    const std::string label = std::string(info.label) + " [" + info.unit + "] " +
                              (info.higher_is_better ? "↑" : "↓");
    int width = 0;
    for (unsigned char c : label) width += (c & 0xC0) != 0x80;
    s << label << std::string(std::max(1, 34 - width), ' ');
    for (const MetricsReport& r : reports) {
      std::string cell = FormatNumber(r[m]);
      if (r[m] == distinct[0]) {
        cell += " **";
      } else if (distinct.size() > 1 && r[m] == distinct[1]) {
        cell += " * ";
      } else {
        cell += "   ";
      }
      s << std::setw(18) << cell;
    }
    s << "\n";
  }
  s << "** best, * second best\n";
  return s.str();
}

void WritePlotCsv(const std::string& path, const TrajectoryLog& log) {
  log.Validate();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write plot series '" + path + "'");
  out << "time,command,base_velocity,mean_position_error,mean_abs_torque,mechanical_power\n";
  out << std::setprecision(9);
  const double n = log.n_joints;
  for (const TrajectoryStep& s : log.steps) {
    out << s.time << "," << s.command << "," << s.base_velocity << ","
        << (s.target - s.q).cwiseAbs().sum() / n << "," << s.torque.cwiseAbs().sum() / n << ","
        << Power(s) << "\n";
  }
}

}  // namespace dynaware::eval
