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

#include "dynaware/sim/types.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dynaware/common/error.h"
#include "dynaware/common/kv_config.h"

namespace dynaware::sim {
namespace {

void CheckRange(const char* name, const Range& r) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
    std::ostringstream os;
    os << "randomization range '" << name << "' is invalid: [" << r.lo << ", " << r.hi << "]";
    throw ConfigError(os.str());
  }
}

Range ReadRange(const KvConfig& config, const std::string& key, Range fallback) {
  if (!config.Has(key)) return fallback;
  auto values = config.GetDoubleList(key);
  if (values.size() != 2) {
    throw ConfigError(config.Where(key) + ": field '" + key + "' expects 'lo, hi'");
  }
  return Range{values[0], values[1]};
}

std::vector<double> PerJoint(const KvConfig& config, const std::string& key,
                             const std::vector<double>& fallback, int n_joints) {
  if (!config.Has(key)) return fallback;
  auto values = config.GetDoubleList(key);
  if (values.size() == 1) return std::vector<double>(n_joints, values[0]);
  if (static_cast<int>(values.size()) == 2 && n_joints % 2 == 0) {
    // hip, knee pattern repeated per leg
    std::vector<double> out;
    for (int i = 0; i < n_joints; ++i) out.push_back(values[i % 2]);
    return out;
  }
  if (static_cast<int>(values.size()) != n_joints) {
    throw ConfigError(config.Where(key) + ": field '" + key + "' expects 1, 2 or n_joints values");
  }
  return values;
}

}  // namespace

RobotModel RobotModel::PlanarQuadruped() {
  RobotModel m;
  m.n_joints = 8;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    // hip (thigh link), knee (calf link)
    m.link_masses.insert(m.link_masses.end(), {0.8, 0.2});
    m.link_lengths.insert(m.link_lengths.end(), {0.2, 0.2});
    m.q_lower.insert(m.q_lower.end(), {-1.0, -2.6});
    m.q_upper.insert(m.q_upper.end(), {2.0, -0.3});
    m.q_nominal.insert(m.q_nominal.end(), {0.5, -1.0});
  }
  return m;
}

RobotModel RobotModel::FromConfig(const KvConfig& config) {
  RobotModel m = PlanarQuadruped();
  if (config.Has("model.n_joints")) m.n_joints = static_cast<int>(config.GetInt("model.n_joints"));
  if (m.n_joints != 8 && !config.Has("model.link_masses")) {
    // Rebuild per-joint defaults for a different chain length.
    const int jpl = std::max(1, m.n_joints / kNumLegs);
    m.link_masses.assign(m.n_joints, 1.0 / jpl);
    m.link_lengths.assign(m.n_joints, 0.4 / jpl);
    m.q_lower.assign(m.n_joints, -1.5);
    m.q_upper.assign(m.n_joints, 1.5);
    m.q_nominal.assign(m.n_joints, 0.0);
  }
  m.base_mass = config.GetDouble("model.base_mass", m.base_mass);
  m.base_length = config.GetDouble("model.base_length", m.base_length);
  m.base_thickness = config.GetDouble("model.base_thickness", m.base_thickness);
  m.hip_offset = config.GetDouble("model.hip_offset", m.hip_offset);
  m.link_masses = PerJoint(config, "model.link_masses", m.link_masses, m.n_joints);
  m.link_lengths = PerJoint(config, "model.link_lengths", m.link_lengths, m.n_joints);
  m.q_lower = PerJoint(config, "model.q_lower", m.q_lower, m.n_joints);
  m.q_upper = PerJoint(config, "model.q_upper", m.q_upper, m.n_joints);
  m.q_nominal = PerJoint(config, "model.q_nominal", m.q_nominal, m.n_joints);
  m.joint_velocity_limit = config.GetDouble("model.joint_velocity_limit", m.joint_velocity_limit);
  m.torque_limit = config.GetDouble("model.torque_limit", m.torque_limit);
  m.armature = config.GetDouble("model.armature", m.armature);
  m.h_target = config.GetDouble("model.h_target", m.h_target);
  m.gravity = config.GetDouble("model.gravity", m.gravity);
  m.Validate();
  return m;
}

double RobotModel::TotalMass() const {
  double total = base_mass;
  for (double m : link_masses) total += m;
  return total;
}

double RobotModel::BaseInertia() const {
  return base_mass * (base_length * base_length + base_thickness * base_thickness) / 12.0;
}

void RobotModel::Validate() const {
  if (n_joints < 2) throw ConfigError("model: n_joints must be >= 2");
  if (n_joints % kNumLegs != 0) {
    throw ConfigError("model: n_joints must be a multiple of the leg count (4)");
  }
  auto check_size = [&](const std::vector<double>& v, const char* name) {
    if (static_cast<int>(v.size()) != n_joints) {
      throw ConfigError(std::string("model: ") + name + " must have n_joints entries");
    }
  };
  check_size(link_masses, "link_masses");
  check_size(link_lengths, "link_lengths");
  check_size(q_lower, "q_lower");
  check_size(q_upper, "q_upper");
  check_size(q_nominal, "q_nominal");
  for (int i = 0; i < n_joints; ++i) {
    if (!(link_masses[i] > 0.0)) throw ConfigError("model: link masses must be > 0");
    if (!(link_lengths[i] > 0.0)) throw ConfigError("model: link lengths must be > 0");
    if (!(q_lower[i] < q_upper[i])) {
      throw ConfigError("model: joint " + std::to_string(i) + " has lower limit >= upper limit");
    }
  }
  if (!(base_mass > 0.0) || !(base_length > 0.0) || !(base_thickness > 0.0)) {
    throw ConfigError("model: base mass and dimensions must be > 0");
  }
  if (!(torque_limit > 0.0)) throw ConfigError("model: torque_limit must be > 0");
  if (!(joint_velocity_limit > 0.0)) throw ConfigError("model: joint_velocity_limit must be > 0");
  if (!(h_target > 0.0)) throw ConfigError("model: h_target must be > 0");
  if (armature < 0.0) throw ConfigError("model: armature must be >= 0");
}

RandomizationSpec RandomizationSpec::Nominal() {
  RandomizationSpec d;
  RandomizationSpec s;
  s.com_displacement = {d.com_displacement.mid(), d.com_displacement.mid()};
  s.motor_strength = {d.motor_strength.mid(), d.motor_strength.mid()};
  s.motor_offset = {d.motor_offset.mid(), d.motor_offset.mid()};
  s.friction = {d.friction.mid(), d.friction.mid()};
  s.restitution = {d.restitution.mid(), d.restitution.mid()};
  s.dof_position_noise = 0.0;
  s.dof_velocity_noise = 0.0;
  s.gravity_noise = 0.0;
  return s;
}

RandomizationSpec RandomizationSpec::FromConfig(const KvConfig& config) {
  RandomizationSpec s;
  s.com_displacement = ReadRange(config, "randomization.com_displacement", s.com_displacement);
  s.motor_strength = ReadRange(config, "randomization.motor_strength", s.motor_strength);
  s.motor_offset = ReadRange(config, "randomization.motor_offset", s.motor_offset);
  s.friction = ReadRange(config, "randomization.friction", s.friction);
  s.restitution = ReadRange(config, "randomization.restitution", s.restitution);
  s.dof_position_noise =
      config.GetDouble("randomization.dof_position_noise", s.dof_position_noise);
  s.dof_velocity_noise =
      config.GetDouble("randomization.dof_velocity_noise", s.dof_velocity_noise);
  s.gravity_noise = config.GetDouble("randomization.gravity_noise", s.gravity_noise);
  s.Validate();
  return s;
}

void RandomizationSpec::Validate() const {
  CheckRange("com_displacement", com_displacement);
  CheckRange("motor_strength", motor_strength);
  CheckRange("motor_offset", motor_offset);
  CheckRange("friction", friction);
  CheckRange("restitution", restitution);
  if (friction.lo < 0.0) throw ConfigError("randomization range 'friction' must be >= 0");
  if (restitution.lo < 0.0 || restitution.hi > 1.0) {
    throw ConfigError("randomization range 'restitution' must lie in [0, 1]");
  }
  if (motor_strength.lo <= 0.0) {
    throw ConfigError("randomization range 'motor_strength' must be > 0");
  }
  if (dof_position_noise < 0.0 || dof_velocity_noise < 0.0 || gravity_noise < 0.0) {
    throw ConfigError("randomization noise magnitudes must be >= 0");
  }
}

double TerrainConfig::Height(double x) const {
  if (heights.empty()) return 0.0;
  const double u = (x - x_min) / cell_size;
  if (u <= 0.0) return heights.front();
  const auto last = static_cast<double>(heights.size() - 1);
  if (u >= last) return heights.back();
  const auto i = static_cast<size_t>(u);
  const double f = u - static_cast<double>(i);
  return heights[i] * (1.0 - f) + heights[i + 1] * f;
}

double TerrainConfig::Slope(double x) const {
  if (heights.size() < 2) return 0.0;
  const double u = (x - x_min) / cell_size;
  if (u <= 0.0 || u >= static_cast<double>(heights.size() - 1)) return 0.0;
  const auto i = static_cast<size_t>(u);
  return (heights[i + 1] - heights[i]) / cell_size;
}

double TerrainConfig::MaxAbsHeight() const {
  double m = 0.0;
  for (double h : heights) m = std::max(m, std::abs(h));
  return m;
}

std::string TerrainConfig::ToCsv() const {
  std::ostringstream os;
  os.precision(9);
  os << "x,height\n";
  for (size_t i = 0; i < heights.size(); ++i) {
    os << x_min + static_cast<double>(i) * cell_size << ',' << heights[i] << '\n';
  }
  return os.str();
}

double RobotState::ForwardVelocity() const {
  const double c = std::cos(pitch()), s = std::sin(pitch());
  return c * base_vx() + s * base_vz();
}

}  // namespace dynaware::sim
