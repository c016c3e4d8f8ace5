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

#include "dynaware/sim/simulator.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>

#include "dynaware/common/error.h"

namespace dynaware::sim {
namespace {

using Jacobian = Eigen::Matrix<double, 2, Eigen::Dynamic>;

inline Vec2 Rot90(const Vec2& v) { return Vec2(-v.y(), v.x()); }
inline Vec2 LinkDirection(double angle) { return Vec2(std::sin(angle), -std::cos(angle)); }

Vec2 HipInBase(const RobotModel& model, int leg) {
  return Vec2(leg < 2 ? model.hip_offset : -model.hip_offset, 0.0);
}

// Jacobian of a world point attached to leg `leg` after `links` links, given
// the pivot positions of those links. links == 0 means attached to the base.
Jacobian PointJacobian(const RobotModel& model, const Vec2& point, const Vec2& origin, int leg,
                       const std::vector<Vec2>& pivots, int links) {
  Jacobian jac = Jacobian::Zero(2, model.num_dofs());
  jac(0, 0) = 1.0;
  jac(1, 1) = 1.0;
  jac.col(2) = Rot90(point - origin);
  const int jpl = model.joints_per_leg();
  for (int k = 0; k < links; ++k) {
    jac.col(kNumBaseDofs + leg * jpl + k) = Rot90(point - pivots[k]);
  }
  return jac;
}

bool AllFinite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

Kinematics ComputeKinematics(const RobotModel& model, const Eigen::VectorXd& position,
                             const Eigen::VectorXd& velocity, double com_offset) {
  const int ndof = model.num_dofs();
  const int jpl = model.joints_per_leg();
  Kinematics kin;
  kin.bodies.reserve(1 + model.n_joints);
  kin.sites.reserve(kNumLegs * (jpl + 1) + 4);

  const Vec2 origin(position[0], position[1]);
  const double pitch = position[2];
  const double pitch_rate = velocity[2];
  const Eigen::Rotation2Dd rot(pitch);

  {
    BodyKinematics base;
    base.mass = model.base_mass;
    base.inertia = model.BaseInertia();
    const Vec2 r = rot * Vec2(com_offset, 0.0);
    base.com = origin + r;
    base.jacobian = PointJacobian(model, base.com, origin, 0, {}, 0);
    base.angle_jacobian = Eigen::RowVectorXd::Zero(ndof);
    base.angle_jacobian[2] = 1.0;
    base.bias_acceleration = -pitch_rate * pitch_rate * r;
    kin.bodies.push_back(std::move(base));
  }

  std::vector<Vec2> pivots(jpl);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec2 hip = rot * HipInBase(model, leg);
    Vec2 pivot = origin + hip;
    Vec2 pivot_bias = -pitch_rate * pitch_rate * hip;
    double angle = pitch;
    double angle_rate = pitch_rate;
    Eigen::RowVectorXd angle_jac = Eigen::RowVectorXd::Zero(ndof);
    angle_jac[2] = 1.0;
    for (int k = 0; k < jpl; ++k) {
      const int j = leg * jpl + k;
      angle += position[kNumBaseDofs + j];
      angle_rate += velocity[kNumBaseDofs + j];
      angle_jac[kNumBaseDofs + j] = 1.0;
      pivots[k] = pivot;
      const double length = model.link_lengths[j];
      const Vec2 dir = LinkDirection(angle);

      BodyKinematics link;
      link.mass = model.link_masses[j];
      link.inertia = link.mass * length * length / 12.0;
      link.com = pivot + 0.5 * length * dir;
      link.jacobian = PointJacobian(model, link.com, origin, leg, pivots, k + 1);
      link.angle_jacobian = angle_jac;
      link.bias_acceleration = pivot_bias - angle_rate * angle_rate * 0.5 * length * dir;
      kin.bodies.push_back(std::move(link));

      pivot += length * dir;
      pivot_bias -= angle_rate * angle_rate * length * dir;

      ContactSite site;
      site.leg = leg;
      site.position = pivot;
      site.jacobian = PointJacobian(model, pivot, origin, leg, pivots, k + 1);
      if (k + 1 == jpl) {
        site.kind = SiteKind::kFoot;
        site.collision_body = -1;
      } else {
        site.kind = SiteKind::kKnee;
        site.collision_body = 1 + leg;
      }
      kin.sites.push_back(std::move(site));
    }
  }

  const double hx = 0.5 * model.base_length, hz = 0.5 * model.base_thickness;
  for (const Vec2& corner : {Vec2(hx, -hz), Vec2(-hx, -hz), Vec2(hx, hz), Vec2(-hx, hz)}) {
    ContactSite site;
    site.kind = SiteKind::kBaseCorner;
    site.collision_body = 0;
    site.position = origin + rot * corner;
    site.jacobian = PointJacobian(model, site.position, origin, 0, {}, 0);
    kin.sites.push_back(std::move(site));
  }
  return kin;
}

Eigen::MatrixXd MassMatrix(const RobotModel& model, const Kinematics& kin) {
  const int ndof = model.num_dofs();
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(ndof, ndof);
  for (const BodyKinematics& body : kin.bodies) {
    mass.noalias() += body.mass * body.jacobian.transpose() * body.jacobian;
    mass.noalias() += body.inertia * body.angle_jacobian.transpose() * body.angle_jacobian;
  }
  for (int j = 0; j < model.n_joints; ++j) mass(kNumBaseDofs + j, kNumBaseDofs + j) += model.armature;
  return mass;
}

Eigen::VectorXd BiasForces(const RobotModel& model, const Kinematics& kin) {
  Eigen::VectorXd bias = Eigen::VectorXd::Zero(model.num_dofs());
  for (const BodyKinematics& body : kin.bodies) {
    const Vec2 f = body.mass * (body.bias_acceleration + Vec2(0.0, model.gravity));
    bias.noalias() += body.jacobian.transpose() * f;
  }
  return bias;
}

ResetResult Reset(const RobotModel& model, const RandomizationSpec& spec,
                  const TerrainConfig& terrain, uint64_t seed) {
  model.Validate();
  spec.Validate();
  ResetResult out;
  Rng episode_rng(DeriveSeed(seed, "episode_params"));
  EpisodeParams& p = out.params;
  p.friction = episode_rng.Uniform(spec.friction.lo, spec.friction.hi);
  p.restitution = episode_rng.Uniform(spec.restitution.lo, spec.restitution.hi);
  p.com_offset = episode_rng.Uniform(spec.com_displacement.lo, spec.com_displacement.hi);
  p.motor_strength.resize(model.n_joints);
  p.motor_offset.resize(model.n_joints);
  for (int j = 0; j < model.n_joints; ++j) {
    p.motor_strength[j] = episode_rng.Uniform(spec.motor_strength.lo, spec.motor_strength.hi);
  }
  for (int j = 0; j < model.n_joints; ++j) {
    p.motor_offset[j] = episode_rng.Uniform(spec.motor_offset.lo, spec.motor_offset.hi);
  }

  Rng spawn_rng(DeriveSeed(seed, "spawn"));
  RobotState& s = out.state;
  s.position = Eigen::VectorXd::Zero(model.num_dofs());
  s.velocity = Eigen::VectorXd::Zero(model.num_dofs());
  s.position[1] = terrain.Height(0.0) + model.h_target;
  for (int j = 0; j < model.n_joints; ++j) {
    s.position[kNumBaseDofs + j] =
        model.q_nominal[j] + spawn_rng.Uniform(-kSpawnJointPerturbation, kSpawnJointPerturbation);
  }
  s.com_offset = p.com_offset;
  return out;
}

RobotState StepPhysics(const RobotModel& model, const RobotState& state,
                       std::span<const double> torques, const EpisodeParams& params,
                       const TerrainConfig& terrain, double dt) {
  const int n = model.n_joints;
  if (static_cast<int>(torques.size()) != n) {
    throw ConfigError("StepPhysics: torque vector has " + std::to_string(torques.size()) +
                      " entries, expected " + std::to_string(n));
  }
  if (!(dt > 0.0)) throw ConfigError("StepPhysics: dt must be > 0");
  for (double t : torques) {
    if (!std::isfinite(t)) throw NumericError("StepPhysics: non-finite joint torque");
  }

  const Eigen::VectorXd& q = state.position;
  const Eigen::VectorXd& v = state.velocity;
  const Kinematics kin = ComputeKinematics(model, q, v, state.com_offset);
  const Eigen::MatrixXd mass = MassMatrix(model, kin);

  Eigen::VectorXd force = -BiasForces(model, kin);
  for (int j = 0; j < n; ++j) {
    const int i = kNumBaseDofs + j;
    double tau = torques[j];
    const double below = model.q_lower[j] - q[i];
    const double above = q[i] - model.q_upper[j];
    if (below > 0.0) tau += contact::kJointLimitStiffness * below - contact::kJointLimitDamping * v[i];
    if (above > 0.0) tau -= contact::kJointLimitStiffness * above + contact::kJointLimitDamping * v[i];
    force[i] += tau;
  }

  struct ActiveContact {
    int site = 0;
    Vec2 normal, tangent;
    Eigen::RowVectorXd jn, jt;
    double spring = 0.0;     // explicit normal spring force
    double damping = 0.0;    // normal damping coefficient
    bool normal_damped = true;
    bool sliding = false;
    double slide_force = 0.0;
    double fn = 0.0, ft = 0.0;
  };
  std::vector<ActiveContact> active;
  for (int s = 0; s < static_cast<int>(kin.sites.size()); ++s) {
    const Vec2& p = kin.sites[s].position;
    const double ground = terrain.Height(p.x());
    if (p.y() >= ground) continue;
    const double slope = terrain.Slope(p.x());
    const double norm = std::sqrt(1.0 + slope * slope);
    ActiveContact c;
    c.site = s;
    c.normal = Vec2(-slope, 1.0) / norm;
    c.tangent = Vec2(1.0, slope) / norm;
    c.jn = c.normal.transpose() * kin.sites[s].jacobian;
    c.jt = c.tangent.transpose() * kin.sites[s].jacobian;
    const double depth = (ground - p.y()) * c.normal.y();
    c.spring = contact::kStiffness * depth;
    const double vn = c.jn.dot(v);
    c.damping = vn < 0.0 ? contact::kDamping : contact::kDamping * (1.0 - params.restitution);
    active.push_back(std::move(c));
  }

  const Eigen::VectorXd momentum = mass * v;
  Eigen::VectorXd v_next = v;
  for (int pass = 0; pass < 6; ++pass) {
    Eigen::MatrixXd lhs = mass;
    Eigen::VectorXd rhs = momentum + dt * force;
    for (const ActiveContact& c : active) {
      rhs += dt * c.spring * c.jn.transpose();
      if (c.normal_damped) lhs.noalias() += dt * c.damping * c.jn.transpose() * c.jn;
      if (c.sliding) {
        rhs += dt * c.slide_force * c.jt.transpose();
      } else {
        lhs.noalias() += dt * contact::kTangentialDamping * c.jt.transpose() * c.jt;
      }
    }
    v_next = lhs.ldlt().solve(rhs);

    bool changed = false;
    for (ActiveContact& c : active) {
      c.fn = c.spring - (c.normal_damped ? c.damping * c.jn.dot(v_next) : 0.0);
      if (c.fn < 0.0 && c.normal_damped) {
        c.normal_damped = false;
        c.fn = c.spring;
        changed = true;
      }
      const double limit = params.friction * c.fn;
      if (c.sliding) {
        const double updated = std::copysign(limit, c.slide_force);
        if (updated != c.slide_force) {
          c.slide_force = updated;
          changed = true;
        }
        c.ft = c.slide_force;
      } else {
        c.ft = -contact::kTangentialDamping * c.jt.dot(v_next);
        if (std::abs(c.ft) > limit) {
          c.sliding = true;
          c.slide_force = std::copysign(limit, c.ft);
          c.ft = c.slide_force;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }

  RobotState next;
  next.com_offset = state.com_offset;
  next.time = state.time + dt;
  next.velocity = v_next;
  for (int j = 0; j < n; ++j) {
    double& qd = next.velocity[kNumBaseDofs + j];
    qd = std::clamp(qd, -model.joint_velocity_limit, model.joint_velocity_limit);
  }
  next.position = q + dt * next.velocity;

  int foot = 0;
  for (const ContactSite& site : kin.sites) {
    if (site.kind == SiteKind::kFoot) {
      next.foot_velocity_x[foot] = site.jacobian.row(0).dot(next.velocity);
      ++foot;
    }
  }
  for (const ActiveContact& c : active) {
    const ContactSite& site = kin.sites[c.site];
    const Vec2 f = c.fn * c.normal + c.ft * c.tangent;
    if (site.kind == SiteKind::kFoot) {
      next.foot_force[site.leg] = f;
      next.foot_contact[site.leg] = c.fn > contact::kThreshold;
    } else {
      next.collision_force[site.collision_body] += f.norm();
    }
  }

  if (!AllFinite(next.position) || !AllFinite(next.velocity)) {
    throw NumericError("StepPhysics: state became non-finite");
  }
  return next;
}

Vec2 ProjectGravity(double pitch) {
  // R(pitch)^T * (0, -1)
  return Vec2(-std::sin(pitch), -std::cos(pitch));
}

double BaseHeight(const RobotState& state, const TerrainConfig& terrain) {
  return state.base_z() - terrain.Height(state.base_x());
}

bool HasFallen(const RobotModel& model, const RobotState& state, const TerrainConfig& terrain) {
  return std::abs(state.pitch()) > kFallPitch ||
         BaseHeight(state, terrain) < kFallHeightFraction * model.h_target;
}

std::array<Vec2, kNumLegs> FootPositions(const RobotModel& model, const RobotState& state) {
  std::array<Vec2, kNumLegs> feet{};
  const Eigen::Rotation2Dd rot(state.pitch());
  const Vec2 origin(state.base_x(), state.base_z());
  const int jpl = model.joints_per_leg();
  for (int leg = 0; leg < kNumLegs; ++leg) {
    Vec2 p = origin + rot * HipInBase(model, leg);
    double angle = state.pitch();
    for (int k = 0; k < jpl; ++k) {
      const int j = leg * jpl + k;
      angle += state.position[kNumBaseDofs + j];
      p += model.link_lengths[j] * LinkDirection(angle);
    }
    feet[leg] = p;
  }
  return feet;
}

Eigen::VectorXf Observation::Flatten() const {
  const int n = static_cast<int>(q.size());
  Eigen::VectorXf out(Dim(n));
  out.segment(0, n) = q.cast<float>();
  out.segment(n, n) = qd.cast<float>();
  out[2 * n] = static_cast<float>(gravity.x());
  out[2 * n + 1] = static_cast<float>(gravity.y());
  out.segment(2 * n + 2, n) = prev_action.cast<float>();
  out[3 * n + 2] = static_cast<float>(lin_vel_cmd);
  out[3 * n + 3] = static_cast<float>(ang_vel_cmd);
  return out;
}

Eigen::VectorXf PrivilegedState::Flatten() const {
  const int n = static_cast<int>(motor_strength.size());
  Eigen::VectorXf out(Dim(n));
  int i = 0;
  for (int k = 0; k < 3; ++k) out[i++] = static_cast<float>(body_velocity[k]);
  out[i++] = static_cast<float>(com_displacement);
  for (bool c : foot_contact) out[i++] = c ? 1.0f : 0.0f;
  for (const Vec2& f : contact_force) {
    out[i++] = static_cast<float>(f.x());
    out[i++] = static_cast<float>(f.y());
  }
  for (double m : contact_force_magnitude) out[i++] = static_cast<float>(m);
  out[i++] = static_cast<float>(friction);
  out[i++] = static_cast<float>(restitution);
  for (const auto& samples : terrain_height) {
    for (double h : samples) out[i++] = static_cast<float>(h);
  }
  for (int j = 0; j < n; ++j) out[i++] = static_cast<float>(motor_strength[j]);
  return out;
}

Observation AssembleObservation(const RobotModel& model, const RobotState& state,
                                const Eigen::VectorXd& prev_action, const Command& command,
                                const RandomizationSpec& spec, Rng& rng) {
  const int n = model.n_joints;
  if (prev_action.size() != n) {
    throw ConfigError("AssembleObservation: previous action has " +
                      std::to_string(prev_action.size()) + " entries, expected " +
                      std::to_string(n));
  }
  Observation obs;
  obs.q = state.joint_positions();
  obs.qd = state.joint_velocities();
  obs.gravity = ProjectGravity(state.pitch());
  if (spec.dof_position_noise > 0.0) {
    for (int j = 0; j < n; ++j) obs.q[j] += rng.Uniform(-1.0, 1.0) * spec.dof_position_noise;
  }
  if (spec.dof_velocity_noise > 0.0) {
    for (int j = 0; j < n; ++j) obs.qd[j] += rng.Uniform(-1.0, 1.0) * spec.dof_velocity_noise;
  }
  if (spec.gravity_noise > 0.0) {
    obs.gravity.x() += rng.Uniform(-1.0, 1.0) * spec.gravity_noise;
    obs.gravity.y() += rng.Uniform(-1.0, 1.0) * spec.gravity_noise;
  }
  obs.prev_action = prev_action;
  obs.lin_vel_cmd = command.lin_vel;
  obs.ang_vel_cmd = command.ang_vel;
  return obs;
}

PrivilegedState AssemblePrivileged(const RobotModel& model, const RobotState& state,
                                   const EpisodeParams& params, const TerrainConfig& terrain) {
  PrivilegedState p;
  p.body_velocity = Eigen::Vector3d(state.base_vx(), state.base_vz(), state.pitch_rate());
  p.com_displacement = state.com_offset;
  p.foot_contact = state.foot_contact;
  p.contact_force = state.foot_force;
  for (int leg = 0; leg < kNumLegs; ++leg) p.contact_force_magnitude[leg] = state.foot_force[leg].norm();
  p.friction = params.friction;
  p.restitution = params.restitution;
  const auto feet = FootPositions(model, state);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    for (size_t k = 0; k < PrivilegedState::kStencil.size(); ++k) {
      p.terrain_height[leg][k] = terrain.Height(feet[leg].x() + PrivilegedState::kStencil[k]);
    }
  }
  p.motor_strength = Eigen::Map<const Eigen::VectorXd>(params.motor_strength.data(),
                                                       static_cast<Eigen::Index>(params.motor_strength.size()));
  return p;
}

TerrainConfig GenerateTerrain(TerrainKind kind, int level, uint64_t seed) {
  if (level < 0 || level >= kNumTerrainLevels) {
    throw ConfigError("terrain level " + std::to_string(level) + " outside [0, " +
                      std::to_string(kNumTerrainLevels - 1) + "]");
  }
  TerrainConfig t;
  t.kind = kind;
  t.level = level;
  t.seed = seed;
  const int samples = static_cast<int>(std::lround(-2.0 * t.x_min / t.cell_size)) + 1;
  t.heights.assign(samples, 0.0);
  if (kind == TerrainKind::kRough) {
    Rng rng(DeriveSeed(seed, "terrain"));
    const double amplitude = kRoughAmplitudePerLevel * (level + 1);
    for (double& h : t.heights) h = rng.Uniform(0.0, amplitude);
  }
  return t;
}

TerrainKind ParseTerrainKind(const std::string& name) {
  if (name == "flat") return TerrainKind::kFlat;
  if (name == "rough") return TerrainKind::kRough;
  throw ConfigError("unknown terrain kind '" + name + "' (expected flat or rough)");
}

const char* TerrainKindName(TerrainKind kind) {
  return kind == TerrainKind::kFlat ? "flat" : "rough";
}

}  // namespace dynaware::sim
