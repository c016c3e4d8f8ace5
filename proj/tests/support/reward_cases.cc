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

#include "tests/support/reward_cases.h"

#include <cmath>
#include <functional>

namespace dynaware::testsupport {

using namespace reward;

RewardInputs ZeroRewardInputs(int n) {
  RewardInputs in;
  in.h_target = 0.33;
  in.base_height = 0.33;
  for (Eigen::VectorXd* v : {&in.q, &in.qd, &in.qd_prev, &in.action, &in.action_prev,
                             &in.action_prev2, &in.target, &in.target_prev, &in.target_prev2,
                             &in.applied_torque}) {
    *v = Eigen::VectorXd::Zero(n);
  }
  in.q_lower = Eigen::VectorXd::Constant(n, -1.0);
  in.q_upper = Eigen::VectorXd::Constant(n, 1.0);
  in.collision_force.assign(5, 0.0);
  in.command.lin_vel = 0.6;
  in.forward_velocity = 0.6;
  return in;
}

std::vector<RewardCase> HandEvaluatedRewardCases() {
  std::vector<RewardCase> cases;
  auto add = [&cases](const std::string& name, Component c, double raw,
                      const std::function<void(RewardInputs&)>& edit) {
    RewardInputs in = ZeroRewardInputs(8);
    edit(in);
    cases.push_back({name, c, in, raw});
  };

  add("lin_vel_saturated", kLinearVelocity, 1.0, [](RewardInputs& in) {
    in.forward_velocity = 0.8;
  });
  add("lin_vel_below_threshold", kLinearVelocity, std::exp(-0.16 / 0.25), [](RewardInputs& in) {
    in.forward_velocity = 0.2;
  });
  add("lin_vel_backward_command", kLinearVelocity, std::exp(-0.01 / 0.25), [](RewardInputs& in) {
    in.command.lin_vel = -0.4;
    in.forward_velocity = -0.5;
  });
  add("lin_vel_at_threshold", kLinearVelocity, 1.0, [](RewardInputs& in) {
    in.forward_velocity = 0.6;
  });
  add("lin_vel_just_below_threshold", kLinearVelocity, std::exp(-1e-8 / 0.25),
      [](RewardInputs& in) { in.forward_velocity = 0.6 - 1e-4; });
  add("lin_vel_zero_command", kLinearVelocity, std::exp(-0.81 / 0.25), [](RewardInputs& in) {
    in.command.lin_vel = 0.0;
    in.forward_velocity = -0.3;
  });
  add("ang_vel", kAngularVelocity, std::exp(-0.16 / 0.25), [](RewardInputs& in) {
    in.command.ang_vel = 0.5;
    in.yaw_rate = 0.1;
  });
  add("orientation", kOrientation, std::sin(0.3) * std::sin(0.3), [](RewardInputs& in) {
    in.pitch = 0.3;
  });
  add("z_velocity", kZVelocity, 0.49, [](RewardInputs& in) { in.vertical_velocity = -0.7; });
  add("roll_pitch_velocity", kRollPitchVelocity, 4.0, [](RewardInputs& in) {
    in.pitch_rate = 2.0;
  });
  add("base_height", kBaseHeight, 0.08 * 0.08, [](RewardInputs& in) { in.base_height = 0.25; });
  add("collision", kCollision, 2.0, [](RewardInputs& in) {
    in.collision_force = {0.05, 0.1, 0.11, 30.0, 0.0};
  });
  add("foot_slip", kFootSlip, 0.25 + 0.04, [](RewardInputs& in) {
    in.foot_contact = {true, false, true, false};
    in.foot_velocity = {0.5, 3.0, -0.2, 1.0};
  });
  add("torque", kTorque, 1 + 4 + 9 + 0.25, [](RewardInputs& in) {
    in.applied_torque << 1, -2, 3, 0, 0, 0, 0, 0.5;
  });
  add("dof_pos_limits", kDofPosLimits, 0.3 + 0.5, [](RewardInputs& in) {
    in.q << 1.3, -1.5, 0.9, 0, 0, 0, 0, 0;
  });
  add("dof_velocity", kDofVelocity, 14.0, [](RewardInputs& in) {
    in.qd << 1, 2, 0, 0, 0, 0, 0, -3;
  });
  const double a0 = (0.1 - 0.3) / 0.02, a7 = (0.0 - 0.02) / 0.02;
  add("dof_acceleration", kDofAcceleration, a0 * a0 + a7 * a7, [](RewardInputs& in) {
    in.qd_prev << 0.1, 0, 0, 0, 0, 0, 0, 0;
    in.qd << 0.3, 0, 0, 0, 0, 0, 0, 0.02;
  });
  add("power", kPower, 6 + 4, [](RewardInputs& in) {
    in.applied_torque << 2, -1, 0, 0, 0, 0, 0, 0;
    in.qd << 3, 4, 5, 0, 0, 0, 0, 0;
  });
  add("action_rate", kActionRate, 0.09 + 0.01, [](RewardInputs& in) {
    in.action_prev << 0.5, 0, 0, 0, 0, 0, 0, 0;
    in.action << 0.2, 0.1, 0, 0, 0, 0, 0, 0;
  });
  add("smoothness_1", kSmoothness1, 0.01 + 0.04, [](RewardInputs& in) {
    in.target_prev << 0.5, -1.0, 0, 0, 0, 0, 0, 0;
    in.target << 0.6, -1.2, 0, 0, 0, 0, 0, 0;
  });
  add("smoothness_2", kSmoothness2, 0.2 * 0.2, [](RewardInputs& in) {
    in.target_prev2 << 0.5, 0, 0, 0, 0, 0, 0, 0;
    in.target_prev << 0.6, 0, 0, 0, 0, 0, 0, 0;
    in.target << 0.9, 0, 0, 0, 0, 0, 0, 0;
  });
  return cases;
}

}  // namespace dynaware::testsupport
