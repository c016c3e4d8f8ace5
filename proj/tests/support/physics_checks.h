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

#ifndef DYNAWARE_TESTS_SUPPORT_PHYSICS_CHECKS_H_
#define DYNAWARE_TESTS_SUPPORT_PHYSICS_CHECKS_H_

#include <vector>

#include "dynaware/sim/simulator.h"
#include "dynaware/sim/types.h"

namespace dynaware::testsupport {

// Total mechanical energy from forward kinematics evaluated independently of
// the simulator's own mass matrix.
double OracleEnergy(const sim::RobotModel& m, const sim::RobotState& s);

// kp = 20, kd = 0.5 hold of the nominal joint angles.
std::vector<double> PdHold(const sim::RobotModel& m, const sim::RobotState& s);

// Worst |E(t) - E(0)| / |E(0)| over `steps` zero-torque physics steps of a
// robot suspended above flat ground, across `trials` random initial states.
double FreeFallMaxRelativeDrift(int trials, int steps, uint64_t seed);

struct StandingBalance {
  double mean_normal_force = 0.0;  // N, summed over feet
  double weight = 0.0;             // N
  double mean_height = 0.0;        // m
  double target_height = 0.0;      // m
};
// Settles under a PD hold for 3 s, then averages over 100 physics steps.
StandingBalance MeasureStandingBalance();

// Two identical 400-step rough-terrain rollouts with randomized parameters
// and perturbed torques end in bit-identical states.
bool PhysicsRolloutDeterministic();

}  // namespace dynaware::testsupport

#endif  // DYNAWARE_TESTS_SUPPORT_PHYSICS_CHECKS_H_
