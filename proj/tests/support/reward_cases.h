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

#ifndef DYNAWARE_TESTS_SUPPORT_REWARD_CASES_H_
#define DYNAWARE_TESTS_SUPPORT_REWARD_CASES_H_

#include <string>
#include <vector>

#include "dynaware/reward/reward_bank.h"

namespace dynaware::testsupport {

// All-zero joint state standing at the target height, tracking 0.6 m/s.
reward::RewardInputs ZeroRewardInputs(int n_joints);

// A crafted input with the hand-evaluated raw value of one component.
struct RewardCase {
  std::string name;
  reward::Component component;
  reward::RewardInputs inputs;
  double raw = 0.0;
};

// Covers every component at least once, plus the tracking term on both sides
// of the 0.6 m/s threshold.
std::vector<RewardCase> HandEvaluatedRewardCases();

}  // namespace dynaware::testsupport

#endif  // DYNAWARE_TESTS_SUPPORT_REWARD_CASES_H_
