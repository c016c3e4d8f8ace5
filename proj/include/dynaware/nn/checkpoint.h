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

#ifndef DYNAWARE_NN_CHECKPOINT_H_
#define DYNAWARE_NN_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynaware/nn/graph.h"

namespace dynaware::nn {

inline constexpr uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Matrix value;
};

// In-memory form of a checkpoint file.
//
// File layout (little endian):
//   "DYNACKPT" | u32 version | u64 meta_len | meta JSON |
//   u32 tensor_count | { u32 name_len | name | u32 rows | u32 cols |
//                        f32 data[rows*cols] (column-major) }* | u32 crc32
// The trailing CRC-32 covers every preceding byte.
struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  const Matrix& Get(const std::string& name) const;
  bool Has(const std::string& name) const;
  void Add(const std::string& name, const Matrix& value) { tensors.push_back({name, value}); }
};

std::string SerializeCheckpoint(const Checkpoint& ckpt);
// Throws ConfigError on bad magic, unsupported version, truncation, or a
// checksum mismatch.
Checkpoint DeserializeCheckpoint(const std::string& bytes);

void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::string& path);

// CRC-32 of the raw bytes of a parameter set, in order.
uint32_t ParameterChecksum(const std::vector<const Parameter*>& params);

void AddParameters(Checkpoint& ckpt, const std::vector<Parameter*>& params,
                   const std::string& prefix = "");
// Copies values into `params`, checking shapes; bumps versions.
void LoadParameters(const Checkpoint& ckpt, const std::vector<Parameter*>& params,
                    const std::string& prefix = "");

}  // namespace dynaware::nn

#endif  // DYNAWARE_NN_CHECKPOINT_H_
