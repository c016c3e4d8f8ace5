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

#include "dynaware/nn/checkpoint.h"

#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "dynaware/common/error.h"

namespace dynaware::nn {

namespace {

constexpr char kMagic[8] = {'D', 'Y', 'N', 'A', 'C', 'K', 'P', 'T'};

template <typename T>
void Put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes, size_t limit) : bytes_(bytes), limit_(limit) {}

  template <typename T>
  T Get() {
    Need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string GetBytes(size_t n) {
    Need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void GetFloats(float* dst, size_t count) {
    Need(count * sizeof(float));
    std::memcpy(dst, bytes_.data() + pos_, count * sizeof(float));
    pos_ += count * sizeof(float);
  }
  size_t pos() const { return pos_; }

 private:
  void Need(size_t n) const {
    if (pos_ + n > limit_) throw ConfigError("checkpoint: truncated file");
  }
  const std::string& bytes_;
  size_t limit_;
  size_t pos_ = 0;
};

uint32_t Crc(const char* data, size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (size > 0) {
    const uInt chunk = static_cast<uInt>(std::min<size_t>(size, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<uint32_t>(crc);
}

std::string Hex(uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return buf;
}

}  // namespace

const Matrix& Checkpoint::Get(const std::string& name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return t.value;
  }
  throw ConfigError("checkpoint: missing tensor '" + name + "'");
}

bool Checkpoint::Has(const std::string& name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

std::string SerializeCheckpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof(kMagic));
  Put<uint32_t>(out, kCheckpointVersion);
  const std::string meta = ckpt.meta.dump();
  Put<uint64_t>(out, meta.size());
  out += meta;
  Put<uint32_t>(out, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const NamedTensor& t : ckpt.tensors) {
    Put<uint32_t>(out, static_cast<uint32_t>(t.name.size()));
    out += t.name;
    Put<uint32_t>(out, static_cast<uint32_t>(t.value.rows()));
    Put<uint32_t>(out, static_cast<uint32_t>(t.value.cols()));
    out.append(reinterpret_cast<const char*>(t.value.data()), t.value.size() * sizeof(float));
  }
  Put<uint32_t>(out, Crc(out.data(), out.size()));
  return out;
}

Checkpoint DeserializeCheckpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) + 4 ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ConfigError("checkpoint: bad magic (not a checkpoint file)");
  }
  const size_t body = bytes.size() - 4;
  uint32_t stored;
  std::memcpy(&stored, bytes.data() + body, 4);
  const uint32_t computed = Crc(bytes.data(), body);
  if (stored != computed) {
    throw ConfigError("checkpoint: checksum mismatch: stored " + Hex(stored) + ", computed " +
                      Hex(computed));
  }
  Reader r(bytes, body);
  r.GetBytes(sizeof(kMagic));
  const uint32_t version = r.Get<uint32_t>();
  if (version != kCheckpointVersion) {
    throw ConfigError("checkpoint: unsupported format version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const uint64_t meta_len = r.Get<uint64_t>();
  try {
    ckpt.meta = nlohmann::json::parse(r.GetBytes(meta_len));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: malformed metadata: ") + e.what());
  }
  const uint32_t count = r.Get<uint32_t>();
  for (uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.GetBytes(r.Get<uint32_t>());
    const uint32_t rows = r.Get<uint32_t>();
    const uint32_t cols = r.Get<uint32_t>();
    t.value.resize(rows, cols);
    r.GetFloats(t.value.data(), static_cast<size_t>(rows) * cols);
    ckpt.tensors.push_back(std::move(t));
  }
  if (r.pos() != body) throw ConfigError("checkpoint: trailing bytes before checksum");
  return ckpt;
}

void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  const std::string bytes = SerializeCheckpoint(ckpt);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ConfigError("failed writing '" + path + "'");
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return DeserializeCheckpoint(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

uint32_t ParameterChecksum(const std::vector<const Parameter*>& params) {
  uLong crc = crc32(0L, Z_NULL, 0);
  for (const Parameter* p : params) {
    crc = crc32(crc, reinterpret_cast<const Bytef*>(p->value.data()),
                static_cast<uInt>(p->value.size() * sizeof(float)));
  }
  return static_cast<uint32_t>(crc);
}

void AddParameters(Checkpoint& ckpt, const std::vector<Parameter*>& params,
                   const std::string& prefix) {
  for (const Parameter* p : params) ckpt.Add(prefix + p->name, p->value);
}

void LoadParameters(const Checkpoint& ckpt, const std::vector<Parameter*>& params,
                    const std::string& prefix) {
  for (Parameter* p : params) {
    const Matrix& v = ckpt.Get(prefix + p->name);
    if (v.rows() != p->value.rows() || v.cols() != p->value.cols()) {
      throw ConfigError("checkpoint: tensor '" + prefix + p->name + "' has shape " +
                        std::to_string(v.rows()) + "x" + std::to_string(v.cols()) +
                        ", expected " + std::to_string(p->value.rows()) + "x" +
                        std::to_string(p->value.cols()));
    }
    p->value = v;
    p->ZeroGrad();
    p->MarkUpdated();
  }
}

}  // namespace dynaware::nn
