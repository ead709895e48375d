// Copyright 2026 The synthaug Authors. All Rights Reserved.
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

#include "synthaug/numerics/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace synthaug::nn {

namespace {

constexpr char kMagic[8] = {'S', 'Y', 'N', 'C', 'K', 'P', 'T', '\0'};

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_str(std::vector<char>& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

void put_f32(std::vector<char>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  explicit Reader(const std::vector<char>& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(bytes_.begin() + pos_, bytes_.begin() + pos_ + n);
    pos_ += n;
    return s;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  void raw(char* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw CheckpointError("checkpoint truncated");
  }
  const std::vector<char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const std::string& Checkpoint::meta(const std::string& key) const {
  auto it = metadata.find(key);
  if (it == metadata.end()) throw CheckpointError("checkpoint lacks metadata key '" + key + "'");
  return it->second;
}

int Checkpoint::meta_int(const std::string& key) const { return std::stoi(meta(key)); }
double Checkpoint::meta_double(const std::string& key) const { return std::stod(meta(key)); }

Checkpoint make_checkpoint(const ParameterList& params, std::map<std::string, std::string> metadata) {
  Checkpoint ckpt;
  ckpt.metadata = std::move(metadata);
  for (const auto& p : params) ckpt.tensors.emplace_back(p.name, p.tensor.detach().to(Dtype::f32));
  return ckpt;
}

std::vector<char> serialize_checkpoint(const Checkpoint& ckpt) {
  std::vector<char> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, Checkpoint::kVersion);
  put_u32(out, static_cast<std::uint32_t>(ckpt.metadata.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    put_str(out, k);
    put_str(out, v);
  }
  put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    put_str(out, name);
    put_u32(out, static_cast<std::uint32_t>(t.ndim()));
    for (int d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (std::int64_t i = 0; i < t.numel(); ++i) put_f32(out, static_cast<float>(t.at(i)));
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::vector<char>& bytes) {
  Reader r(bytes);
  char magic[8];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw CheckpointError("not a synthaug checkpoint (bad magic)");
  const auto version = r.u32();
  if (version != Checkpoint::kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.str();
    ckpt.metadata[k] = r.str();
  }
  const auto n_param = r.u32();
  for (std::uint32_t i = 0; i < n_param; ++i) {
    std::string name = r.str();
    const auto ndim = r.u32();
    Shape shape;
    for (std::uint32_t d = 0; d < ndim; ++d) shape.push_back(static_cast<int>(r.u32()));
    std::vector<float> values(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& v : values) v = r.f32();
    ckpt.tensors.emplace_back(std::move(name), Tensor::from_vector(std::move(shape), std::move(values)));
  }
  if (!r.done()) throw CheckpointError("trailing bytes after checkpoint payload");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

void restore_parameters(const Checkpoint& ckpt, const ParameterList& params) {
  for (const auto& p : params) {
    const Tensor* src = nullptr;
    for (const auto& [name, t] : ckpt.tensors) {
      if (name == p.name) src = &t;
    }
    if (!src) throw CheckpointError("checkpoint is missing parameter '" + p.name + "'");
    if (src->shape() != p.tensor.shape()) {
      throw CheckpointError("parameter '" + p.name + "' has shape " + shape_str(src->shape()) + " in checkpoint, " +
                            shape_str(p.tensor.shape()) + " in network");
    }
    Tensor dst = p.tensor;
    for (std::int64_t i = 0; i < dst.numel(); ++i) dst.set(i, src->at(i));
  }
}

}  // namespace synthaug::nn
