#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "distillery/nn/tensor.hpp"

namespace distillery::nn {

// Single-file container: 8-byte magic, little-endian u64 header length, a JSON
// header (kind, metadata, tensor directory with layer specs and payload
// offsets), then all tensor payloads as raw little-endian doubles. The header
// JSON is dumped with sorted keys, so load followed by save reproduces the
// file byte for byte.

inline constexpr char kCheckpointMagic[8] = {'D', 'S', 'T', 'L', 'C', 'K', 'P', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointTensor {
  std::string name;
  LayerSpec spec;
  std::vector<std::size_t> shape;
  std::vector<double> data;
};

struct Checkpoint {
  std::string kind;
  nlohmann::json meta;
  std::vector<CheckpointTensor> tensors;

  const CheckpointTensor& tensor(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return t;
    throw IoError("checkpoint: missing tensor " + name);
  }

  void load_into(Tensor<double>& dst) const {
    const CheckpointTensor& src = tensor(dst.name);
    if (src.shape != dst.shape)
      throw IoError("checkpoint: shape mismatch for tensor " + dst.name);
    dst.v = src.data;
    dst.zero_grad();
  }
};

inline void save_checkpoint(const std::filesystem::path& path, const std::string& kind,
                            const nlohmann::json& meta,
                            const std::vector<const Tensor<double>*>& tensors) {
  nlohmann::json dir = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const Tensor<double>* t : tensors) {
    dir.push_back({{"name", t->name},
                   {"layer",
                    {{"kind", to_string(t->spec.kind)},
                     {"input_dim", t->spec.input_dim},
                     {"output_dim", t->spec.output_dim}}},
                   {"shape", t->shape},
                   {"offset", offset},
                   {"count", t->size()}});
    offset += t->size();
  }
  nlohmann::json header = {{"format_version", kCheckpointVersion},
                           {"kind", kind},
                           {"meta", meta},
                           {"tensors", dir}};
  const std::string hs = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("checkpoint: cannot open " + path.string() + " for writing");
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint64_t hlen = hs.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const Tensor<double>* t : tensors)
    out.write(reinterpret_cast<const char*>(t->v.data()),
              static_cast<std::streamsize>(t->size() * sizeof(double)));
  if (!out) throw IoError("checkpoint: write failed for " + path.string());
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::vector<Tensor<double>> owned;
  owned.reserve(ckpt.tensors.size());
  for (const auto& t : ckpt.tensors) {
    Tensor<double> tt(t.name, t.spec, t.shape);
    tt.v = t.data;
    owned.push_back(std::move(tt));
  }
  std::vector<const Tensor<double>*> refs;
  refs.reserve(owned.size());
  for (const auto& t : owned) refs.push_back(&t);
  save_checkpoint(path, ckpt.kind, ckpt.meta, refs);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw IoError("checkpoint: bad magic in " + path.string());
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!in || hlen == 0 || hlen > (1ull << 30))
    throw IoError("checkpoint: bad header length in " + path.string());
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw IoError("checkpoint: truncated header in " + path.string());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hs);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint: malformed header in " + path.string() + ": " + e.what());
  }
  if (header.value("format_version", 0u) != kCheckpointVersion)
    throw IoError("checkpoint: unsupported format version in " + path.string());

  Checkpoint ckpt;
  ckpt.kind = header.at("kind").get<std::string>();
  ckpt.meta = header.at("meta");
  std::uint64_t expect_offset = 0;
  for (const auto& entry : header.at("tensors")) {
    CheckpointTensor t;
    t.name = entry.at("name").get<std::string>();
    const auto& layer = entry.at("layer");
    t.spec.kind = layer_kind_from_string(layer.at("kind").get<std::string>());
    t.spec.input_dim = layer.at("input_dim").get<std::size_t>();
    t.spec.output_dim = layer.at("output_dim").get<std::size_t>();
    t.spec.validate();
    t.shape = entry.at("shape").get<std::vector<std::size_t>>();
    const auto count = entry.at("count").get<std::uint64_t>();
    std::size_t expect = 1;
    for (std::size_t d : t.shape) expect *= d;
    if (expect != count) throw IoError("checkpoint: shape/count mismatch for " + t.name);
    if (entry.at("offset").get<std::uint64_t>() != expect_offset)
      throw IoError("checkpoint: non-contiguous payload for " + t.name);
    expect_offset += count;
    t.data.resize(count);
    ckpt.tensors.push_back(std::move(t));
  }
  for (auto& t : ckpt.tensors) {
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!in) throw IoError("checkpoint: truncated payload in " + path.string());
  }
  return ckpt;
}

}  // namespace distillery::nn
