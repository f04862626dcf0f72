// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/model/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "slmrec/common/errors.h"
#include "slmrec/common/random.h"

namespace slmrec::model {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is written in host order");

constexpr const char* kMagic = "slmrec-tensors v1";

std::string payload_bytes(const Checkpoint& ckpt) {
  std::string out;
  for (const auto& [name, t] : ckpt.tensors) {
    const auto* p = reinterpret_cast<const char*>(t.data());
    out.append(p, static_cast<std::size_t>(t.numel()) * sizeof(float));
  }
  return out;
}

std::pair<std::string, std::string> split_pair(const std::string& text,
                                               const std::string& line) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) {
    throw FormatError("checkpoint header line without '=': " + line);
  }
  return {text.substr(0, eq), text.substr(eq + 1)};
}

}  // namespace

const Tensor<float>* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) {
      return &t;
    }
  }
  return nullptr;
}

const Tensor<float>& Checkpoint::require(const std::string& name,
                                         const Shape& shape) const {
  const Tensor<float>* t = find(name);
  if (t == nullptr) {
    throw FormatError("checkpoint lacks tensor '" + name + "'");
  }
  if (t->shape() != shape) {
    throw FormatError("tensor '" + name + "' has shape " +
                      shape_string(t->shape()) + ", expected " +
                      shape_string(shape));
  }
  return *t;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string payload = payload_bytes(ckpt);
  std::ostringstream header;
  header << kMagic << '\n';
  for (const auto& [k, v] : ckpt.config) {
    header << "config " << k << '=' << v << '\n';
  }
  for (const auto& [k, v] : ckpt.meta) {
    header << "meta " << k << '=' << v << '\n';
  }
  for (const auto& [name, t] : ckpt.tensors) {
    header << "tensor " << name << " f32";
    for (std::int64_t d : t.shape()) {
      header << ' ' << d;
    }
    header << '\n';
  }
  header << "checksum " << fmt::format("{:016x}", fnv1a64(payload)) << '\n';
  header << "end\n";

  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot write " + tmp.string());
    }
    const std::string h = header.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) {
      throw IoError("short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open checkpoint " + path.string());
  }
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw FormatError(path.string() + " is not a slmrec checkpoint");
  }
  Checkpoint ckpt;
  std::vector<std::pair<std::string, Shape>> layout;
  std::string checksum;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    const std::string rest = line.size() > kind.size() ? line.substr(kind.size() + 1) : "";
    if (kind == "config") {
      ckpt.config.push_back(split_pair(rest, line));
    } else if (kind == "meta") {
      ckpt.meta.insert(split_pair(rest, line));
    } else if (kind == "tensor") {
      std::string name, dtype;
      ls >> name >> dtype;
      if (dtype != "f32") {
        throw FormatError("unsupported dtype '" + dtype + "' for " + name);
      }
      Shape shape;
      std::int64_t d = 0;
      while (ls >> d) {
        shape.push_back(d);
      }
      layout.emplace_back(name, shape);
    } else if (kind == "checksum") {
      ls >> checksum;
    } else {
      throw FormatError("unknown checkpoint header line: " + line);
    }
  }
  if (!ended) {
    throw FormatError(path.string() + ": header not terminated");
  }
  for (auto& [name, shape] : layout) {
    Tensor<float> t(shape);
    const auto bytes = static_cast<std::streamsize>(t.numel() * sizeof(float));
    in.read(reinterpret_cast<char*>(t.data()), bytes);
    if (in.gcount() != bytes) {
      throw FormatError(path.string() + ": payload truncated in " + name);
    }
    ckpt.tensors.emplace_back(name, std::move(t));
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw FormatError(path.string() + ": trailing bytes after payload");
  }
  const std::string actual = fmt::format("{:016x}", fnv1a64(payload_bytes(ckpt)));
  if (actual != checksum) {
    throw FormatError(path.string() + ": checksum mismatch (stored " + checksum +
                      ", computed " + actual + ")");
  }
  return ckpt;
}

Checkpoint to_checkpoint(const DecoderWeights<float>& weights) {
  Checkpoint ckpt;
  ckpt.config = weights.config.to_pairs();
  weights.visit([&](const std::string& name, const Tensor<float>& t, bool) {
    ckpt.tensors.emplace_back(name, t);
  });
  return ckpt;
}

DecoderWeights<float> weights_from_checkpoint(const Checkpoint& ckpt) {
  const ModelConfig config = ModelConfig::from_pairs(ckpt.config);
  // Same layout as a fresh model; every tensor is overwritten below.
  DecoderWeights<float> w;
  w.config = config;
  const std::int64_t d0 = config.id_dim;
  const std::int64_t d1 = config.hidden;
  const std::int64_t dff = config.resolved_ffn_dim();
  w.id_embedding = ckpt.require("id_embedding", {config.vocab(), d0});
  w.up_proj = ckpt.require("up_proj", {d0, d1});
  w.prefix = ckpt.require("prefix", {config.prefix_len, d1});
  for (std::int64_t i = 0; i < config.layers; ++i) {
    const std::string p = "layers." + std::to_string(i) + ".";
    LayerWeights<float> l;
    l.attn_norm = ckpt.require(p + "attn_norm", {d1});
    l.wq = ckpt.require(p + "wq", {d1, d1});
    l.wk = ckpt.require(p + "wk", {d1, d1});
    l.wv = ckpt.require(p + "wv", {d1, d1});
    l.wo = ckpt.require(p + "wo", {d1, d1});
    l.ffn_norm = ckpt.require(p + "ffn_norm", {d1});
    l.w_gate = ckpt.require(p + "w_gate", {d1, dff});
    l.w_up = ckpt.require(p + "w_up", {d1, dff});
    l.w_down = ckpt.require(p + "w_down", {dff, d1});
    w.layers.push_back(std::move(l));
  }
  w.final_norm = ckpt.require("final_norm", {d1});
  w.down_proj = ckpt.require("down_proj", {d1, d0});
  return w;
}

}  // namespace slmrec::model
