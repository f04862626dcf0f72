// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "slmrec/compute/tensor.h"
#include "slmrec/model/decoder.h"

namespace slmrec::model {

// Named float32 tensors plus the model config and free-form metadata.
//
// File layout: a text header
//   slmrec-tensors v1
//   config <key>=<value>        (zero or more)
//   meta <key>=<value>          (zero or more)
//   tensor <name> f32 <dims...> (one per tensor, in payload order)
//   checksum <fnv1a64 hex of the payload>
//   end
// followed by the little-endian float32 payload.
struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> config;
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;

  const Tensor<float>* find(const std::string& name) const;
  // Throws FormatError when absent or of a different shape.
  const Tensor<float>& require(const std::string& name, const Shape& shape) const;
};

// Written through a temporary file and renamed into place.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

// IoError when unreadable; FormatError on a bad header, truncated payload or
// checksum mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint to_checkpoint(const DecoderWeights<float>& weights);

// Rebuilds weights, checking every tensor's presence and shape.
DecoderWeights<float> weights_from_checkpoint(const Checkpoint& ckpt);

}  // namespace slmrec::model
