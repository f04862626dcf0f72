// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/distill/block_map.h"

#include <string>

#include "slmrec/common/errors.h"

namespace slmrec::distill {

BlockMap make_block_map(std::int64_t teacher_layers, std::int64_t student_layers,
                        std::int64_t blocks) {
  if (blocks < 1) {
    throw ConfigError("block count must be >= 1, got " + std::to_string(blocks));
  }
  if (teacher_layers < 1 || student_layers < 1) {
    throw ConfigError("layer counts must be >= 1");
  }
  if (teacher_layers % blocks != 0) {
    throw ConfigError("teacher layers " + std::to_string(teacher_layers) +
                      " not divisible by blocks " + std::to_string(blocks));
  }
  if (student_layers % blocks != 0) {
    throw ConfigError("student layers " + std::to_string(student_layers) +
                      " not divisible by blocks " + std::to_string(blocks));
  }
  BlockMap map;
  map.teacher_layers = teacher_layers;
  map.student_layers = student_layers;
  map.blocks = blocks;
  map.teacher_group = teacher_layers / blocks;
  map.student_group = student_layers / blocks;
  for (std::int64_t k = 1; k <= blocks; ++k) {
    map.teacher_taps.push_back(k * map.teacher_group);
    map.student_taps.push_back(k * map.student_group);
  }
  return map;
}

}  // namespace slmrec::distill
