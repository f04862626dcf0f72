// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace slmrec::distill {

// Alignment of teacher and student layers: the teacher's layers are grouped
// every m and the student's every n, giving B blocks whose outputs are
// compared.
struct BlockMap {
  std::int64_t teacher_layers = 0;  // M
  std::int64_t student_layers = 0;  // N
  std::int64_t blocks = 0;          // B
  std::int64_t teacher_group = 0;   // m = M / B
  std::int64_t student_group = 0;   // n = N / B
  std::vector<std::int64_t> teacher_taps;  // m, 2m, ..., Bm
  std::vector<std::int64_t> student_taps;  // n, 2n, ..., Bn

  bool operator==(const BlockMap&) const = default;
};

// Throws ConfigError naming the offending pair when B does not divide M or N.
BlockMap make_block_map(std::int64_t teacher_layers, std::int64_t student_layers,
                        std::int64_t blocks);

}  // namespace slmrec::distill
