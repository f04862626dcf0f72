// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace slmrec {

// Raises the glibc mmap and trim thresholds so per-step activation buffers
// are recycled from the heap instead of being mapped and faulted in again.
// No-op on other C libraries.
void tune_allocator();

}  // namespace slmrec
