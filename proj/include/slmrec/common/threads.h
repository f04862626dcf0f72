// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>

namespace slmrec {

// Worker count: SLMREC_THREADS when set to a positive integer, otherwise the
// hardware concurrency (at least 1).
int thread_count();

// Runs fn(i) for i in [0, n) on up to thread_count() threads. Work is split
// into contiguous chunks; the first exception thrown is rethrown.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace slmrec
