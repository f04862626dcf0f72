// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace slmrec::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kTrainingError = 3 };

// Entry point of the slmrec binary. Never throws; errors go to stderr and
// are mapped to an ExitCode.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args[0] is the program name

}  // namespace slmrec::cli
