// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/cli/commands.h"
#include "slmrec/common/alloc.h"

int main(int argc, char** argv) {
  slmrec::tune_allocator();
  return slmrec::cli::run(argc, argv);
}
