// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end:
//   metaconcept [--config FILE] [--set key=value]... <command>
//   gen-data | train | eval | inspect-graph | ablate <sweep>
// Exit codes: 0 success, 1 other failure, 2 configuration error, 3 data
// error, 4 non-finite values during training or evaluation.

#pragma once

#include <iosfwd>

namespace metaconcept {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitData = 3,
    kExitNumerical = 4,
};

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace metaconcept
