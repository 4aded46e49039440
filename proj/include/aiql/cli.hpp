// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aiql {

/// Exit codes of the `aiql` tool.
enum ExitCode : int { kExitOk = 0, kExitDiagnostics = 1, kExitIoError = 2 };

/// Entry point of the `aiql` tool. `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace aiql
