// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#include "aiql/cli.hpp"

int main(int argc, char** argv) { return aiql::cli_main(argc, argv); }
