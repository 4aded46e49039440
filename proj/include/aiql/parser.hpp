// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aiql/ast.hpp"
#include "aiql/lexer.hpp"

namespace aiql {

struct ParseResult {
  std::optional<QueryAst> ast;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return ast.has_value(); }
};

/// Parses and validates one AIQL query. Either returns an AST or every
/// diagnostic found (syntax errors are recovered from at statement
/// granularity so later lines are still checked).
ParseResult parse(std::string_view source);

/// Diagnostics only; empty iff parse() succeeds.
std::vector<Diagnostic> check(std::string_view source);

/// Canonical source text; parse(format_ast(a)) == a.
std::string format_ast(const QueryAst& ast);

/// Epoch milliseconds of 00:00 UTC on the given civil date.
Timestamp utc_day_start(int year, unsigned month, unsigned day);

/// Parses "MM/DD/YYYY", "MM/DD/YYYY HH:MM:SS" or a decimal epoch-ms string.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// "MM/DD/YYYY" of the UTC day containing `ts`.
std::string format_date(Timestamp ts);

}  // namespace aiql
