// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace aiql {

enum class Severity : std::uint8_t { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string message;
  std::uint32_t line = 1;    // 1-based
  std::uint32_t column = 1;  // 1-based, in bytes
  std::uint32_t length = 0;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

/// `{severity, message, line, col, len}`
nlohmann::json to_json(const Diagnostic& d);
nlohmann::json to_json(const std::vector<Diagnostic>& ds);

enum class TokenKind : std::uint8_t { Keyword, Identifier, String, Number, Punct, End };

std::string_view to_string(TokenKind kind);

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;  // unescaped contents for strings
  std::uint32_t line = 1;
  std::uint32_t column = 1;
  std::uint32_t length = 0;  // source bytes, including quotes

  bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
  bool is_keyword(std::string_view t) const { return is(TokenKind::Keyword, t); }
  bool is_punct(std::string_view t) const { return is(TokenKind::Punct, t); }
};

bool is_keyword(std::string_view word);

struct TokenStream {
  std::vector<Token> tokens;  // always ends with one End token
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return diagnostics.empty(); }
};

/// Splits AIQL source into tokens; `//` comments are dropped. Lexing
/// continues past bad input so every problem is reported.
TokenStream tokenize(std::string_view source);

}  // namespace aiql
