// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#include "aiql/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace aiql {

namespace {

constexpr std::array<std::string_view, 38> kKeywords = {
    "proc",  "file",   "ip",      "as",       "with",    "before",  "after",  "return",
    "distinct", "forward", "backward", "window", "step",  "group",   "by",     "having",
    "at",    "from",   "to",      "agentid",  "like",    "read",    "write",  "execute",
    "start", "end",    "rename",  "delete",   "connect", "accept",  "avg",    "sum",
    "count", "min",    "max",     "sec",      "hour",    "day"};

// Two-character punctuators first so that maximal munch applies.
constexpr std::array<std::string_view, 8> kPunct2 = {"!=", "<=", ">=", "&&", "||", "->", "<-", "=="};
constexpr std::string_view kPunct1 = "()[],.=<>:+-*/";

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Keyword: return "keyword";
    case TokenKind::Identifier: return "identifier";
    case TokenKind::String: return "string";
    case TokenKind::Number: return "number";
    case TokenKind::Punct: return "punct";
    case TokenKind::End: return "end";
  }
  return "?";
}

nlohmann::json to_json(const Diagnostic& d) {
  return {{"severity", d.severity == Severity::Error ? "error" : "warning"},
          {"message", d.message},
          {"line", d.line},
          {"col", d.column},
          {"len", d.length}};
}

nlohmann::json to_json(const std::vector<Diagnostic>& ds) {
  auto arr = nlohmann::json::array();
  for (const auto& d : ds) arr.push_back(to_json(d));
  return arr;
}

TokenStream tokenize(std::string_view src) {
  TokenStream out;
  std::size_t i = 0;
  std::uint32_t line = 1, col = 1;
  std::uint32_t last_line = 1, last_col = 1;  // position of the final byte

  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      last_line = line;
      last_col = col;
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto push = [&](TokenKind kind, std::string text, std::uint32_t l, std::uint32_t c, std::size_t len) {
    out.tokens.push_back({kind, std::move(text), l, c, static_cast<std::uint32_t>(len)});
  };

  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    const std::uint32_t l = line, cl = col;
    const std::size_t begin = i;

    if (c == '"') {
      std::string text;
      advance(1);
      bool closed = false;
      while (i < src.size() && src[i] != '\n') {
        if (src[i] == '\\' && i + 1 < src.size() && (src[i + 1] == '"' || src[i + 1] == '\\')) {
          text += src[i + 1];
          advance(2);
          continue;
        }
        if (src[i] == '"') {
          closed = true;
          advance(1);
          break;
        }
        text += src[i];
        advance(1);
      }
      if (!closed) {
        out.diagnostics.push_back({Severity::Error, "unterminated string", l, cl,
                                   static_cast<std::uint32_t>(i - begin)});
        continue;
      }
      push(TokenKind::String, std::move(text), l, cl, i - begin);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance(1);
      if (i + 1 < src.size() && src[i] == '.' && std::isdigit(static_cast<unsigned char>(src[i + 1]))) {
        advance(1);
        while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance(1);
      }
      push(TokenKind::Number, std::string(src.substr(begin, i - begin)), l, cl, i - begin);
      continue;
    }
    if (ident_start(c)) {
      while (i < src.size() && ident_char(src[i])) advance(1);
      std::string word(src.substr(begin, i - begin));
      const TokenKind kind = is_keyword(word) ? TokenKind::Keyword : TokenKind::Identifier;
      push(kind, std::move(word), l, cl, i - begin);
      continue;
    }
    bool matched = false;
    for (auto p : kPunct2) {
      if (src.substr(i, 2) == p) {
        advance(2);
        push(TokenKind::Punct, std::string(p), l, cl, 2);
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (kPunct1.find(c) != std::string_view::npos) {
      advance(1);
      push(TokenKind::Punct, std::string(1, c), l, cl, 1);
      continue;
    }
    // Consume a whole UTF-8 sequence so the column stays on a character boundary.
    std::size_t len = 1;
    auto uc = static_cast<unsigned char>(c);
    if (uc >= 0xC0) len = uc >= 0xF0 ? 4 : (uc >= 0xE0 ? 3 : 2);
    len = std::min(len, src.size() - i);
    std::string shown(src.substr(i, len));
    advance(len);
    out.diagnostics.push_back({Severity::Error, "illegal character '" + shown + "'", l, cl, 1});
  }
  if (out.tokens.empty()) {
    out.tokens.push_back({TokenKind::End, "", src.empty() ? 1u : last_line, src.empty() ? 1u : last_col, 0});
  } else {
    const Token& t = out.tokens.back();
    out.tokens.push_back({TokenKind::End, "", t.line, t.column, 0});
  }
  return out;
}

}  // namespace aiql
