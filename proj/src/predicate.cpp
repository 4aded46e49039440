// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#include "aiql/predicate.hpp"

namespace aiql {

std::string_view to_string(Comparator cmp) {
  switch (cmp) {
    case Comparator::Eq: return "=";
    case Comparator::Ne: return "!=";
    case Comparator::Lt: return "<";
    case Comparator::Le: return "<=";
    case Comparator::Gt: return ">";
    case Comparator::Ge: return ">=";
    case Comparator::Like: return "like";
  }
  return "?";
}

namespace {

// Nested nodes of the same connective are spliced into the parent so that
// equal formulas have one canonical shape.
std::vector<Predicate> flatten(std::vector<Predicate> parts, Predicate::Kind kind) {
  std::vector<Predicate> out;
  for (auto& p : parts) {
    if (p.kind == kind) {
      for (auto& c : p.children) out.push_back(std::move(c));
    } else {
      out.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace

Predicate Predicate::all_of(std::vector<Predicate> parts) {
  parts = flatten(std::move(parts), Kind::And);
  std::erase_if(parts, [](const Predicate& p) { return p.is_true(); });
  if (parts.empty()) return always();
  if (parts.size() == 1) return std::move(parts.front());
  Predicate p;
  p.kind = Kind::And;
  p.children = std::move(parts);
  return p;
}

Predicate Predicate::any_of(std::vector<Predicate> parts) {
  parts = flatten(std::move(parts), Kind::Or);
  if (parts.empty()) return always();
  for (const auto& part : parts)
    if (part.is_true()) return always();
  if (parts.size() == 1) return std::move(parts.front());
  Predicate p;
  p.kind = Kind::Or;
  p.children = std::move(parts);
  return p;
}

bool like_match(std::string_view text, std::string_view pattern) {
  // Greedy wildcard matching with backtracking to the last `%`.
  std::size_t t = 0, p = 0;
  std::size_t star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && pattern[p] == '%') {
      star = p++;
      mark = t;
    } else if (p < pattern.size() && pattern[p] == text[t]) {
      ++p;
      ++t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '%') ++p;
  return p == pattern.size();
}

namespace {

template <typename T>
bool apply(const T& a, Comparator cmp, const T& b) {
  switch (cmp) {
    case Comparator::Eq: return a == b;
    case Comparator::Ne: return a != b;
    case Comparator::Lt: return a < b;
    case Comparator::Le: return a <= b;
    case Comparator::Gt: return a > b;
    case Comparator::Ge: return a >= b;
    case Comparator::Like: return false;
  }
  return false;
}

}  // namespace

bool compare_values(const Value& actual, Comparator cmp, const Value& literal) {
  if (cmp == Comparator::Like) return like_match(value_to_string(actual), value_to_string(literal));
  const auto* a = std::get_if<std::int64_t>(&actual);
  const auto* b = std::get_if<std::int64_t>(&literal);
  if (a && b) return apply(*a, cmp, *b);
  return apply(value_to_string(actual), cmp, value_to_string(literal));
}

bool evaluate(const Atom& atom, const Entity& entity) {
  auto v = entity.attribute(atom.attribute);
  return v && compare_values(*v, atom.cmp, atom.literal);
}

bool evaluate(const Predicate& pred, const Entity& entity) {
  switch (pred.kind) {
    case Predicate::Kind::True: return true;
    case Predicate::Kind::Atom: return evaluate(pred.atom, entity);
    case Predicate::Kind::And:
      for (const auto& c : pred.children)
        if (!evaluate(c, entity)) return false;
      return true;
    case Predicate::Kind::Or:
      for (const auto& c : pred.children)
        if (evaluate(c, entity)) return true;
      return false;
  }
  return false;
}

void collect_atoms(const Predicate& pred, std::vector<const Atom*>& out) {
  if (pred.kind == Predicate::Kind::Atom) out.push_back(&pred.atom);
  for (const auto& c : pred.children) collect_atoms(c, out);
}

std::string literal_to_source(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  std::string out = "\"";
  for (char c : std::get<std::string>(v)) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

namespace {

std::string render(const Predicate& pred, bool parenthesize_or) {
  switch (pred.kind) {
    case Predicate::Kind::True: return "";
    case Predicate::Kind::Atom:
      return pred.atom.attribute + " " + std::string(to_string(pred.atom.cmp)) + " " +
             literal_to_source(pred.atom.literal);
    case Predicate::Kind::And: {
      std::string out;
      for (std::size_t i = 0; i < pred.children.size(); ++i) {
        if (i) out += " && ";
        out += render(pred.children[i], true);
      }
      return out;
    }
    case Predicate::Kind::Or: {
      std::string out;
      for (std::size_t i = 0; i < pred.children.size(); ++i) {
        if (i) out += " || ";
        out += render(pred.children[i], true);
      }
      return parenthesize_or ? "(" + out + ")" : out;
    }
  }
  return "";
}

}  // namespace

std::string to_source(const Predicate& pred) { return render(pred, false); }

}  // namespace aiql
