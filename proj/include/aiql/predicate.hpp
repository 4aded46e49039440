// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "aiql/event_model.hpp"

namespace aiql {

enum class Comparator : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge, Like };

std::string_view to_string(Comparator cmp);

/// `attribute <cmp> literal`, evaluated against one entity.
struct Atom {
  std::string attribute;
  Comparator cmp = Comparator::Eq;
  Value literal;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Conjunction/disjunction tree of atoms. A default-constructed predicate is
/// the constant `true`.
struct Predicate {
  enum class Kind : std::uint8_t { True, Atom, And, Or };

  Kind kind = Kind::True;
  aiql::Atom atom;
  std::vector<Predicate> children;

  static Predicate always() { return {}; }
  static Predicate of(aiql::Atom a) {
    Predicate p;
    p.kind = Kind::Atom;
    p.atom = std::move(a);
    return p;
  }
  static Predicate all_of(std::vector<Predicate> parts);
  static Predicate any_of(std::vector<Predicate> parts);

  bool is_true() const { return kind == Kind::True; }

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

/// Case-sensitive match where `%` matches any (possibly empty) run of
/// characters and every other character matches itself.
bool like_match(std::string_view text, std::string_view pattern);

/// Compares an attribute value against a literal. Integers compare
/// numerically; mixed or string operands compare as text.
bool compare_values(const Value& actual, Comparator cmp, const Value& literal);

/// A missing attribute never satisfies an atom, whatever the comparator.
bool evaluate(const Atom& atom, const Entity& entity);
bool evaluate(const Predicate& pred, const Entity& entity);

/// Every atom in the tree, depth first.
void collect_atoms(const Predicate& pred, std::vector<const Atom*>& out);

/// Renders in query syntax, e.g. `name like "%x%" && pid = 4`.
std::string to_source(const Predicate& pred);
std::string literal_to_source(const Value& v);

}  // namespace aiql
