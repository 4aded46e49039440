// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aiql/event_model.hpp"
#include "aiql/predicate.hpp"

namespace aiql {

/// Source location of a node. Never takes part in AST equality, so a parsed
/// query and its re-parsed canonical text compare equal.
struct SourceSpan {
  std::uint32_t line = 1;
  std::uint32_t column = 1;
  std::uint32_t length = 0;

  friend bool operator==(const SourceSpan&, const SourceSpan&) { return true; }
};

/// `proc p1["%cmd.exe"]`. A bare string in brackets has already been
/// desugared to `<default attribute> like <string>`.
struct EntityPattern {
  std::string var;
  EntityKind kind = EntityKind::Process;
  Predicate predicate;
  SourceSpan span;

  friend bool operator==(const EntityPattern&, const EntityPattern&) = default;
};

/// `subject op1 || op2 object as alias`
struct EventPattern {
  EntityPattern subject;
  OpSet ops;
  EntityPattern object;
  std::string alias;
  SourceSpan span;

  friend bool operator==(const EventPattern&, const EventPattern&) = default;
};

enum class TemporalRelation : std::uint8_t { Before, After };

struct TemporalConstraint {
  std::string left;
  TemporalRelation relation = TemporalRelation::Before;
  std::string right;
  SourceSpan span;

  friend bool operator==(const TemporalConstraint&, const TemporalConstraint&) = default;
};

struct GlobalClause {
  std::optional<TimeRange> time;
  std::optional<std::vector<AgentId>> agents;

  friend bool operator==(const GlobalClause&, const GlobalClause&) = default;
};

enum class Arrow : std::uint8_t { Left, Right };  // `<-` and `->`
enum class Direction : std::uint8_t { Forward, Backward };

struct DependencyEdge {
  Arrow arrow = Arrow::Right;
  OpSet ops;
  SourceSpan span;

  friend bool operator==(const DependencyEdge&, const DependencyEdge&) = default;
};

/// `forward: n0 <-[op] n1 ->[op] n2 ...`; edges[i] joins nodes[i] and nodes[i+1].
struct DependencyPath {
  Direction direction = Direction::Forward;
  std::vector<EntityPattern> nodes;
  std::vector<DependencyEdge> edges;

  friend bool operator==(const DependencyPath&, const DependencyPath&) = default;
};

enum class AggregateFn : std::uint8_t { Avg, Sum, Count, Min, Max };

std::string_view to_string(AggregateFn fn);

struct ReturnItem {
  enum class Kind : std::uint8_t { Var, Attribute, Aggregate };

  Kind kind = Kind::Var;
  std::string var;        // entity var or event alias
  std::string attribute;  // Kind::Attribute, or the aggregate argument (may be empty for count)
  AggregateFn fn = AggregateFn::Count;
  std::string output;     // Kind::Aggregate: `as <output>`
  SourceSpan span;

  friend bool operator==(const ReturnItem&, const ReturnItem&) = default;
};

struct ReturnClause {
  bool distinct = false;
  std::vector<ReturnItem> items;

  friend bool operator==(const ReturnClause&, const ReturnClause&) = default;
};

/// Arithmetic/boolean expression of a having clause.
struct Expr {
  enum class Kind : std::uint8_t { Number, Ref, Binary };
  enum class Op : std::uint8_t { Add, Sub, Mul, Div, Lt, Le, Gt, Ge, Eq, Ne, And, Or };

  Kind kind = Kind::Number;
  double number = 0.0;
  std::string name;          // Kind::Ref: aggregate output name
  std::uint32_t history = 0; // Kind::Ref: `name[k]`, 0 is the current window
  Op op = Op::Add;
  std::vector<Expr> operands;  // Kind::Binary: exactly two
  SourceSpan span;

  friend bool operator==(const Expr&, const Expr&) = default;
};

std::string_view to_string(Expr::Op op);

struct AnomalyClause {
  Timestamp window_ms = 0;
  Timestamp step_ms = 0;
  EventPattern pattern;
  std::vector<std::string> group_by;
  std::optional<Expr> having;

  friend bool operator==(const AnomalyClause&, const AnomalyClause&) = default;
};

enum class QueryKind : std::uint8_t { Multievent, Dependency, Anomaly };

std::string_view to_string(QueryKind kind);

struct QueryAst {
  QueryKind kind = QueryKind::Multievent;
  GlobalClause globals;
  std::vector<EventPattern> patterns;            // multievent
  std::vector<TemporalConstraint> constraints;   // multievent
  std::optional<DependencyPath> path;            // dependency
  std::optional<AnomalyClause> anomaly;          // anomaly
  ReturnClause ret;

  friend bool operator==(const QueryAst&, const QueryAst&) = default;
};

/// Event attributes addressable as `alias.attr`.
bool is_event_attribute(std::string_view name);

/// Whether the left node of a path edge is the acting process. `A <-[op] B`
/// makes B the subject and `A ->[op] B` makes A the subject, except that the
/// roles swap when the preferred subject is not a process. nullopt when
/// neither endpoint is a process.
std::optional<bool> edge_subject_is_left(EntityKind left, Arrow arrow, EntityKind right);

}  // namespace aiql
