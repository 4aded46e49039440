// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#include <cmath>
#include <cstdio>

#include "aiql/parser.hpp"

namespace aiql {

namespace {

std::string kind_keyword(EntityKind k) {
  switch (k) {
    case EntityKind::File: return "file";
    case EntityKind::Process: return "proc";
    case EntityKind::NetChannel: return "ip";
  }
  return "?";
}

std::string entity(const EntityPattern& p) {
  std::string out = kind_keyword(p.kind) + " " + p.var;
  if (!p.predicate.is_true()) out += "[" + to_source(p.predicate) + "]";
  return out;
}

std::string ops(OpSet set) {
  std::string out;
  for (Operation op : set.to_vector()) {
    if (!out.empty()) out += " || ";
    out += to_string(op);
  }
  return out;
}

std::string duration(Timestamp ms) {
  static const std::pair<Timestamp, const char*> kUnits[] = {
      {kMillisPerDay, "day"}, {3'600'000, "hour"}, {60'000, "min"}, {1000, "sec"}};
  for (const auto& [size, name] : kUnits) {
    if (ms % size == 0) return std::to_string(ms / size) + " " + name;
  }
  return std::to_string(ms / 1000) + " sec";
}

std::string number(double v) {
  char buf[64];
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 9e15) {
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
  } else {
    std::snprintf(buf, sizeof buf, "%.17g", v);
  }
  return buf;
}

int precedence(const Expr& e) {
  if (e.kind != Expr::Kind::Binary) return 6;
  switch (e.op) {
    case Expr::Op::Or: return 1;
    case Expr::Op::And: return 2;
    case Expr::Op::Lt:
    case Expr::Op::Le:
    case Expr::Op::Gt:
    case Expr::Op::Ge:
    case Expr::Op::Eq:
    case Expr::Op::Ne: return 3;
    case Expr::Op::Add:
    case Expr::Op::Sub: return 4;
    case Expr::Op::Mul:
    case Expr::Op::Div: return 5;
  }
  return 6;
}

std::string expr(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Number: return number(e.number);
    case Expr::Kind::Ref: return e.history ? e.name + "[" + std::to_string(e.history) + "]" : e.name;
    case Expr::Kind::Binary: break;
  }
  const int prec = precedence(e);
  // Comparisons do not chain, so either side at the same level needs parentheses.
  const bool non_assoc = prec == 3;
  auto side = [&](const Expr& child, bool right) {
    int cp = precedence(child);
    bool wrap = cp < prec || (cp == prec && (right || non_assoc));
    return wrap ? "(" + expr(child) + ")" : expr(child);
  };
  return side(e.operands[0], false) + " " + std::string(to_string(e.op)) + " " + side(e.operands[1], true);
}

std::string return_clause(const ReturnClause& r) {
  std::string out = "return ";
  if (r.distinct) out += "distinct ";
  for (std::size_t i = 0; i < r.items.size(); ++i) {
    const auto& item = r.items[i];
    if (i) out += ", ";
    switch (item.kind) {
      case ReturnItem::Kind::Var: out += item.var; break;
      case ReturnItem::Kind::Attribute: out += item.var + "." + item.attribute; break;
      case ReturnItem::Kind::Aggregate:
        out += std::string(to_string(item.fn)) + "(" + item.var;
        if (!item.attribute.empty()) out += "." + item.attribute;
        out += ") as " + item.output;
        break;
    }
  }
  return out;
}

std::string event(const EventPattern& ev) {
  return entity(ev.subject) + " " + ops(ev.ops) + " " + entity(ev.object) + " as " + ev.alias;
}

}  // namespace

std::string format_ast(const QueryAst& ast) {
  std::string out;
  if (const auto& t = ast.globals.time) {
    if (floor_div(t->lo, kMillisPerDay) * kMillisPerDay == t->lo && t->hi - t->lo == kMillisPerDay) {
      out += "(at \"" + format_date(t->lo) + "\")\n";
    } else {
      out += "(from \"" + std::to_string(t->lo) + "\" to \"" + std::to_string(t->hi) + "\")\n";
    }
  }
  if (const auto& agents = ast.globals.agents) {
    if (agents->size() == 1) {
      out += "agentid = " + std::to_string(agents->front()) + "\n";
    } else {
      out += "agentid = (";
      for (std::size_t i = 0; i < agents->size(); ++i) out += (i ? ", " : "") + std::to_string((*agents)[i]);
      out += ")\n";
    }
  }

  switch (ast.kind) {
    case QueryKind::Multievent:
      for (const auto& ev : ast.patterns) out += event(ev) + "\n";
      if (!ast.constraints.empty()) {
        out += "with ";
        for (std::size_t i = 0; i < ast.constraints.size(); ++i) {
          const auto& c = ast.constraints[i];
          if (i) out += ", ";
          out += c.left + (c.relation == TemporalRelation::Before ? " before " : " after ") + c.right;
        }
        out += "\n";
      }
      out += return_clause(ast.ret) + "\n";
      break;
    case QueryKind::Dependency: {
      const auto& path = *ast.path;
      out += path.direction == Direction::Forward ? "forward: " : "backward: ";
      out += entity(path.nodes.front());
      for (std::size_t i = 0; i < path.edges.size(); ++i) {
        const auto& edge = path.edges[i];
        out += std::string("\n  ") + (edge.arrow == Arrow::Left ? "<-[" : "->[") + ops(edge.ops) + "] " +
               entity(path.nodes[i + 1]);
      }
      out += "\n" + return_clause(ast.ret) + "\n";
      break;
    }
    case QueryKind::Anomaly: {
      const auto& a = *ast.anomaly;
      out += "window = " + duration(a.window_ms) + ", step = " + duration(a.step_ms) + "\n";
      out += event(a.pattern) + "\n";
      out += return_clause(ast.ret) + "\n";
      if (!a.group_by.empty()) {
        out += "group by ";
        for (std::size_t i = 0; i < a.group_by.size(); ++i) out += (i ? ", " : "") + a.group_by[i];
        out += "\n";
      }
      if (a.having) out += "having " + expr(*a.having) + "\n";
      break;
    }
  }
  return out;
}

}  // namespace aiql
