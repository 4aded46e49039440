// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#include "aiql/parser.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>

namespace aiql {

// --- small AST helpers --------------------------------------------------------

std::string_view to_string(AggregateFn fn) {
  switch (fn) {
    case AggregateFn::Avg: return "avg";
    case AggregateFn::Sum: return "sum";
    case AggregateFn::Count: return "count";
    case AggregateFn::Min: return "min";
    case AggregateFn::Max: return "max";
  }
  return "?";
}

std::string_view to_string(Expr::Op op) {
  switch (op) {
    case Expr::Op::Add: return "+";
    case Expr::Op::Sub: return "-";
    case Expr::Op::Mul: return "*";
    case Expr::Op::Div: return "/";
    case Expr::Op::Lt: return "<";
    case Expr::Op::Le: return "<=";
    case Expr::Op::Gt: return ">";
    case Expr::Op::Ge: return ">=";
    case Expr::Op::Eq: return "=";
    case Expr::Op::Ne: return "!=";
    case Expr::Op::And: return "&&";
    case Expr::Op::Or: return "||";
  }
  return "?";
}

std::string_view to_string(QueryKind kind) {
  switch (kind) {
    case QueryKind::Multievent: return "multievent";
    case QueryKind::Dependency: return "dependency";
    case QueryKind::Anomaly: return "anomaly";
  }
  return "?";
}

bool is_event_attribute(std::string_view name) {
  return name == "id" || name == "amount" || name == "start_ts" || name == "end_ts" || name == "agentid" ||
         name == "op" || name == "seq";
}

std::optional<bool> edge_subject_is_left(EntityKind left, Arrow arrow, EntityKind right) {
  const bool prefer_left = arrow == Arrow::Right;
  const EntityKind preferred = prefer_left ? left : right;
  const EntityKind other = prefer_left ? right : left;
  if (preferred == EntityKind::Process) return prefer_left;
  if (other == EntityKind::Process) return !prefer_left;
  return std::nullopt;
}

// --- time literals ------------------------------------------------------------

Timestamp utc_day_start(int year, unsigned month, unsigned day) {
  // Days from civil (proleptic Gregorian), Howard Hinnant's algorithm.
  year -= month <= 2;
  const int era = (year >= 0 ? year : year - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(year - era * 400);
  const unsigned doy = (153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  const std::int64_t days = static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
  return days * kMillisPerDay;
}

namespace {

bool parse_uint(std::string_view s, unsigned& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

unsigned days_in_month(int y, unsigned m) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return m == 2 && leap ? 29 : kDays[m - 1];
}

std::optional<Timestamp> parse_date(std::string_view s) {
  if (s.size() != 10 || s[2] != '/' || s[5] != '/') return std::nullopt;
  unsigned m = 0, d = 0, y = 0;
  if (!parse_uint(s.substr(0, 2), m) || !parse_uint(s.substr(3, 2), d) || !parse_uint(s.substr(6, 4), y))
    return std::nullopt;
  if (m < 1 || m > 12 || d < 1 || d > days_in_month(static_cast<int>(y), m)) return std::nullopt;
  return utc_day_start(static_cast<int>(y), m, d);
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view s) {
  if (!s.empty() && (std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '-') &&
      s.find('/') == std::string_view::npos && s.find(':') == std::string_view::npos) {
    Timestamp v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc{} && p == s.data() + s.size()) return v;
    return std::nullopt;
  }
  auto day = parse_date(s.substr(0, std::min<std::size_t>(10, s.size())));
  if (!day) return std::nullopt;
  if (s.size() == 10) return day;
  auto rest = s.substr(10);
  if (rest.size() != 9 || rest[0] != ' ' || rest[3] != ':' || rest[6] != ':') return std::nullopt;
  unsigned h = 0, mi = 0, se = 0;
  if (!parse_uint(rest.substr(1, 2), h) || !parse_uint(rest.substr(4, 2), mi) || !parse_uint(rest.substr(7, 2), se))
    return std::nullopt;
  if (h > 23 || mi > 59 || se > 59) return std::nullopt;
  return *day + (static_cast<Timestamp>(h) * 3600 + mi * 60 + se) * 1000;
}

std::string format_date(Timestamp ts) {
  // Civil from days, inverse of utc_day_start.
  std::int64_t z = floor_div(ts, kMillisPerDay) + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02u/%02u/%04lld", m, d, static_cast<long long>(y));
  return buf;
}

// --- parser -------------------------------------------------------------------

namespace {

struct SyntaxError {
  Diagnostic diag;
};

SourceSpan span_of(const Token& t) { return {t.line, t.column, t.length}; }

enum Phase : int { kGlobal = 0, kWindow, kBody, kWith, kReturn, kGroup, kHaving };

std::optional<Timestamp> unit_millis(std::string_view unit) {
  if (unit == "sec" || unit == "secs" || unit == "second" || unit == "seconds") return 1000;
  if (unit == "min" || unit == "mins" || unit == "minute" || unit == "minutes") return 60'000;
  if (unit == "hour" || unit == "hours") return 3'600'000;
  if (unit == "day" || unit == "days") return kMillisPerDay;
  return std::nullopt;
}

std::optional<AggregateFn> aggregate_fn(std::string_view name) {
  if (name == "avg") return AggregateFn::Avg;
  if (name == "sum") return AggregateFn::Sum;
  if (name == "count") return AggregateFn::Count;
  if (name == "min") return AggregateFn::Min;
  if (name == "max") return AggregateFn::Max;
  return std::nullopt;
}

std::string kind_keyword(EntityKind k) {
  switch (k) {
    case EntityKind::File: return "file";
    case EntityKind::Process: return "proc";
    case EntityKind::NetChannel: return "ip";
  }
  return "?";
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, bool lexical_errors)
      : toks_(std::move(tokens)), syntax_error_(lexical_errors) {}

  ParseResult run();

 private:
  // token access
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == TokenKind::End; }
  bool at_kw(std::string_view k) const { return peek().is_keyword(k); }
  bool at_punct(std::string_view p) const { return peek().is_punct(p); }
  bool accept_punct(std::string_view p) {
    if (!at_punct(p)) return false;
    next();
    return true;
  }

  [[noreturn]] void fail(const Token& t, std::string msg) {
    if (t.kind == TokenKind::End) {
      // Point at the last real token so the position lies inside the text.
      const Token& last = pos_ > 0 ? toks_[pos_ - 1] : t;
      throw SyntaxError{{Severity::Error, std::move(msg), last.line, last.column, last.length}};
    }
    throw SyntaxError{{Severity::Error, std::move(msg), t.line, t.column, t.length}};
  }
  std::string describe(const Token& t) const {
    if (t.kind == TokenKind::End) return "end of query";
    if (t.kind == TokenKind::String) return "string \"" + t.text + "\"";
    return "'" + t.text + "'";
  }
  const Token& expect_punct(std::string_view p) {
    if (!at_punct(p)) fail(peek(), "expected '" + std::string(p) + "' but found " + describe(peek()));
    return next();
  }
  const Token& expect_kw(std::string_view k) {
    if (!at_kw(k)) fail(peek(), "expected '" + std::string(k) + "' but found " + describe(peek()));
    return next();
  }
  const Token& expect_ident(std::string_view what) {
    if (peek().kind != TokenKind::Identifier) fail(peek(), "expected " + std::string(what) + " but found " + describe(peek()));
    return next();
  }
  /// Attribute names are identifiers, plus the `agentid` keyword.
  const Token& expect_name(std::string_view what) {
    if (peek().kind != TokenKind::Identifier && !at_kw("agentid"))
      fail(peek(), "expected " + std::string(what) + " but found " + describe(peek()));
    return next();
  }

  void error_at(const Token& t, std::string msg) {
    diags_.push_back({Severity::Error, std::move(msg), t.line, t.column, t.length});
  }
  void error_at(const SourceSpan& s, std::string msg) {
    diags_.push_back({Severity::Error, std::move(msg), s.line, s.column, s.length});
  }

  void enter_phase(int phase, const Token& t, bool repeatable) {
    if (phase < phase_ || (!repeatable && phase == phase_ && seen_phase_[phase])) {
      fail(t, "unexpected " + describe(t) + " here");
    }
    phase_ = phase;
    seen_phase_[phase] = true;
  }

  bool is_statement_start(std::size_t index) const {
    const Token& t = toks_[index];
    if (t.kind == TokenKind::End) return true;
    static const std::set<std::string_view> kStrong = {"with", "return", "group", "having", "window",
                                                       "forward", "backward"};
    if (t.kind == TokenKind::Keyword && kStrong.count(t.text)) return true;
    bool line_first = index == 0 || toks_[index - 1].line != t.line;
    if (!line_first) return false;
    return t.is_keyword("proc") || t.is_keyword("file") || t.is_keyword("ip") || t.is_keyword("agentid") ||
           t.is_punct("(");
  }

  void synchronize(std::size_t failed_at) {
    if (pos_ <= failed_at) next();
    while (!at_end() && !is_statement_start(pos_)) next();
  }

  // statements
  void parse_statement();
  void parse_global();
  void parse_window();
  void parse_path();
  void parse_event_statement();
  void parse_with();
  void parse_return();
  void parse_group();
  void parse_having();

  // pieces
  EntityPattern parse_entity();
  Predicate parse_pred_or(EntityKind kind);
  Predicate parse_pred_and(EntityKind kind);
  Predicate parse_pred_unary(EntityKind kind);
  Predicate parse_atom(EntityKind kind);
  OpSet parse_ops(std::vector<std::pair<Operation, Token>>& seen);
  Timestamp parse_duration();
  Expr parse_expr_or();
  Expr parse_expr_and();
  Expr parse_expr_cmp();
  Expr parse_expr_add();
  Expr parse_expr_mul();
  Expr parse_expr_primary();
  void register_var(const EntityPattern& p);
  void check_ops(const std::vector<std::pair<Operation, Token>>& ops, EntityKind object_kind);

  // validation
  void validate(QueryAst& ast, const Token& end_token);
  bool check_expr_types(const Expr& e, bool want_bool);

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<Diagnostic> diags_;
  bool syntax_error_ = false;

  int phase_ = kGlobal;
  bool seen_phase_[kHaving + 1] = {};

  GlobalClause globals_;
  bool seen_time_ = false, seen_agents_ = false;
  std::optional<std::pair<Timestamp, Timestamp>> window_;
  SourceSpan window_span_;
  std::optional<DependencyPath> path_;
  std::vector<EventPattern> patterns_;
  std::vector<TemporalConstraint> constraints_;
  std::optional<ReturnClause> ret_;
  std::vector<std::pair<std::string, SourceSpan>> group_by_;
  std::optional<Expr> having_;
  SourceSpan having_span_;
  std::vector<SourceSpan> right_spans_;

  std::map<std::string, std::pair<EntityKind, SourceSpan>> vars_;
};

ParseResult Parser::run() {
  while (!at_end()) {
    std::size_t start = pos_;
    std::size_t reported = diags_.size();
    try {
      parse_statement();
    } catch (const SyntaxError& e) {
      // Semantic complaints about a statement that does not parse are noise.
      diags_.resize(reported);
      diags_.push_back(e.diag);
      syntax_error_ = true;
      synchronize(start);
    }
  }
  QueryAst ast;
  if (!syntax_error_) validate(ast, peek());
  ParseResult result;
  if (diags_.empty()) {
    result.ast = std::move(ast);
  } else {
    std::stable_sort(diags_.begin(), diags_.end(), [](const Diagnostic& a, const Diagnostic& b) {
      return std::tie(a.line, a.column) < std::tie(b.line, b.column);
    });
    result.diagnostics = std::move(diags_);
  }
  return result;
}

void Parser::parse_statement() {
  const Token& t = peek();
  if (t.is_punct("(") || t.is_keyword("agentid")) return parse_global();
  if (t.is_keyword("window")) return parse_window();
  if (t.is_keyword("forward") || t.is_keyword("backward")) return parse_path();
  if (t.is_keyword("proc") || t.is_keyword("file") || t.is_keyword("ip")) return parse_event_statement();
  if (t.is_keyword("with")) return parse_with();
  if (t.is_keyword("return")) return parse_return();
  if (t.is_keyword("group")) return parse_group();
  if (t.is_keyword("having")) return parse_having();
  fail(t, "unexpected " + describe(t));
}

void Parser::parse_global() {
  enter_phase(kGlobal, peek(), true);
  if (at_kw("agentid")) {
    const Token& kw = next();
    if (seen_agents_) error_at(kw, "duplicate agentid constraint");
    seen_agents_ = true;
    expect_punct("=");
    std::vector<AgentId> agents;
    auto read_agent = [&] {
      const Token& n = peek();
      unsigned v = 0;
      if (n.kind != TokenKind::Number || !parse_uint(n.text, v)) fail(n, "expected agent id but found " + describe(n));
      next();
      agents.push_back(v);
    };
    if (accept_punct("(")) {
      read_agent();
      while (accept_punct(",")) read_agent();
      expect_punct(")");
    } else {
      read_agent();
    }
    std::sort(agents.begin(), agents.end());
    agents.erase(std::unique(agents.begin(), agents.end()), agents.end());
    globals_.agents = std::move(agents);
    return;
  }
  const Token& open = expect_punct("(");
  if (seen_time_) error_at(open, "duplicate time window");
  seen_time_ = true;
  if (at_kw("at")) {
    next();
    const Token& s = peek();
    if (s.kind != TokenKind::String) fail(s, "expected date string but found " + describe(s));
    next();
    auto day = parse_date(s.text);
    if (!day) {
      error_at(s, "invalid date \"" + s.text + "\" (expected MM/DD/YYYY)");
    } else {
      globals_.time = TimeRange{*day, *day + kMillisPerDay};
    }
  } else if (at_kw("from")) {
    next();
    const Token& a = peek();
    if (a.kind != TokenKind::String) fail(a, "expected timestamp string but found " + describe(a));
    next();
    expect_kw("to");
    const Token& b = peek();
    if (b.kind != TokenKind::String) fail(b, "expected timestamp string but found " + describe(b));
    next();
    auto lo = parse_timestamp(a.text);
    auto hi = parse_timestamp(b.text);
    if (!lo) error_at(a, "invalid timestamp \"" + a.text + "\"");
    if (!hi) error_at(b, "invalid timestamp \"" + b.text + "\"");
    if (lo && hi) {
      if (*lo >= *hi) {
        error_at(b, "time window is empty (end is not after start)");
      } else {
        globals_.time = TimeRange{*lo, *hi};
      }
    }
  } else {
    fail(peek(), "expected 'at' or 'from' but found " + describe(peek()));
  }
  expect_punct(")");
}

Timestamp Parser::parse_duration() {
  const Token& n = peek();
  unsigned v = 0;
  if (n.kind != TokenKind::Number || !parse_uint(n.text, v)) fail(n, "expected duration but found " + describe(n));
  next();
  const Token& u = peek();
  auto ms = (u.kind == TokenKind::Keyword || u.kind == TokenKind::Identifier) ? unit_millis(u.text) : std::nullopt;
  if (!ms) fail(u, "expected time unit (sec, min, hour, day) but found " + describe(u));
  next();
  if (v == 0) error_at(n, "duration must be positive");
  return static_cast<Timestamp>(v) * *ms;
}

void Parser::parse_window() {
  const Token& kw = peek();
  enter_phase(kWindow, kw, false);
  next();
  expect_punct("=");
  Timestamp window = parse_duration();
  expect_punct(",");
  expect_kw("step");
  expect_punct("=");
  Timestamp step = parse_duration();
  window_ = {window, step};
  window_span_ = span_of(kw);
}

void Parser::register_var(const EntityPattern& p) {
  auto [it, fresh] = vars_.try_emplace(p.var, p.kind, p.span);
  if (!fresh && it->second.first != p.kind) {
    error_at(p.span, "variable " + p.var + " redeclared as " + kind_keyword(p.kind) + " (was " +
                         kind_keyword(it->second.first) + ")");
  }
}

EntityPattern Parser::parse_entity() {
  const Token& k = peek();
  EntityPattern p;
  if (k.is_keyword("proc")) {
    p.kind = EntityKind::Process;
  } else if (k.is_keyword("file")) {
    p.kind = EntityKind::File;
  } else if (k.is_keyword("ip")) {
    p.kind = EntityKind::NetChannel;
  } else {
    fail(k, "expected entity type (proc, file or ip) but found " + describe(k));
  }
  next();
  const Token& v = expect_ident("variable name");
  p.var = v.text;
  p.span = span_of(v);
  if (accept_punct("[")) {
    if (at_punct("]")) fail(peek(), "empty constraint list");
    p.predicate = parse_pred_or(p.kind);
    expect_punct("]");
  }
  register_var(p);
  return p;
}

Predicate Parser::parse_pred_or(EntityKind kind) {
  std::vector<Predicate> parts{parse_pred_and(kind)};
  while (accept_punct("||")) parts.push_back(parse_pred_and(kind));
  return parts.size() == 1 ? std::move(parts.front()) : Predicate::any_of(std::move(parts));
}

Predicate Parser::parse_pred_and(EntityKind kind) {
  std::vector<Predicate> parts{parse_pred_unary(kind)};
  while (at_punct("&&") || at_punct(",")) {
    next();
    parts.push_back(parse_pred_unary(kind));
  }
  return parts.size() == 1 ? std::move(parts.front()) : Predicate::all_of(std::move(parts));
}

Predicate Parser::parse_pred_unary(EntityKind kind) {
  if (accept_punct("(")) {
    Predicate p = parse_pred_or(kind);
    expect_punct(")");
    return p;
  }
  return parse_atom(kind);
}

Predicate Parser::parse_atom(EntityKind kind) {
  const Token& first = peek();
  if (first.kind == TokenKind::String) {
    next();
    return Predicate::of({std::string(default_attribute(kind)), Comparator::Like, first.text});
  }
  const Token& name = expect_name("attribute name or string");
  std::string attr(canonical_attribute(name.text));
  auto known = known_attributes(kind);
  if (attr != "agentid" && attr != "id" && std::find(known.begin(), known.end(), attr) == known.end())
    error_at(name, "unknown attribute '" + name.text + "' for " + kind_keyword(kind));

  const Token& op = peek();
  Comparator cmp = Comparator::Eq;
  if (op.is_punct("=") || op.is_punct("==")) {
    cmp = Comparator::Eq;
  } else if (op.is_punct("!=")) {
    cmp = Comparator::Ne;
  } else if (op.is_punct("<")) {
    cmp = Comparator::Lt;
  } else if (op.is_punct("<=")) {
    cmp = Comparator::Le;
  } else if (op.is_punct(">")) {
    cmp = Comparator::Gt;
  } else if (op.is_punct(">=")) {
    cmp = Comparator::Ge;
  } else if (op.is_keyword("like")) {
    cmp = Comparator::Like;
  } else {
    fail(op, "expected comparison operator but found " + describe(op));
  }
  next();
  const Token& lit = peek();
  Value value;
  if (lit.kind == TokenKind::String) {
    value = lit.text;
  } else if (lit.kind == TokenKind::Number || (lit.is_punct("-") && peek(1).kind == TokenKind::Number)) {
    bool negative = lit.is_punct("-");
    if (negative) next();
    const Token& num = peek();
    std::int64_t n = 0;
    auto [p, ec] = std::from_chars(num.text.data(), num.text.data() + num.text.size(), n);
    if (ec != std::errc{} || p != num.text.data() + num.text.size()) fail(num, "expected integer literal");
    value = negative ? -n : n;
  } else {
    fail(lit, "expected literal but found " + describe(lit));
  }
  next();
  return Predicate::of({std::move(attr), cmp, std::move(value)});
}

OpSet Parser::parse_ops(std::vector<std::pair<Operation, Token>>& seen) {
  OpSet ops;
  do {
    const Token& t = peek();
    auto op = t.kind == TokenKind::Keyword ? parse_operation(t.text) : std::nullopt;
    if (!op) fail(t, "expected operation but found " + describe(t));
    next();
    ops.insert(*op);
    seen.emplace_back(*op, t);
  } while (accept_punct("||"));
  return ops;
}

void Parser::check_ops(const std::vector<std::pair<Operation, Token>>& ops, EntityKind object_kind) {
  for (const auto& [op, tok] : ops) {
    if (!op_compatible(op, object_kind))
      error_at(tok, "operation " + std::string(to_string(op)) + " is not compatible with " +
                        kind_keyword(object_kind) + " objects");
  }
}

void Parser::parse_event_statement() {
  const Token& start = peek();
  enter_phase(kBody, start, true);
  EventPattern ev;
  ev.subject = parse_entity();
  std::vector<std::pair<Operation, Token>> op_tokens;
  ev.ops = parse_ops(op_tokens);
  ev.object = parse_entity();
  expect_kw("as");
  const Token& alias = expect_ident("event alias");
  ev.alias = alias.text;
  ev.span = span_of(alias);
  if (ev.subject.kind != EntityKind::Process) error_at(ev.subject.span, "the subject of an event must be a process");
  check_ops(op_tokens, ev.object.kind);
  patterns_.push_back(std::move(ev));
}

void Parser::parse_path() {
  const Token& kw = peek();
  enter_phase(kBody, kw, false);
  if (path_) fail(kw, "only one dependency path per query");
  next();
  DependencyPath path;
  path.direction = kw.is_keyword("forward") ? Direction::Forward : Direction::Backward;
  expect_punct(":");
  path.nodes.push_back(parse_entity());
  while (at_punct("<-") || at_punct("->")) {
    const Token& arrow_tok = next();
    DependencyEdge edge;
    edge.arrow = arrow_tok.is_punct("<-") ? Arrow::Left : Arrow::Right;
    edge.span = span_of(arrow_tok);
    expect_punct("[");
    std::vector<std::pair<Operation, Token>> op_tokens;
    edge.ops = parse_ops(op_tokens);
    expect_punct("]");
    EntityPattern node = parse_entity();
    const EntityPattern& left = path.nodes.back();
    auto subject_left = edge_subject_is_left(left.kind, edge.arrow, node.kind);
    if (!subject_left) {
      error_at(arrow_tok, "edge between two non-process entities cannot be tracked");
    } else {
      check_ops(op_tokens, *subject_left ? node.kind : left.kind);
    }
    path.edges.push_back(edge);
    path.nodes.push_back(std::move(node));
  }
  if (path.edges.empty()) fail(peek(), "a dependency path needs at least one edge (<-[op] or ->[op])");
  path_ = std::move(path);
}

void Parser::parse_with() {
  const Token& kw = peek();
  enter_phase(kWith, kw, false);
  next();
  do {
    TemporalConstraint c;
    const Token& left = expect_ident("event alias");
    c.left = left.text;
    c.span = span_of(left);
    if (at_kw("before")) {
      c.relation = TemporalRelation::Before;
    } else if (at_kw("after")) {
      c.relation = TemporalRelation::After;
    } else {
      fail(peek(), "expected 'before' or 'after' but found " + describe(peek()));
    }
    next();
    const Token& right = expect_ident("event alias");
    c.right = right.text;
    SourceSpan right_span = span_of(right);
    if (c.relation == TemporalRelation::After) {
      std::swap(c.left, c.right);
      std::swap(c.span, right_span);
      c.relation = TemporalRelation::Before;
    }
    constraints_.push_back(std::move(c));
    right_spans_.push_back(right_span);
  } while (accept_punct(","));
}

void Parser::parse_return() {
  const Token& kw = peek();
  enter_phase(kReturn, kw, false);
  next();
  ReturnClause ret;
  if (at_kw("distinct")) {
    next();
    ret.distinct = true;
  }
  do {
    ReturnItem item;
    const Token& first = peek();
    auto fn = first.kind == TokenKind::Keyword ? aggregate_fn(first.text) : std::nullopt;
    if (fn && peek(1).is_punct("(")) {
      next();
      next();
      item.kind = ReturnItem::Kind::Aggregate;
      item.fn = *fn;
      item.span = span_of(first);
      item.var = expect_ident("event alias").text;
      if (accept_punct(".")) item.attribute = std::string(canonical_attribute(expect_name("attribute name").text));
      expect_punct(")");
      expect_kw("as");
      item.output = expect_ident("aggregate name").text;
    } else {
      const Token& v = expect_ident("variable or aggregate");
      item.var = v.text;
      item.span = span_of(v);
      if (accept_punct(".")) {
        item.kind = ReturnItem::Kind::Attribute;
        item.attribute = std::string(canonical_attribute(expect_name("attribute name").text));
      }
    }
    ret.items.push_back(std::move(item));
  } while (accept_punct(","));
  ret_ = std::move(ret);
}

void Parser::parse_group() {
  const Token& kw = peek();
  enter_phase(kGroup, kw, false);
  next();
  expect_kw("by");
  do {
    const Token& v = expect_ident("variable");
    group_by_.emplace_back(v.text, span_of(v));
  } while (accept_punct(","));
}

void Parser::parse_having() {
  const Token& kw = peek();
  enter_phase(kHaving, kw, false);
  next();
  having_ = parse_expr_or();
  having_span_ = span_of(kw);
}

Expr make_binary(Expr::Op op, Expr lhs, Expr rhs, const Token& t) {
  Expr e;
  e.kind = Expr::Kind::Binary;
  e.op = op;
  e.span = span_of(t);
  e.operands.push_back(std::move(lhs));
  e.operands.push_back(std::move(rhs));
  return e;
}

Expr Parser::parse_expr_or() {
  Expr lhs = parse_expr_and();
  while (at_punct("||")) {
    const Token& t = next();
    lhs = make_binary(Expr::Op::Or, std::move(lhs), parse_expr_and(), t);
  }
  return lhs;
}

Expr Parser::parse_expr_and() {
  Expr lhs = parse_expr_cmp();
  while (at_punct("&&")) {
    const Token& t = next();
    lhs = make_binary(Expr::Op::And, std::move(lhs), parse_expr_cmp(), t);
  }
  return lhs;
}

Expr Parser::parse_expr_cmp() {
  Expr lhs = parse_expr_add();
  static const std::pair<std::string_view, Expr::Op> kCmp[] = {
      {"<", Expr::Op::Lt}, {"<=", Expr::Op::Le}, {">", Expr::Op::Gt}, {">=", Expr::Op::Ge},
      {"=", Expr::Op::Eq}, {"==", Expr::Op::Eq}, {"!=", Expr::Op::Ne}};
  for (const auto& [text, op] : kCmp) {
    if (at_punct(text)) {
      const Token& t = next();
      return make_binary(op, std::move(lhs), parse_expr_add(), t);
    }
  }
  return lhs;
}

Expr Parser::parse_expr_add() {
  Expr lhs = parse_expr_mul();
  while (at_punct("+") || at_punct("-")) {
    const Token& t = next();
    lhs = make_binary(t.text == "+" ? Expr::Op::Add : Expr::Op::Sub, std::move(lhs), parse_expr_mul(), t);
  }
  return lhs;
}

Expr Parser::parse_expr_mul() {
  Expr lhs = parse_expr_primary();
  while (at_punct("*") || at_punct("/")) {
    const Token& t = next();
    lhs = make_binary(t.text == "*" ? Expr::Op::Mul : Expr::Op::Div, std::move(lhs), parse_expr_primary(), t);
  }
  return lhs;
}

Expr Parser::parse_expr_primary() {
  const Token& t = peek();
  if (accept_punct("(")) {
    Expr e = parse_expr_or();
    expect_punct(")");
    return e;
  }
  Expr e;
  e.span = span_of(t);
  if (t.kind == TokenKind::Number) {
    next();
    e.kind = Expr::Kind::Number;
    e.number = std::strtod(t.text.c_str(), nullptr);
    return e;
  }
  if (t.kind == TokenKind::Identifier) {
    next();
    e.kind = Expr::Kind::Ref;
    e.name = t.text;
    if (accept_punct("[")) {
      const Token& k = peek();
      unsigned v = 0;
      if (k.kind != TokenKind::Number || !parse_uint(k.text, v)) fail(k, "expected history index but found " + describe(k));
      next();
      e.history = v;
      expect_punct("]");
    }
    return e;
  }
  fail(t, "expected number, aggregate name or '(' but found " + describe(t));
}

bool Parser::check_expr_types(const Expr& e, bool want_bool) {
  bool is_bool = e.kind == Expr::Kind::Binary &&
                 (e.op == Expr::Op::Lt || e.op == Expr::Op::Le || e.op == Expr::Op::Gt || e.op == Expr::Op::Ge ||
                  e.op == Expr::Op::Eq || e.op == Expr::Op::Ne || e.op == Expr::Op::And || e.op == Expr::Op::Or);
  if (is_bool != want_bool) {
    error_at(e.span, want_bool ? "expected a condition (comparison) here" : "expected a numeric expression here");
    return false;
  }
  if (e.kind != Expr::Kind::Binary) return true;
  bool operands_bool = e.op == Expr::Op::And || e.op == Expr::Op::Or;
  bool ok = check_expr_types(e.operands[0], operands_bool);
  ok = check_expr_types(e.operands[1], operands_bool) && ok;
  return ok;
}

void collect_refs(const Expr& e, std::vector<const Expr*>& out) {
  if (e.kind == Expr::Kind::Ref) out.push_back(&e);
  for (const auto& o : e.operands) collect_refs(o, out);
}

void Parser::validate(QueryAst& ast, const Token& end_token) {
  const SourceSpan end_span = span_of(end_token.kind == TokenKind::End && pos_ > 0 ? toks_[pos_ - 1] : end_token);

  if (window_) {
    ast.kind = QueryKind::Anomaly;
  } else if (path_) {
    ast.kind = QueryKind::Dependency;
  } else {
    ast.kind = QueryKind::Multievent;
  }
  ast.globals = globals_;

  if (patterns_.empty() && !path_) {
    error_at(end_span, "query has no event pattern");
    return;
  }
  if (path_ && !patterns_.empty()) error_at(patterns_.front().span, "event patterns cannot be mixed with a dependency path");
  if (path_ && window_) error_at(window_span_, "a window clause cannot be combined with a dependency path");
  if (!ret_) error_at(end_span, "missing return clause");

  std::map<std::string, SourceSpan> aliases;
  for (const auto& ev : patterns_) {
    if (!aliases.try_emplace(ev.alias, ev.span).second) error_at(ev.span, "duplicate event alias " + ev.alias);
    if (vars_.count(ev.alias)) error_at(ev.span, "event alias " + ev.alias + " is already used as an entity variable");
  }

  if (ast.kind != QueryKind::Multievent && !constraints_.empty())
    error_at(constraints_.front().span, "temporal constraints are only allowed in multievent queries");
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const auto& c = constraints_[i];
    if (!aliases.count(c.left)) error_at(c.span, "undeclared alias " + c.left);
    if (!aliases.count(c.right)) error_at(right_spans_[i], "undeclared alias " + c.right);
    if (c.left == c.right && aliases.count(c.left)) error_at(c.span, "event " + c.left + " cannot precede itself");
  }

  if (ast.kind != QueryKind::Anomaly) {
    if (!group_by_.empty()) error_at(group_by_.front().second, "group by requires a window clause");
    if (having_) error_at(having_span_, "having requires a window clause");
  }

  std::set<std::string> group_vars;
  std::map<std::string, SourceSpan> outputs;
  if (ast.kind == QueryKind::Anomaly) {
    auto [window, step] = *window_;
    if (step > window) {
      error_at(window_span_, "step must not exceed the window");
    } else if (window % step != 0) {
      error_at(window_span_, "window must be a multiple of step");
    }
    if (patterns_.size() != 1) error_at(patterns_.size() > 1 ? patterns_[1].span : end_span,
                                        "an anomaly query takes exactly one event pattern");
    for (const auto& [var, span] : group_by_) {
      if (!vars_.count(var)) {
        error_at(span, "undeclared variable " + var);
      } else if (!group_vars.insert(var).second) {
        error_at(span, "duplicate group by variable " + var);
      }
    }
  }

  if (ret_) {
    if (ret_->items.empty()) error_at(end_span, "empty return clause");
    for (const auto& item : ret_->items) {
      if (item.kind == ReturnItem::Kind::Aggregate) {
        if (ast.kind != QueryKind::Anomaly) {
          error_at(item.span, "aggregates require a window clause");
          continue;
        }
        if (!aliases.count(item.var)) {
          error_at(item.span, "aggregate argument must be the event alias, not " + item.var);
        } else if (item.attribute.empty() ? item.fn != AggregateFn::Count
                                          : !is_event_attribute(item.attribute) || item.attribute == "op") {
          error_at(item.span, "aggregate needs a numeric event attribute such as " + item.var + ".amount");
        }
        if (vars_.count(item.output) || aliases.count(item.output) || !outputs.try_emplace(item.output, item.span).second)
          error_at(item.span, "duplicate output name " + item.output);
        continue;
      }
      bool is_alias = aliases.count(item.var) > 0;
      auto var = vars_.find(item.var);
      if (!is_alias && var == vars_.end()) {
        error_at(item.span, "undeclared variable " + item.var);
        continue;
      }
      if (is_alias) {
        if (item.kind == ReturnItem::Kind::Var) {
          error_at(item.span, "return an attribute of event " + item.var + " such as " + item.var + ".id");
        } else if (!is_event_attribute(item.attribute)) {
          error_at(item.span, "unknown event attribute '" + item.attribute + "'");
        }
        if (ast.kind == QueryKind::Anomaly) error_at(item.span, "anomaly queries return group variables and aggregates");
        continue;
      }
      if (item.kind == ReturnItem::Kind::Attribute) {
        auto known = known_attributes(var->second.first);
        if (item.attribute != "id" && item.attribute != "agentid" &&
            std::find(known.begin(), known.end(), item.attribute) == known.end())
          error_at(item.span, "unknown attribute '" + item.attribute + "' for " + kind_keyword(var->second.first));
      }
      if (ast.kind == QueryKind::Anomaly && !group_vars.count(item.var))
        error_at(item.span, "variable " + item.var + " must appear in group by");
    }
  }

  if (having_) {
    check_expr_types(*having_, true);
    std::vector<const Expr*> refs;
    collect_refs(*having_, refs);
    for (const Expr* r : refs) {
      if (!outputs.count(r->name)) error_at(r->span, "unknown aggregate " + r->name);
    }
  }

  if (!diags_.empty()) return;
  ast.ret = *ret_;
  if (ast.kind == QueryKind::Dependency) {
    ast.path = *path_;
  } else if (ast.kind == QueryKind::Anomaly) {
    AnomalyClause a;
    a.window_ms = window_->first;
    a.step_ms = window_->second;
    a.pattern = patterns_.front();
    for (const auto& g : group_by_) a.group_by.push_back(g.first);
    a.having = having_;
    ast.anomaly = std::move(a);
  } else {
    ast.patterns = patterns_;
    ast.constraints = constraints_;
  }
}

}  // namespace

ParseResult parse(std::string_view source) {
  TokenStream ts = tokenize(source);
  Parser parser(std::move(ts.tokens), !ts.diagnostics.empty());
  ParseResult result = parser.run();
  if (!ts.diagnostics.empty()) {
    // Lexical errors already leave holes in the token stream; report them
    // alongside whatever the parser found.
    result.ast.reset();
    result.diagnostics.insert(result.diagnostics.end(), ts.diagnostics.begin(), ts.diagnostics.end());
    std::stable_sort(result.diagnostics.begin(), result.diagnostics.end(), [](const Diagnostic& a, const Diagnostic& b) {
      return std::tie(a.line, a.column) < std::tie(b.line, b.column);
    });
  }
  return result;
}

std::vector<Diagnostic> check(std::string_view source) { return parse(source).diagnostics; }

}  // namespace aiql
