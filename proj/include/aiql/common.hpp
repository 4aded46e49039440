// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace aiql {

using EntityId = std::uint64_t;
using EventId = std::uint64_t;
using AgentId = std::uint32_t;

/// Milliseconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr Timestamp kMinTimestamp = std::numeric_limits<Timestamp>::min();
inline constexpr Timestamp kMaxTimestamp = std::numeric_limits<Timestamp>::max();
inline constexpr Timestamp kMillisPerDay = 86'400'000;

/// Half-open interval [lo, hi) of timestamps.
struct TimeRange {
  Timestamp lo = kMinTimestamp;
  Timestamp hi = kMaxTimestamp;

  bool empty() const { return lo >= hi; }
  bool contains(Timestamp t) const { return t >= lo && t < hi; }
  bool unbounded() const { return lo == kMinTimestamp && hi == kMaxTimestamp; }
  TimeRange intersect(const TimeRange& other) const {
    return {std::max(lo, other.lo), std::min(hi, other.hi)};
  }
  friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

/// Floor division for possibly negative numerators.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace aiql
