// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The AIQL Authors.

#pragma once

#include <nlohmann/json.hpp>

#include "aiql/event_model.hpp"

namespace aiql {

// Flat JSON objects, one per line in catalog.jsonl / part-*.jsonl.
nlohmann::json to_json(const Entity& e);
nlohmann::json to_json(const Event& e);
Entity entity_from_json(const nlohmann::json& j);
Event event_from_json(const nlohmann::json& j);

nlohmann::json value_to_json(const Value& v);
/// Integers and strings only; anything else throws.
Value value_from_json(const nlohmann::json& j);

}  // namespace aiql
