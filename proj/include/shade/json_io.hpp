#pragma once

// nlohmann::json conversions for the value types that cross file and HTTP boundaries.

#include <json.hpp>

#include "shade/geo.hpp"
#include "shade/solar.hpp"

namespace shade {

void to_json(nlohmann::json& j, const GeoPoint& p);
void from_json(const nlohmann::json& j, GeoPoint& p);
void to_json(nlohmann::json& j, const GeoBounds& b);
void from_json(const nlohmann::json& j, GeoBounds& b);
void to_json(nlohmann::json& j, const TileBBox& t);
void from_json(const nlohmann::json& j, TileBBox& t);
void to_json(nlohmann::json& j, const SunPosition& s);
void from_json(const nlohmann::json& j, SunPosition& s);
void to_json(nlohmann::json& j, const TimeStamp& t);
void from_json(const nlohmann::json& j, TimeStamp& t);
void to_json(nlohmann::json& j, const TextPrompt& p);
void from_json(const nlohmann::json& j, TextPrompt& p);

/// Zero-based offset of the byte the parser stopped at.
inline std::size_t error_offset(const nlohmann::json::parse_error& e) { return e.byte > 0 ? e.byte - 1 : 0; }

}  // namespace shade
