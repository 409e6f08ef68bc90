#include "shade/json_io.hpp"

namespace shade {

using nlohmann::json;

void to_json(json& j, const GeoPoint& p) { j = json::array({p.lon, p.lat}); }

void from_json(const json& j, GeoPoint& p) {
  if (j.is_array()) {
    p = make_geo_point(j.at(0).get<double>(), j.at(1).get<double>());
  } else {
    p = make_geo_point(j.at("lon").get<double>(), j.at("lat").get<double>());
  }
}

void to_json(json& j, const GeoBounds& b) {
  j = json{{"min_lon", b.min_lon}, {"min_lat", b.min_lat}, {"max_lon", b.max_lon}, {"max_lat", b.max_lat}};
}

void from_json(const json& j, GeoBounds& b) {
  b.min_lon = j.at("min_lon").get<double>();
  b.min_lat = j.at("min_lat").get<double>();
  b.max_lon = j.at("max_lon").get<double>();
  b.max_lat = j.at("max_lat").get<double>();
}

void to_json(json& j, const TileBBox& t) {
  j = json{{"zoom", t.zoom}, {"x", t.x}, {"y", t.y}, {"geo_bounds", t.geo_bounds}};
}

void from_json(const json& j, TileBBox& t) {
  t = make_tile(j.at("zoom").get<int>(), j.at("x").get<std::int64_t>(), j.at("y").get<std::int64_t>());
}

void to_json(json& j, const SunPosition& s) {
  j = json{{"declination", s.declination_deg},
           {"elevation", s.elevation_deg},
           {"azimuth", s.azimuth_deg},
           {"hour_angle", s.hour_angle_deg}};
}

void from_json(const json& j, SunPosition& s) {
  s.declination_deg = j.at("declination").get<double>();
  s.elevation_deg = j.at("elevation").get<double>();
  s.azimuth_deg = j.at("azimuth").get<double>();
  s.hour_angle_deg = j.value("hour_angle", 0.0);
}

void to_json(json& j, const TimeStamp& t) {
  j = json{{"year", t.year},
           {"month", t.month},
           {"day", t.day},
           {"local_hour", t.local_hour},
           {"utc_offset_hours", t.utc_offset_hours}};
}

void from_json(const json& j, TimeStamp& t) {
  t.year = j.at("year").get<int>();
  t.month = j.at("month").get<int>();
  t.day = j.at("day").get<int>();
  t.local_hour = j.at("local_hour").get<double>();
  t.utc_offset_hours = j.value("utc_offset_hours", 0.0);
  t.validate();
}

void to_json(json& j, const TextPrompt& p) {
  j = json{{"text", p.text}, {"template_id", std::string(to_string(p.template_id))}};
}

void from_json(const json& j, TextPrompt& p) {
  p.text = j.at("text").get<std::string>();
  p.template_id = prompt_template_from_string(j.at("template_id").get<std::string>());
}

}  // namespace shade
