#pragma once

#include <string>
#include <string_view>

#include "shade/geo.hpp"

namespace shade {

/// Civil date and local clock time at a fixed UTC offset.
struct TimeStamp {
  int year = 2024;
  int month = 1;
  int day = 1;
  double local_hour = 12.0;  // [0, 24)
  double utc_offset_hours = 0.0;

  /// Throws std::invalid_argument for an impossible date or hour.
  void validate() const;
  int day_of_year() const;
  /// Local hour truncated to a whole hour.
  int whole_hour() const;
  /// Hours since 1970-01-01 local midnight of the same offset; used for time differences.
  double local_hours_since_epoch() const;
  /// "YYYY-MM-DD".
  std::string date_string() const;

  friend bool operator==(const TimeStamp&, const TimeStamp&) = default;
};

/// Parses "YYYY-MM-DD" and "HH[:MM]" into a timestamp.
TimeStamp parse_timestamp(std::string_view date, std::string_view time, double utc_offset_hours = 0.0);

bool is_leap_year(int year);

struct SunPosition {
  double declination_deg = 0.0;
  double elevation_deg = 0.0;
  double azimuth_deg = 0.0;  // clockwise from true north, [0, 360)
  double hour_angle_deg = 0.0;

  double zenith_deg() const { return 90.0 - elevation_deg; }
  bool above_horizon() const { return elevation_deg > 0.0; }
};

struct SolarOptions {
  /// Corrects clock time to apparent solar time with the equation of time.
  bool equation_of_time = true;
};

/// Cooper's approximation: 23.44 * sin(360 * (284 + n) / 365).
double declination(int day_of_year);

/// Equation of time in minutes for the given day of the year.
double equation_of_time_minutes(int day_of_year);

/// Apparent solar time in hours at the point's longitude.
double solar_time_hours(const GeoPoint& point, const TimeStamp& t, const SolarOptions& opts = {});

SunPosition sun_position(const GeoPoint& point, const TimeStamp& t, const SolarOptions& opts = {});

enum class PromptTemplate { declination, angle, time_of_day };

struct TextPrompt {
  std::string text;
  PromptTemplate template_id = PromptTemplate::declination;
};

std::string_view to_string(PromptTemplate t);
PromptTemplate prompt_template_from_string(std::string_view name);

/// Renders one of the three prompt templates. The angle template uses elevation.
TextPrompt format_prompt(const SunPosition& sun, const TimeStamp& t, PromptTemplate template_id);

}  // namespace shade
