#include "shade/solar.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "shade/errors.hpp"

namespace shade {

bool is_leap_year(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

namespace {

constexpr int kDaysBeforeMonth[12] = {0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334};

int days_in_month(int year, int month) {
  static constexpr int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return month == 2 && is_leap_year(year) ? 29 : kDays[month - 1];
}

int parse_int(std::string_view s, std::string_view what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("invalid " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

double wrap_degrees(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r -= 360.0;
  return r;
}

}  // namespace

void TimeStamp::validate() const {
  if (month < 1 || month > 12) throw std::invalid_argument("month out of range");
  if (day < 1 || day > days_in_month(year, month)) throw std::invalid_argument("day out of range");
  if (!(local_hour >= 0.0 && local_hour < 24.0)) throw std::invalid_argument("hour must be in [0, 24)");
  if (!(std::abs(utc_offset_hours) <= 14.0)) throw std::invalid_argument("utc offset out of range");
}

int TimeStamp::day_of_year() const {
  validate();
  return kDaysBeforeMonth[month - 1] + day + (month > 2 && is_leap_year(year) ? 1 : 0);
}

int TimeStamp::whole_hour() const { return static_cast<int>(std::floor(local_hour)); }

double TimeStamp::local_hours_since_epoch() const {
  using namespace std::chrono;
  const sys_days d = year_month_day{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                                    std::chrono::day{static_cast<unsigned>(day)}};
  return static_cast<double>(d.time_since_epoch().count()) * 24.0 + local_hour;
}

std::string TimeStamp::date_string() const { return fmt::format("{:04d}-{:02d}-{:02d}", year, month, day); }

TimeStamp parse_timestamp(std::string_view date, std::string_view time, double utc_offset_hours) {
  if (date.size() != 10 || date[4] != '-' || date[7] != '-') {
    throw std::invalid_argument("date must be YYYY-MM-DD, got '" + std::string(date) + "'");
  }
  TimeStamp t;
  t.year = parse_int(date.substr(0, 4), "year");
  t.month = parse_int(date.substr(5, 2), "month");
  t.day = parse_int(date.substr(8, 2), "day");
  const auto colon = time.find(':');
  const int hh = parse_int(time.substr(0, colon), "hour");
  const int mm = colon == std::string_view::npos ? 0 : parse_int(time.substr(colon + 1), "minute");
  if (mm < 0 || mm > 59) throw std::invalid_argument("minute out of range");
  t.local_hour = hh + mm / 60.0;
  t.utc_offset_hours = utc_offset_hours;
  t.validate();
  return t;
}

double declination(int day_of_year) {
  if (day_of_year < 1 || day_of_year > 366) throw OutOfRange("day of year must be in [1, 366]");
  return 23.44 * std::sin(2.0 * kPi * (284.0 + day_of_year) / 365.0);
}

double equation_of_time_minutes(int day_of_year) {
  const double b = 2.0 * kPi * (day_of_year - 81) / 364.0;
  return 9.87 * std::sin(2.0 * b) - 7.53 * std::cos(b) - 1.5 * std::sin(b);
}

double solar_time_hours(const GeoPoint& point, const TimeStamp& t, const SolarOptions& opts) {
  const int n = t.day_of_year();
  double correction_min = 4.0 * (point.lon - 15.0 * t.utc_offset_hours);
  if (opts.equation_of_time) correction_min += equation_of_time_minutes(n);
  return t.local_hour + correction_min / 60.0;
}

SunPosition sun_position(const GeoPoint& point, const TimeStamp& t, const SolarOptions& opts) {
  SunPosition sun;
  sun.declination_deg = declination(t.day_of_year());
  sun.hour_angle_deg = 15.0 * (solar_time_hours(point, t, opts) - 12.0);

  const double lat = point.lat * kDegToRad;
  const double dec = sun.declination_deg * kDegToRad;
  const double h = sun.hour_angle_deg * kDegToRad;
  const double sin_el = std::sin(lat) * std::sin(dec) + std::cos(lat) * std::cos(dec) * std::cos(h);
  const double el = std::asin(std::clamp(sin_el, -1.0, 1.0));
  sun.elevation_deg = el * kRadToDeg;

  const double denom = std::cos(el) * std::cos(lat);
  double az = 0.0;
  if (std::abs(denom) > 1e-12) {
    const double cos_az = (std::sin(dec) - sin_el * std::sin(lat)) / denom;
    az = std::acos(std::clamp(cos_az, -1.0, 1.0)) * kRadToDeg;
    // Afternoon: the sun has crossed the meridian and sits west of it.
    if (std::sin(h) > 0.0) az = 360.0 - az;
  }
  sun.azimuth_deg = wrap_degrees(az);
  return sun;
}

std::string_view to_string(PromptTemplate t) {
  switch (t) {
    case PromptTemplate::declination: return "declination";
    case PromptTemplate::angle: return "angle";
    case PromptTemplate::time_of_day: return "time_of_day";
  }
  return "declination";
}

PromptTemplate prompt_template_from_string(std::string_view name) {
  if (name == "declination") return PromptTemplate::declination;
  if (name == "angle") return PromptTemplate::angle;
  if (name == "time_of_day") return PromptTemplate::time_of_day;
  throw std::invalid_argument("unknown prompt template '" + std::string(name) + "'");
}

namespace {

// Rounds to `decimals` places and folds -0 into 0 so "-0.0" never appears.
double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  double r = std::round(v * scale) / scale;
  if (r == 0.0) r = 0.0;
  return r;
}

}  // namespace

TextPrompt format_prompt(const SunPosition& sun, const TimeStamp& t, PromptTemplate template_id) {
  TextPrompt p;
  p.template_id = template_id;
  switch (template_id) {
    case PromptTemplate::declination:
      p.text = fmt::format("Solar declination: {:.1f}°", round_to(sun.declination_deg, 1));
      break;
    case PromptTemplate::angle:
      p.text = fmt::format("Angle: {:.0f}°", round_to(sun.elevation_deg, 0));
      break;
    case PromptTemplate::time_of_day: {
      const long minutes = std::lround(t.local_hour * 60.0) % (24 * 60);
      const long h24 = minutes / 60;
      const long h12 = h24 % 12 == 0 ? 12 : h24 % 12;
      p.text = fmt::format("Right now, it is {}:{:02d} {} in a day.", h12, minutes % 60, h24 < 12 ? "AM" : "PM");
      break;
    }
  }
  return p;
}

}  // namespace shade
