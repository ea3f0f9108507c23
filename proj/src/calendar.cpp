#include "odt/calendar.hpp"

#include <cctype>
#include <cstdio>
#include <stdexcept>

namespace odt {

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static const int d[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return d[m - 1];
}

}  // namespace

std::optional<Date> parse_date(const std::string& iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
  for (int i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (!std::isdigit(static_cast<unsigned char>(iso[i]))) return std::nullopt;
  }
  Date d;
  d.year = std::stoi(iso.substr(0, 4));
  d.month = std::stoi(iso.substr(5, 2));
  d.day = std::stoi(iso.substr(8, 2));
  if (d.month < 1 || d.month > 12) return std::nullopt;
  if (d.day < 1 || d.day > days_in_month(d.year, d.month)) return std::nullopt;
  return d;
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

int days_from_civil(const Date& dt) {
  int y = dt.year;
  const int m = dt.month;
  const int d = dt.day;
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 + static_cast<unsigned>(d) - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int>(doe) - 719468;
}

Date civil_from_days(int z) {
  z += 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int y = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return Date{y + (m <= 2), static_cast<int>(m), static_cast<int>(d)};
}

int day_of_week_sat1(const Date& d) {
  // days_from_civil(1970-01-01) = 0 was a Thursday; (z+4) % 7 gives 0 = Sunday.
  int wd = (days_from_civil(d) + 4) % 7;
  if (wd < 0) wd += 7;
  return wd == 6 ? 1 : wd + 2;
}

int month_of_year_sep1(const Date& d) {
  return d.month >= 9 ? d.month - 8 : d.month + 4;
}

bool is_weekend(const Date& d) {
  int dow = day_of_week_sat1(d);
  return dow == 1 || dow == 2;
}

ServiceCalendar::ServiceCalendar(Date start, int n_days) : start_(start), n_days_(n_days) {
  if (n_days <= 0) throw std::invalid_argument("ServiceCalendar: n_days must be positive");
  start_days_ = days_from_civil(start);
}

ServiceCalendar ServiceCalendar::study_default() {
  return ServiceCalendar(Date{2018, 9, 18}, 254);
}

bool ServiceCalendar::contains(const Date& d) const { return index_of(d) >= 0; }

int ServiceCalendar::index_of(const Date& d) const {
  int idx = days_from_civil(d) - start_days_;
  return (idx >= 0 && idx < n_days_) ? idx : -1;
}

Date ServiceCalendar::date_at(int index) const {
  if (index < 0 || index >= n_days_) throw std::out_of_range("ServiceCalendar: day index out of range");
  return civil_from_days(start_days_ + index);
}

TripContext ServiceCalendar::context(const Date& d) const {
  if (!contains(d)) {
    throw std::invalid_argument("ServiceCalendar: date " + format_date(d) + " outside the service window");
  }
  TripContext c;
  c.day_of_week = day_of_week_sat1(d);
  c.month_of_year = month_of_year_sep1(d);
  c.hours_of_operation = is_weekend(d) ? 1 : 0;
  return c;
}

}  // namespace odt
