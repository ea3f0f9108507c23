#pragma once
#include <optional>
#include <string>

namespace odt {

struct Date {
  int year = 0;
  int month = 0;
  int day = 0;
  friend bool operator==(const Date&, const Date&) = default;
  friend auto operator<=>(const Date&, const Date&) = default;
};

std::optional<Date> parse_date(const std::string& iso);  // strict yyyy-mm-dd
std::string format_date(const Date& d);

int days_from_civil(const Date& d);  // days since 1970-01-01
Date civil_from_days(int z);

/// Day of week coded 1..7 with Saturday = 1 (service week starts on Saturday).
int day_of_week_sat1(const Date& d);
/// Month coded from the season start: September = 1 .. August = 12.
int month_of_year_sep1(const Date& d);
bool is_weekend(const Date& d);

struct TripContext {
  int hours_of_operation = 0;  // 0 = 3 h weekday window, 1 = 5 h weekend window
  int day_of_week = 1;         // 1..7, Saturday = 1
  int month_of_year = 1;       // 1..9 within the study season, September = 1
};

// Service calendar for the study window (default 2018-09-18 .. 2019-05-29).
class ServiceCalendar {
 public:
  ServiceCalendar(Date start, int n_days);
  static ServiceCalendar study_default();

  bool contains(const Date& d) const;
  int index_of(const Date& d) const;  // -1 when outside the window
  Date date_at(int index) const;
  TripContext context(const Date& d) const;  // throws when outside the window
  int n_days() const { return n_days_; }
  const Date& start() const { return start_; }

 private:
  Date start_;
  int start_days_ = 0;
  int n_days_ = 0;
};

}  // namespace odt
