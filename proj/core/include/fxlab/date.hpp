#pragma once

#include <chrono>
#include <compare>
#include <cstdio>
#include <string>

#include "fxlab/error.hpp"

namespace fxlab {

// Calendar date stored as days since the Unix epoch. Ordering and distance
// are plain integer arithmetic; formatting is always ISO-8601 (YYYY-MM-DD).
class Date {
 public:
  Date() = default;
  explicit Date(int serial_days) : serial_(serial_days) {}

  static Date from_ymd(int y, unsigned m, unsigned d) {
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                    std::chrono::day{d}};
    if (!ymd.ok()) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "invalid date %04d-%02u-%02u", y, m, d);
      throw Error(buf);
    }
    return Date(static_cast<int>(
        std::chrono::sys_days{ymd}.time_since_epoch().count()));
  }

  static Date parse(const std::string& iso) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = '\0';
    if (std::sscanf(iso.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3) {
      throw Error("date not ISO-8601 (YYYY-MM-DD): '" + iso + "'");
    }
    return from_ymd(y, m, d);
  }

  std::string to_string() const {
    std::chrono::year_month_day ymd{
        std::chrono::sys_days{std::chrono::days{serial_}}};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()));
    return buf;
  }

  int serial() const { return serial_; }

  bool is_weekend() const {
    std::chrono::weekday wd{std::chrono::sys_days{std::chrono::days{serial_}}};
    return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
  }

  Date next_day() const { return Date(serial_ + 1); }

  Date next_weekday() const {
    Date d = next_day();
    while (d.is_weekend()) d = d.next_day();
    return d;
  }

  auto operator<=>(const Date&) const = default;

 private:
  int serial_ = 0;
};

}  // namespace fxlab
