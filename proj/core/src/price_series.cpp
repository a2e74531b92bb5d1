#include "rtp_arb/price_series.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "rtp_arb/errors.hpp"

namespace rtp_arb {

namespace {

bool parse_int(std::string_view text, int& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

std::string format_hour_utc(HourStamp hour) {
  using namespace std::chrono;
  const auto day = floor<days>(hour);
  const year_month_day ymd{day};
  const hh_mm_ss tod{hour - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

HourStamp parse_hour_utc(std::string_view text) {
  using namespace std::chrono;
  // YYYY-MM-DDThh:mm:ssZ
  if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      text[13] != ':' || text[16] != ':' || text[19] != 'Z') {
    throw ParseError("malformed UTC hour timestamp '" + std::string(text) + "'");
  }
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) ||
      !parse_int(text.substr(8, 2), d) || !parse_int(text.substr(11, 2), h) ||
      !parse_int(text.substr(14, 2), mi) || !parse_int(text.substr(17, 2), s)) {
    throw ParseError("malformed UTC hour timestamp '" + std::string(text) + "'");
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23) {
    throw ParseError("invalid calendar time '" + std::string(text) + "'");
  }
  if (mi != 0 || s != 0) {
    throw ParseError("timestamp '" + std::string(text) + "' is not on an hour boundary");
  }
  return sys_days{ymd} + hours{h};
}

PriceSeries::PriceSeries(std::vector<HourStamp> hours, std::vector<double> prices)
    : hours_(std::move(hours)), prices_(std::move(prices)) {
  if (hours_.size() != prices_.size()) {
    throw ValidationError("hours and prices differ in length", 0);
  }
  if (prices_.size() < 2) {
    throw InsufficientDataError("a price series needs at least 2 hours, got " +
                                std::to_string(prices_.size()));
  }
  for (std::size_t i = 0; i < prices_.size(); ++i) {
    if (!std::isfinite(prices_[i])) {
      throw ValidationError("non-finite price at index " + std::to_string(i), 0);
    }
    if (hours_[i].time_since_epoch() % kOneHour != std::chrono::seconds{0}) {
      throw ValidationError("timestamp at index " + std::to_string(i) + " is not on an hour boundary", 0);
    }
    if (i > 0 && hours_[i] - hours_[i - 1] != kOneHour) {
      throw ValidationError("hours at index " + std::to_string(i - 1) + " and " + std::to_string(i) +
                                " are not one hour apart",
                            0);
    }
  }
}

PriceSeries PriceSeries::from_prices(std::vector<double> prices, HourStamp first_hour) {
  std::vector<HourStamp> hours(prices.size());
  for (std::size_t i = 0; i < hours.size(); ++i) {
    hours[i] = first_hour + static_cast<int>(i) * kOneHour;
  }
  return PriceSeries(std::move(hours), std::move(prices));
}

HourStamp PriceSeries::default_start() {
  using namespace std::chrono;
  return sys_days{2018y / January / 1};
}

PriceSeries PriceSeries::slice(std::size_t first, std::size_t count) const {
  if (first + count > size()) {
    throw ParameterError("slice [" + std::to_string(first) + ", " + std::to_string(first + count) +
                         ") exceeds series of " + std::to_string(size()) + " hours");
  }
  return PriceSeries({hours_.begin() + first, hours_.begin() + first + count},
                     {prices_.begin() + first, prices_.begin() + first + count});
}

}  // namespace rtp_arb
