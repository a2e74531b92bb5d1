#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rtp_arb {

// Start of a UTC hour.
using HourStamp = std::chrono::sys_seconds;

inline constexpr std::chrono::hours kOneHour{1};

// "2018-07-01T14:00:00Z". Throws ParseError on anything else, including
// stamps that are not on an hour boundary.
std::string format_hour_utc(HourStamp hour);
HourStamp parse_hour_utc(std::string_view text);

// Chronological, gap-free hourly prices in cents/kWh.
//
// Invariants (checked on construction): equal lengths, at least two entries,
// stamps on hour boundaries and exactly one hour apart, every price finite.
class PriceSeries {
 public:
  PriceSeries(std::vector<HourStamp> hours, std::vector<double> prices);

  // Consecutive hours starting at `first_hour`.
  static PriceSeries from_prices(std::vector<double> prices, HourStamp first_hour = default_start());
  static HourStamp default_start();

  std::size_t size() const noexcept { return prices_.size(); }
  double price(std::size_t n) const { return prices_.at(n); }
  HourStamp hour(std::size_t n) const { return hours_.at(n); }
  std::span<const double> prices() const noexcept { return prices_; }
  std::span<const HourStamp> hours() const noexcept { return hours_; }

  // Hours [first, first + count).
  PriceSeries slice(std::size_t first, std::size_t count) const;

  friend bool operator==(const PriceSeries&, const PriceSeries&) = default;

 private:
  std::vector<HourStamp> hours_;
  std::vector<double> prices_;
};

}  // namespace rtp_arb
