#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rtp_arb/price_series.hpp"

namespace rtp_arb {

using MillisUtc = std::chrono::sys_time<std::chrono::milliseconds>;

inline constexpr std::chrono::minutes kFiveMinutes{5};
inline constexpr std::string_view kDefaultFeedEndpoint = "https://hourlypricing.comed.com/api";
inline constexpr std::string_view kDataDirEnvVar = "RTP_ARB_DATA_DIR";

// One real-time clearing price. The feed stamps the END of the 5-minute
// interval, so a sample stamped 14:05 belongs to the 14:00 hour and one
// stamped 15:00 still belongs to it as well.
struct FiveMinuteSample {
  MillisUtc timestamp_utc;
  double price = 0.0;  // cents/kWh

  HourStamp hour() const;
  friend bool operator==(const FiveMinuteSample&, const FiveMinuteSample&) = default;
};

struct IngestReport {
  std::size_t hours_emitted = 0;
  std::vector<HourStamp> hours_interpolated;
  std::size_t samples_per_hour_min = 0;  // over hours that had samples
  std::vector<std::string> warnings;
};

struct HttpResponse {
  int status = 0;  // 0 when no response was received
  std::string body;
  std::string error;
};

using HttpGet = std::function<HttpResponse(const std::string& url)>;

// cpp-httplib backed GET.
HttpResponse http_get(const std::string& url);

struct FetchOptions {
  std::string endpoint{kDefaultFeedEndpoint};
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  HttpGet get = http_get;
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

struct FetchResult {
  std::vector<FiveMinuteSample> samples;  // ascending, unique stamps
  std::vector<std::string> warnings;
};

// "YYYYMMDDhhmm" as used by the feed's datestart/dateend parameters.
std::string format_feed_time(std::chrono::sys_seconds t);

// Parses the feed payload: a JSON array of {"millisUTC": "...", "price": "..."}.
// Throws ParseError naming the offending record.
std::vector<FiveMinuteSample> parse_feed_payload(std::string_view payload);

// Samples with start < timestamp <= end, i.e. every 5-minute interval inside
// [start, end). One request per UTC day; transient failures are retried with
// exponential backoff. An empty day is reported as a warning, not an error.
FetchResult fetch_five_minute_feed(std::chrono::sys_seconds start, std::chrono::sys_seconds end,
                                   const FetchOptions& options = {});

// Hourly means of ascending samples. Hours without samples are linearly
// interpolated between the nearest hours that have them and listed in the report.
std::pair<PriceSeries, IngestReport> aggregate_hourly(std::span<const FiveMinuteSample> samples);

// Bit-exact CSV cache: header, one LF-terminated row per hour, shortest
// round-trip decimal prices.
std::string price_csv_text(const PriceSeries& series);
PriceSeries parse_price_csv(std::string_view text);
void write_price_csv(const PriceSeries& series, const std::filesystem::path& path);
PriceSeries read_price_csv(const std::filesystem::path& path);

// Shortest decimal string that parses back to exactly `value`.
std::string format_shortest(double value);

}  // namespace rtp_arb
