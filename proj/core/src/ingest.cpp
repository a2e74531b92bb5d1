#include "rtp_arb/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "rtp_arb/errors.hpp"

namespace rtp_arb {

namespace {

using std::chrono::days;
using std::chrono::hours;
using std::chrono::milliseconds;
using std::chrono::sys_seconds;

// Local (Central) time sits 5 or 6 hours behind UTC; query a slightly wider window.
constexpr hours kLocalPad{7};

std::string record_label(std::size_t index) { return "record " + std::to_string(index); }

double parse_double_field(const nlohmann::json& v, std::size_t index, const char* field) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) {
    throw ParseError(record_label(index) + ": field '" + field + "' is neither string nor number");
  }
  const auto& s = v.get_ref<const std::string&>();
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError(record_label(index) + ": field '" + field + "' is not numeric: '" + s + "'");
  }
  return out;
}

std::int64_t parse_millis_field(const nlohmann::json& v, std::size_t index) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (!v.is_string()) {
    throw ParseError(record_label(index) + ": field 'millisUTC' is neither string nor integer");
  }
  const auto& s = v.get_ref<const std::string&>();
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError(record_label(index) + ": field 'millisUTC' is not an integer: '" + s + "'");
  }
  return out;
}

bool transient(const HttpResponse& r) { return r.status == 0 || r.status == 429 || r.status >= 500; }

std::string trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return std::string(line);
}

}  // namespace

HourStamp FiveMinuteSample::hour() const {
  return std::chrono::floor<std::chrono::hours>(timestamp_utc - kFiveMinutes);
}

HttpResponse http_get(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  HttpResponse out;
  try {
    httplib::Client client(origin);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(30, 0);
    client.set_follow_location(true);
    auto res = client.Get(path);
    if (!res) {
      out.error = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.body = std::move(res->body);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

std::string format_feed_time(sys_seconds t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss tod{t - day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d%02u%02u%02d%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()));
  return buf;
}

std::vector<FiveMinuteSample> parse_feed_payload(std::string_view payload) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(payload);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("feed payload is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) {
    throw ParseError("feed payload is not a JSON array");
  }
  std::vector<FiveMinuteSample> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& rec = doc[i];
    if (!rec.is_object() || !rec.contains("millisUTC") || !rec.contains("price")) {
      throw ParseError(record_label(i) + ": expected an object with 'millisUTC' and 'price'");
    }
    const std::int64_t millis = parse_millis_field(rec["millisUTC"], i);
    const double price = parse_double_field(rec["price"], i, "price");
    if (!std::isfinite(price)) {
      throw ParseError(record_label(i) + ": non-finite price");
    }
    if (millis % std::chrono::duration_cast<milliseconds>(kFiveMinutes).count() != 0) {
      throw ParseError(record_label(i) + ": timestamp " + std::to_string(millis) +
                       " is not on a 5-minute boundary");
    }
    out.push_back({MillisUtc{milliseconds{millis}}, price});
  }
  return out;
}

FetchResult fetch_five_minute_feed(sys_seconds start, sys_seconds end, const FetchOptions& options) {
  if (!(start < end)) {
    throw ParameterError("fetch range is empty: start must precede end");
  }
  if (options.attempts < 1) {
    throw ParameterError("fetch needs at least one attempt");
  }
  auto sleep = options.sleep ? options.sleep : [](milliseconds d) { std::this_thread::sleep_for(d); };

  FetchResult result;
  for (sys_seconds chunk_start = start; chunk_start < end;) {
    const sys_seconds chunk_end = std::min<sys_seconds>(std::chrono::floor<days>(chunk_start) + days{1}, end);
    const std::string url = options.endpoint + "?type=5minutefeed&datestart=" +
                            format_feed_time(chunk_start - kLocalPad) +
                            "&dateend=" + format_feed_time(chunk_end + kLocalPad);

    HttpResponse response;
    milliseconds backoff = options.initial_backoff;
    for (int attempt = 1;; ++attempt) {
      response = options.get(url);
      if (response.status == 200) break;
      if (!transient(response) || attempt >= options.attempts) {
        throw TransportError("GET " + url + " failed after " + std::to_string(attempt) + " attempt(s): " +
                             (response.status ? "HTTP " + std::to_string(response.status) : response.error));
      }
      sleep(backoff);
      backoff *= 2;
    }

    std::size_t kept = 0;
    for (const auto& s : parse_feed_payload(response.body)) {
      if (s.timestamp_utc > chunk_start && s.timestamp_utc <= chunk_end) {
        result.samples.push_back(s);
        ++kept;
      }
    }
    if (kept == 0) {
      result.warnings.push_back("data gap: no samples between " + format_hour_utc(chunk_start) + " and " +
                                format_hour_utc(std::chrono::floor<hours>(chunk_end)));
    }
    chunk_start = chunk_end;
  }

  std::sort(result.samples.begin(), result.samples.end(),
            [](const auto& a, const auto& b) { return a.timestamp_utc < b.timestamp_utc; });
  result.samples.erase(std::unique(result.samples.begin(), result.samples.end(),
                                   [](const auto& a, const auto& b) { return a.timestamp_utc == b.timestamp_utc; }),
                       result.samples.end());
  return result;
}

std::pair<PriceSeries, IngestReport> aggregate_hourly(std::span<const FiveMinuteSample> samples) {
  struct Bucket {
    double sum = 0.0;
    std::size_t count = 0;
  };
  std::map<HourStamp, Bucket> buckets;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i > 0 && samples[i].timestamp_utc < samples[i - 1].timestamp_utc) {
      throw ParameterError("samples are not sorted ascending at index " + std::to_string(i));
    }
    if (!std::isfinite(samples[i].price)) {
      throw ParameterError("non-finite sample price at index " + std::to_string(i));
    }
    auto& b = buckets[samples[i].hour()];
    b.sum += samples[i].price;
    ++b.count;
  }
  if (buckets.size() < 2) {
    throw InsufficientDataError("need samples in at least 2 distinct hours, got " + std::to_string(buckets.size()));
  }

  IngestReport report;
  report.samples_per_hour_min = samples.size();
  std::vector<HourStamp> hours_out;
  std::vector<double> prices_out;
  auto prev = buckets.begin();
  for (auto it = buckets.begin(); it != buckets.end(); ++it) {
    const double mean = it->second.sum / static_cast<double>(it->second.count);
    if (it != buckets.begin()) {
      const auto gap = (it->first - prev->first) / kOneHour;
      const double prev_mean = prices_out.back();
      for (long k = 1; k < gap; ++k) {
        const double frac = static_cast<double>(k) / static_cast<double>(gap);
        const HourStamp h = prev->first + k * kOneHour;
        hours_out.push_back(h);
        prices_out.push_back(prev_mean + frac * (mean - prev_mean));
        report.hours_interpolated.push_back(h);
      }
    }
    hours_out.push_back(it->first);
    prices_out.push_back(mean);
    report.samples_per_hour_min = std::min(report.samples_per_hour_min, it->second.count);
    prev = it;
  }
  report.hours_emitted = hours_out.size();
  return {PriceSeries(std::move(hours_out), std::move(prices_out)), std::move(report)};
}

std::string format_shortest(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  return std::string(buf, ptr);
}

std::string price_csv_text(const PriceSeries& series) {
  std::string out = "hour_start_utc,price_cents_per_kwh\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out += format_hour_utc(series.hour(i));
    out += ',';
    out += format_shortest(series.price(i));
    out += '\n';
  }
  return out;
}

PriceSeries parse_price_csv(std::string_view text) {
  std::vector<HourStamp> hours;
  std::vector<double> prices;
  std::size_t row = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string line = trim_cr(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++row;
    if (!header_seen) {
      if (line != "hour_start_utc,price_cents_per_kwh") {
        throw ValidationError("expected header 'hour_start_utc,price_cents_per_kwh', got '" + line + "'", row);
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) {
      if (text.empty()) break;
      throw ValidationError("empty row", row);
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw ValidationError("expected 2 columns", row);
    }
    HourStamp hour;
    try {
      hour = parse_hour_utc(std::string_view(line).substr(0, comma));
    } catch (const ParseError& e) {
      throw ValidationError(e.what(), row);
    }
    double price = 0.0;
    const char* first = line.data() + comma + 1;
    const char* last = line.data() + line.size();
    auto [ptr, ec] = std::from_chars(first, last, price);
    if (ec != std::errc{} || ptr != last || !std::isfinite(price)) {
      throw ValidationError("price '" + std::string(first, last) + "' is not a finite number", row);
    }
    if (!hours.empty()) {
      if (hour <= hours.back()) {
        throw ValidationError("timestamp " + format_hour_utc(hour) + " does not follow " +
                                  format_hour_utc(hours.back()),
                              row);
      }
      if (hour - hours.back() != kOneHour) {
        throw ValidationError("gap: missing hour(s) between " + format_hour_utc(hours.back()) + " and " +
                                  format_hour_utc(hour),
                              row);
      }
    }
    hours.push_back(hour);
    prices.push_back(price);
  }
  if (!header_seen) {
    throw ValidationError("empty file: missing header", 0);
  }
  if (prices.size() < 2) {
    throw InsufficientDataError("price file has " + std::to_string(prices.size()) + " row(s); need at least 2");
  }
  return PriceSeries(std::move(hours), std::move(prices));
}

void write_price_csv(const PriceSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << price_csv_text(series);
  if (!out) {
    throw IoError("write to '" + path.string() + "' failed");
  }
}

PriceSeries read_price_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open price file '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_price_csv(buf.str());
  } catch (const ValidationError& e) {
    throw ValidationError(e.detail(), e.row(), path.string());
  } catch (const InsufficientDataError& e) {
    throw InsufficientDataError(path.string() + ": " + e.what());
  }
}

}  // namespace rtp_arb
