#include "stockstat/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "stockstat/errors.hpp"

namespace stockstat {

PriceSeries::PriceSeries(std::vector<Timestamp> timestamps,
                         std::vector<double> prices, std::string label)
    : timestamps_(std::move(timestamps)),
      prices_(std::move(prices)),
      label_(std::move(label)) {
  if (timestamps_.size() != prices_.size()) {
    throw std::invalid_argument("PriceSeries: timestamps and prices differ in length");
  }
  if (prices_.size() < 2) {
    throw std::invalid_argument("PriceSeries: need at least two samples");
  }
  for (std::size_t i = 0; i < prices_.size(); ++i) {
    if (!std::isfinite(prices_[i])) {
      throw std::invalid_argument("PriceSeries: non-finite price at index " +
                                  std::to_string(i));
    }
    if (i > 0 && timestamps_[i] <= timestamps_[i - 1]) {
      throw std::invalid_argument(
          "PriceSeries: timestamps not strictly increasing at index " +
          std::to_string(i));
    }
  }
}

PriceSeries PriceSeries::with_prices(std::vector<double> prices) const {
  return PriceSeries(timestamps_, std::move(prices), label_);
}

double PriceSeries::samples_per_month() const {
  using namespace std::chrono;
  const double span_s =
      static_cast<double>((timestamps_.back() - timestamps_.front()).count());
  const double month_s = 30.4375 * 86400.0;
  const double per_sample = span_s / static_cast<double>(size() - 1);
  return month_s / per_sample;
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delim)) out.push_back(trim(field));
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

Timestamp parse_timestamp(const std::string& raw) {
  using namespace std::chrono;
  const std::string text = trim(raw);
  if (text.empty()) throw std::invalid_argument("empty timestamp");

  const bool all_digits =
      std::all_of(text.begin() + (text[0] == '-' ? 1 : 0), text.end(),
                  [](unsigned char c) { return std::isdigit(c); });
  if (all_digits && text.find('-', 1) == std::string::npos) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw std::invalid_argument("bad epoch timestamp '" + text + "'");
    }
    return Timestamp{seconds{v}};
  }

  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  int consumed = 0;
  const int fields = std::sscanf(text.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed);
  if (fields != 3) throw std::invalid_argument("bad timestamp '" + text + "'");
  std::size_t pos = static_cast<std::size_t>(consumed);
  if (pos < text.size()) {
    sep = text[pos];
    if (sep != 'T' && sep != ' ') {
      throw std::invalid_argument("bad timestamp '" + text + "'");
    }
    int n2 = 0;
    const std::string rest = text.substr(pos + 1);
    if (std::sscanf(rest.c_str(), "%2d:%2d%n", &h, &mi, &n2) != 2) {
      throw std::invalid_argument("bad timestamp '" + text + "'");
    }
    std::size_t p2 = static_cast<std::size_t>(n2);
    if (p2 < rest.size() && rest[p2] == ':') {
      int n3 = 0;
      if (std::sscanf(rest.c_str() + p2 + 1, "%2d%n", &s, &n3) != 1) {
        throw std::invalid_argument("bad timestamp '" + text + "'");
      }
      p2 += 1 + static_cast<std::size_t>(n3);
    }
    if (p2 < rest.size() && rest.substr(p2) != "Z") {
      throw std::invalid_argument("bad timestamp '" + text + "'");
    }
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
    throw std::invalid_argument("invalid calendar timestamp '" + text + "'");
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss<seconds> tod{t - day_point};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02lldZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<long>(tod.hours().count()),
                static_cast<long>(tod.minutes().count()),
                static_cast<long long>(tod.seconds().count()));
  return buf;
}

PriceSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split(line, schema.delimiter);
      break;
    }
  }
  if (header.empty()) throw CsvError("empty CSV '" + path.string() + "'", line_no);

  const auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw CsvError("column '" + name + "' not in header", line_no);
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ts_col = column(schema.timestamp_column);
  const std::size_t px_col = column(schema.price_column);

  std::vector<Timestamp> ts;
  std::vector<double> px;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split(line, schema.delimiter);
    if (fields.size() <= std::max(ts_col, px_col)) {
      throw CsvError("row " + std::to_string(line_no) + ": missing fields", line_no);
    }
    Timestamp t;
    try {
      t = parse_timestamp(fields[ts_col]);
    } catch (const std::invalid_argument& e) {
      throw CsvError("row " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    double p = 0.0;
    if (!parse_double(fields[px_col], p)) {
      throw CsvError("row " + std::to_string(line_no) + ": unparsable price '" +
                         fields[px_col] + "'",
                     line_no);
    }
    if (!ts.empty() && t <= ts.back()) {
      throw CsvError("row " + std::to_string(line_no) +
                         ": timestamp not after previous row",
                     line_no);
    }
    ts.push_back(t);
    px.push_back(p);
  }
  if (px.empty()) throw CsvError("no data rows in '" + path.string() + "'", line_no);
  if (px.size() < 2) {
    throw CsvError("need at least two data rows in '" + path.string() + "'", line_no);
  }
  return PriceSeries(std::move(ts), std::move(px), path.stem().string());
}

void write_csv(const std::filesystem::path& path, const PriceSeries& series) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.precision(17);
  out << "timestamp,price\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_timestamp(series.timestamps()[i]) << ',' << series.prices()[i]
        << '\n';
  }
}

CleanResult remove_artifacts(const PriceSeries& series,
                             const ArtifactOptions& opt) {
  if (!(opt.rel_jump_threshold > 0.0)) {
    throw std::invalid_argument("remove_artifacts: rel_jump_threshold must be > 0");
  }
  if (opt.max_duration < 1) {
    throw std::invalid_argument("remove_artifacts: max_duration must be >= 1");
  }
  if (!(opt.reversion_tolerance >= 0.0) ||
      opt.reversion_tolerance >= opt.rel_jump_threshold) {
    throw std::invalid_argument(
        "remove_artifacts: need 0 <= reversion_tolerance < rel_jump_threshold");
  }
  if (series.size() < opt.max_duration + 2) {
    throw std::invalid_argument("remove_artifacts: series shorter than max_duration + 2");
  }

  std::vector<double> p(series.prices().begin(), series.prices().end());
  std::vector<ArtifactEvent> events;
  const std::size_t n = p.size();

  std::size_t i = 1;
  while (i < n) {
    const double pre = p[i - 1];
    const double scale = std::abs(pre);
    if (scale == 0.0 ||
        std::abs(p[i] - pre) < opt.rel_jump_threshold * scale) {
      ++i;
      continue;
    }
    // Look for the first return to the pre-jump level.
    std::size_t back = 0;
    for (std::size_t j = i + 1; j <= std::min(i + opt.max_duration, n - 1); ++j) {
      if (std::abs(p[j] - pre) <= opt.reversion_tolerance * scale) {
        back = j;
        break;
      }
    }
    if (back == 0) {
      ++i;
      continue;
    }
    ArtifactEvent ev;
    ev.start_index = i;
    ev.duration = back - i;
    ev.pre_level = pre;
    ev.peak_level = p[i];
    for (std::size_t k = i; k < back; ++k) {
      if (std::abs(p[k] - pre) > std::abs(ev.peak_level - pre)) ev.peak_level = p[k];
    }
    const double post = p[back];
    const double span = static_cast<double>(back - (i - 1));
    for (std::size_t k = i; k < back; ++k) {
      const double f = static_cast<double>(k - (i - 1)) / span;
      p[k] = pre + f * (post - pre);
    }
    events.push_back(ev);
    i = back + 1;
  }
  return {series.with_prices(std::move(p)), std::move(events)};
}

}  // namespace stockstat
