#include "adae/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "adae/error.hpp"
#include "adae/hash.hpp"

namespace adae {

ArrivalTrace::ArrivalTrace(std::vector<ArrivalEvent> events, double duration,
                           std::optional<double> epoch)
    : events_(std::move(events)), duration_(duration), epoch_(epoch) {
  if (!std::isfinite(duration_) || duration_ <= 0.0) {
    throw ValidationError("duration must be positive and finite", "duration");
  }
  double prev = 0.0;
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const double t = events_[i].time;
    if (!std::isfinite(t) || t < 0.0) {
      throw ValidationError("event time must be finite and non-negative",
                            "events[" + std::to_string(i) + "]");
    }
    if (t < prev) {
      throw ValidationError("events not sorted by time", "events[" + std::to_string(i) + "]");
    }
    if (t > duration_) {
      throw ValidationError("event time exceeds duration", "events[" + std::to_string(i) + "]");
    }
    prev = t;
  }
}

ArrivalTrace ArrivalTrace::from_unsorted(std::vector<ArrivalEvent> events, double duration,
                                         std::optional<double> epoch) {
  std::stable_sort(events.begin(), events.end(),
                   [](const ArrivalEvent& a, const ArrivalEvent& b) { return a.time < b.time; });
  return ArrivalTrace(std::move(events), duration, epoch);
}

std::vector<double> ArrivalTrace::times() const {
  std::vector<double> out;
  out.reserve(events_.size());
  for (const auto& e : events_) out.push_back(e.time);
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

template <typename Int>
bool take_int(std::string_view& s, std::size_t digits, Int& out) {
  if (s.size() < digits) return false;
  Int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + digits, v);
  if (ec != std::errc() || ptr != s.data() + digits) return false;
  out = v;
  s.remove_prefix(digits);
  return true;
}

bool take_char(std::string_view& s, char c) {
  if (s.empty() || s.front() != c) return false;
  s.remove_prefix(1);
  return true;
}

std::optional<double> parse_iso8601(std::string_view s) {
  int y = 0;
  unsigned mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
  double frac = 0.0;
  if (!take_int(s, 4, y) || !take_char(s, '-') || !take_int(s, 2, mo) || !take_char(s, '-') ||
      !take_int(s, 2, d)) {
    return std::nullopt;
  }
  if (!take_char(s, 'T') && !take_char(s, 't') && !take_char(s, ' ')) return std::nullopt;
  if (!take_int(s, 2, hh) || !take_char(s, ':') || !take_int(s, 2, mm)) return std::nullopt;
  if (take_char(s, ':')) {
    if (!take_int(s, 2, ss)) return std::nullopt;
    if (!s.empty() && (s.front() == '.' || s.front() == ',')) {
      std::size_t n = 1;
      while (n < s.size() && s[n] >= '0' && s[n] <= '9') ++n;
      if (n == 1) return std::nullopt;
      std::string digits = "0." + std::string(s.substr(1, n - 1));
      frac = std::stod(digits);
      s.remove_prefix(n);
    }
  }
  long offset_seconds = 0;
  if (take_char(s, 'Z') || take_char(s, 'z')) {
  } else if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    const int sign = s.front() == '-' ? -1 : 1;
    s.remove_prefix(1);
    unsigned oh = 0, om = 0;
    if (!take_int(s, 2, oh)) return std::nullopt;
    take_char(s, ':');
    if (!s.empty() && !take_int(s, 2, om)) return std::nullopt;
    offset_seconds = sign * static_cast<long>(oh * 3600 + om * 60);
  }
  if (!s.empty()) return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<double>(days) * 86400.0 + hh * 3600.0 + mm * 60.0 + ss + frac -
         static_cast<double>(offset_seconds);
}

bool valid_id(std::string_view id) {
  return id.find_first_of(",\n\r") == std::string_view::npos;
}

}  // namespace

std::optional<double> parse_timestamp(std::string_view field) {
  field = trim(field);
  if (field.find('-') != std::string_view::npos && field.find(':') != std::string_view::npos) {
    return parse_iso8601(field);
  }
  return parse_number(field);
}

ArrivalTrace parse_trace(std::string_view raw, TraceFormat format) {
  if (format != TraceFormat::csv) throw ParseError("unsupported trace format");
  if (raw.size() >= 3 && raw.substr(0, 3) == "\xEF\xBB\xBF") raw.remove_prefix(3);

  std::optional<double> duration_override;
  std::optional<double> origin_override;
  std::optional<double> epoch_meta;
  std::vector<std::string> columns;
  int ts_col = -1, src_col = -1, wf_col = -1;

  struct RawRow {
    double t;
    std::string source, workflow;
  };
  std::vector<RawRow> rows;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    auto end = raw.find('\n', pos);
    if (end == std::string_view::npos) end = raw.size();
    std::string_view line = trim(raw.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) {
      if (end >= raw.size()) break;
      continue;
    }
    if (line.front() == '#') {
      std::string_view body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string_view::npos) {
        const auto key = trim(body.substr(0, eq));
        const auto value = trim(body.substr(eq + 1));
        if (key == "duration" || key == "origin" || key == "epoch") {
          auto v = parse_number(value);
          if (!v) throw ParseError("bad value for '" + std::string(key) + "'", line_no);
          if (key == "duration") duration_override = *v;
          else if (key == "origin") origin_override = *v;
          else epoch_meta = *v;
        }
      }
      continue;
    }
    const auto fields = split_commas(line);
    if (columns.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const std::string name(fields[i]);
        if (name == "timestamp") ts_col = static_cast<int>(i);
        else if (name == "source_id") src_col = static_cast<int>(i);
        else if (name == "workflow_id") wf_col = static_cast<int>(i);
        columns.push_back(name);
      }
      if (ts_col < 0) throw ParseError("header lacks a 'timestamp' column", line_no);
      continue;
    }
    if (fields.size() != columns.size()) {
      throw ParseError("expected " + std::to_string(columns.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    auto t = parse_timestamp(fields[static_cast<std::size_t>(ts_col)]);
    if (!t) {
      throw ParseError("malformed timestamp '" +
                           std::string(fields[static_cast<std::size_t>(ts_col)]) + "'",
                       line_no);
    }
    RawRow row{*t, {}, std::string(kDefaultWorkflow)};
    if (src_col >= 0) row.source = std::string(fields[static_cast<std::size_t>(src_col)]);
    if (wf_col >= 0 && !fields[static_cast<std::size_t>(wf_col)].empty()) {
      row.workflow = std::string(fields[static_cast<std::size_t>(wf_col)]);
    }
    rows.push_back(std::move(row));
    if (end >= raw.size()) break;
  }

  if (rows.empty()) throw ParseError("empty trace");

  double min_t = rows.front().t;
  for (const auto& r : rows) min_t = std::min(min_t, r.t);
  const double origin = origin_override.value_or(min_t);
  if (!epoch_meta && !origin_override) epoch_meta = origin;

  std::vector<ArrivalEvent> events;
  events.reserve(rows.size());
  double max_t = 0.0;
  for (auto& r : rows) {
    const double rel = r.t - origin;
    if (rel < 0.0) throw ParseError("timestamp precedes declared origin");
    max_t = std::max(max_t, rel);
    events.push_back({rel, std::move(r.source), std::move(r.workflow)});
  }
  double duration = max_t;
  if (duration_override) {
    if (*duration_override < max_t) {
      throw ParseError("declared duration " + format_double(*duration_override) +
                       " is shorter than the last event time " + format_double(max_t));
    }
    duration = *duration_override;
  }
  if (!(duration > 0.0)) {
    throw ParseError("trace spans zero time; declare '# duration=<seconds>'");
  }
  return ArrivalTrace::from_unsorted(std::move(events), duration, epoch_meta);
}

std::string serialize_trace(const ArrivalTrace& trace,
                            const std::vector<std::string>& extra_comments) {
  std::string out;
  out.reserve(trace.size() * 32 + 128);
  for (const auto& c : extra_comments) out += "# " + c + "\n";
  out += "# origin=0\n# duration=" + format_double(trace.duration()) + "\n";
  if (trace.epoch()) out += "# epoch=" + format_double(*trace.epoch()) + "\n";
  out += "timestamp,source_id,workflow_id\n";
  for (const auto& e : trace.events()) {
    if (!valid_id(e.source_id) || !valid_id(e.workflow_id)) {
      throw ValidationError("identifiers may not contain ',' or newlines", "source_id/workflow_id");
    }
    out += format_double(e.time);
    out += ',';
    out += e.source_id;
    out += ',';
    out += e.workflow_id;
    out += '\n';
  }
  return out;
}

ArrivalTrace merge_traces(const std::vector<ArrivalTrace>& traces) {
  if (traces.empty()) throw ValidationError("cannot merge an empty list of traces");
  std::size_t total = 0;
  double duration = 0.0;
  for (const auto& t : traces) {
    total += t.size();
    duration = std::max(duration, t.duration());
  }
  std::optional<double> epoch = traces.front().epoch();
  for (const auto& t : traces) {
    if (t.epoch() != epoch) epoch.reset();
  }
  std::vector<ArrivalEvent> events;
  events.reserve(total);
  for (const auto& t : traces) events.insert(events.end(), t.events().begin(), t.events().end());
  return ArrivalTrace::from_unsorted(std::move(events), duration, epoch);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("no such file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw EnvironmentError("cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw EnvironmentError("write failed: " + path);
}

ArrivalTrace read_trace_file(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw Error("no such trace: " + path);
  probe.close();
  return parse_trace(read_text_file(path));
}

}  // namespace adae
