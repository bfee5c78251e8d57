#include <charconv>
#include <cmath>
#include <string>

#include "adae/error.hpp"
#include "adae/hash.hpp"
#include "adae/predictor.hpp"

namespace adae {

namespace {

constexpr std::string_view kHeader =
    "utilization,lambda,mu,expected_output_latency,cov,node_count,link_latency,strategy_id,slo_latency,segments,"
    "target";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

double number(std::string_view s, std::size_t line, std::string_view column) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError("bad " + std::string(column) + " value '" + std::string(s) + "'", line);
  }
  return v;
}

std::string encode_segments(const std::vector<RateSegment>& segs) {
  std::string out;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (i) out += ';';
    out += format_double(segs[i].weight);
    out += ':';
    out += format_double(segs[i].lambda);
  }
  return out;
}

}  // namespace

std::string training_set_to_csv(const TrainingSet& set, const std::vector<std::string>& comments) {
  std::string out = "# schema=" + std::string(kTrainingSchema) + "\n";
  for (const auto& c : comments) out += "# " + c + "\n";
  out += kHeader;
  out += '\n';
  for (const auto& r : set.rows) {
    const auto& f = r.features;
    if (f.strategy_id.find_first_of(",\n") != std::string::npos) {
      throw ValidationError("strategy id may not contain commas", "strategy_id");
    }
    out += format_double(f.utilization) + ',' + format_double(f.lambda) + ',' + format_double(f.mu) + ',' +
           format_double(f.expected_output_latency) + ',' + format_double(f.cov) + ',' +
           format_double(f.node_count) + ',' + format_double(f.link_latency) + ',' + f.strategy_id + ',' +
           format_double(r.slo_latency) + ',' + encode_segments(r.segments) + ',' + format_double(r.target) + '\n';
  }
  return out;
}

TrainingSet training_set_from_csv(std::string_view raw) {
  TrainingSet set;
  bool schema_seen = false, header_seen = false;
  std::size_t line_no = 0;
  while (!raw.empty()) {
    const auto nl = raw.find('\n');
    std::string_view line = trim(raw.substr(0, nl));
    raw = nl == std::string_view::npos ? std::string_view{} : raw.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto body = trim(line.substr(1));
      if (body.starts_with("schema=")) {
        const auto v = trim(body.substr(7));
        if (v != kTrainingSchema) {
          throw ParseError("schema mismatch: expected " + std::string(kTrainingSchema) + ", got " + std::string(v),
                           line_no);
        }
        schema_seen = true;
      }
      continue;
    }
    if (!header_seen) {
      if (!schema_seen) throw ParseError("missing '# schema=" + std::string(kTrainingSchema) + "' line", line_no);
      if (line != kHeader) throw ParseError("schema mismatch: unexpected header", line_no);
      header_seen = true;
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 11) {
      throw ParseError("expected 11 fields, got " + std::to_string(fields.size()), line_no);
    }
    TrainingRow r;
    auto& f = r.features;
    f.utilization = number(fields[0], line_no, "utilization");
    f.lambda = number(fields[1], line_no, "lambda");
    f.mu = number(fields[2], line_no, "mu");
    f.expected_output_latency = number(fields[3], line_no, "expected_output_latency");
    f.cov = number(fields[4], line_no, "cov");
    f.node_count = number(fields[5], line_no, "node_count");
    f.link_latency = number(fields[6], line_no, "link_latency");
    f.strategy_id = std::string(fields[7]);
    r.slo_latency = number(fields[8], line_no, "slo_latency");
    if (!fields[9].empty()) {
      for (auto seg : split(fields[9], ';')) {
        const auto colon = seg.find(':');
        if (colon == std::string_view::npos) throw ParseError("bad segment '" + std::string(seg) + "'", line_no);
        r.segments.push_back({number(seg.substr(0, colon), line_no, "segment weight"),
                              number(seg.substr(colon + 1), line_no, "segment rate")});
      }
    }
    r.target = number(fields[10], line_no, "target");
    if (r.target < 0.0 || r.target > 1.0) throw ParseError("target outside [0, 1]", line_no);
    set.rows.push_back(std::move(r));
  }
  if (!header_seen) throw ParseError("training set has no header");
  return set;
}

}  // namespace adae
