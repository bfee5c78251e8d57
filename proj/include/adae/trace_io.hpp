#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adae {

inline constexpr std::string_view kDefaultWorkflow = "default";

struct ArrivalEvent {
  double time = 0.0;  // seconds since trace epoch
  std::string source_id;
  std::string workflow_id{kDefaultWorkflow};

  friend bool operator==(const ArrivalEvent&, const ArrivalEvent&) = default;
};

// Sorted, validated sequence of arrivals over [0, duration].
//
// Construction checks every invariant: events sorted by time, all times
// finite and within [0, duration], duration > 0. Instances are immutable.
class ArrivalTrace {
 public:
  // Throws ValidationError when an invariant fails. Events must already be
  // sorted; use from_unsorted() otherwise.
  ArrivalTrace(std::vector<ArrivalEvent> events, double duration,
               std::optional<double> epoch = std::nullopt);

  // Stable-sorts by time (equal times keep input order), then validates.
  static ArrivalTrace from_unsorted(std::vector<ArrivalEvent> events, double duration,
                                    std::optional<double> epoch = std::nullopt);

  const std::vector<ArrivalEvent>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }
  double duration() const noexcept { return duration_; }
  // Absolute wall-clock origin (epoch seconds), provenance only.
  const std::optional<double>& epoch() const noexcept { return epoch_; }

  std::vector<double> times() const;

  friend bool operator==(const ArrivalTrace&, const ArrivalTrace&) = default;

 private:
  std::vector<ArrivalEvent> events_;
  double duration_;
  std::optional<double> epoch_;
};

enum class TraceFormat { csv };

// Parses a trace document.
//
// CSV layout: optional `#` comment lines, then a header naming the columns
// (`timestamp` required; `source_id` and `workflow_id` optional, any order),
// then one row per event. Timestamps are epoch seconds or ISO-8601.
// Recognized comments: `# duration=<s>` (relative duration override),
// `# origin=<s>` (time subtracted from every timestamp; defaults to the
// earliest timestamp) and `# epoch=<s>` (provenance metadata).
ArrivalTrace parse_trace(std::string_view raw, TraceFormat format = TraceFormat::csv);

// Parses one timestamp field: decimal seconds, or ISO-8601
// `YYYY-MM-DD[T ]HH:MM[:SS[.fff]][Z|±HH:MM]` (UTC when no offset is given).
std::optional<double> parse_timestamp(std::string_view field);

// Serializes in the CSV layout above. Times are written with the shortest
// round-trip representation and `# origin=0`, so parsing the output yields
// an identical trace. `extra_comments` are written verbatim after `# `.
std::string serialize_trace(const ArrivalTrace& trace,
                            const std::vector<std::string>& extra_comments = {});

// Multiset union, stably re-sorted by time. Duration is the maximum input
// duration; the epoch is kept only when all inputs agree.
ArrivalTrace merge_traces(const std::vector<ArrivalTrace>& traces);

ArrivalTrace read_trace_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);
std::string read_text_file(const std::string& path);

}  // namespace adae
