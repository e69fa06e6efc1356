#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kgalloc {

inline constexpr std::string_view kEventLogHeader =
    "case_id,task_id,activity,resource,lifecycle,timestamp,application_type,loan_goal,requested_amount";

enum class Lifecycle { Enable, Start, Complete };

std::string_view to_string(Lifecycle l);

// One CSV row. `resource` is empty for enable rows.
struct EventRow {
  std::string case_id;
  std::string task_id;
  std::string activity;
  std::string resource;
  Lifecycle lifecycle = Lifecycle::Enable;
  std::int64_t timestamp = 0;
  std::string application_type;
  std::string loan_goal;
  double requested_amount = 0.0;

  bool operator==(const EventRow&) const = default;
};

// One executed task, assembled from its start and complete rows.
struct EventRecord {
  std::string case_id;
  std::string task_id;
  std::string activity;
  std::string resource;
  std::int64_t start = 0;
  std::int64_t end = 0;
  std::string application_type;
  std::string loan_goal;
  double requested_amount = 0.0;

  bool operator==(const EventRecord&) const = default;
};

struct RejectedRow {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string reason;
};

struct EventLog {
  std::vector<EventRow> rows;        // valid rows in file order
  std::vector<EventRecord> records;  // one per completed task, file order of completion
  std::vector<RejectedRow> rejects;
};

// Columns are matched by header name; extra columns are ignored. Rows that
// fail validation land in `rejects`. Throws Error{EmptyFile} or
// Error{MissingColumn}.
EventLog parse_event_log(std::string_view text);
EventLog load_event_log(const std::string& path);

std::string write_event_log(const std::vector<EventRow>& rows);
void save_event_log(const std::string& path, const std::vector<EventRow>& rows);

// Rows for already-assembled records (a start and a complete row each).
std::vector<EventRow> rows_of(const std::vector<EventRecord>& records);

}  // namespace kgalloc
