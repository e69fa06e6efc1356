#include "kgalloc/event_log.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>

#include "kgalloc/error.hpp"
#include "text_util.hpp"

namespace kgalloc {

namespace {

constexpr std::array<std::string_view, 9> kColumns = {
    "case_id", "task_id", "activity", "resource", "lifecycle",
    "timestamp", "application_type", "loan_goal", "requested_amount"};

// RFC 4180 fields; a quoted field may not span lines here.
std::optional<std::vector<std::string>> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  std::size_t i = 0;
  bool quoted = false;
  bool was_quoted = false;
  while (i < line.size()) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      field += c;
    }
    ++i;
  }
  if (quoted) return std::nullopt;
  out.push_back(std::move(field));
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_amount(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::optional<Lifecycle> parse_lifecycle(std::string_view s) {
  if (s == "enable") return Lifecycle::Enable;
  if (s == "start") return Lifecycle::Start;
  if (s == "complete") return Lifecycle::Complete;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Lifecycle l) {
  switch (l) {
    case Lifecycle::Enable: return "enable";
    case Lifecycle::Start: return "start";
    case Lifecycle::Complete: return "complete";
  }
  return "?";
}

EventLog parse_event_log(std::string_view text) {
  auto lines = detail::split_lines(text);
  std::size_t first = 0;
  while (first < lines.size() && detail::trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw Error(ErrorCode::EmptyFile, "event log is empty");

  auto header = split_csv(detail::trim(lines[first]));
  if (!header) throw Error(ErrorCode::MissingColumn, "unreadable header");
  std::array<std::size_t, kColumns.size()> pos{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    std::size_t k = 0;
    while (k < header->size() && (*header)[k] != kColumns[c]) ++k;
    if (k == header->size()) throw Error(ErrorCode::MissingColumn, "missing column " + std::string(kColumns[c]));
    pos[c] = k;
  }

  EventLog log;
  std::map<std::string, EventRow> starts;  // task_id -> start row
  for (std::size_t n = first + 1; n < lines.size(); ++n) {
    auto line = detail::trim(lines[n]);
    if (line.empty()) continue;
    auto reject = [&](std::string why) { log.rejects.push_back({n + 1, std::move(why)}); };
    auto fields = split_csv(line);
    if (!fields) {
      reject("unterminated quote");
      continue;
    }
    if (fields->size() != header->size()) {
      reject("expected " + std::to_string(header->size()) + " fields, got " + std::to_string(fields->size()));
      continue;
    }
    auto col = [&](std::size_t c) -> const std::string& { return (*fields)[pos[c]]; };

    EventRow row;
    row.case_id = col(0);
    row.task_id = col(1);
    row.activity = col(2);
    row.resource = col(3);
    row.application_type = col(6);
    row.loan_goal = col(7);
    auto lc = parse_lifecycle(col(4));
    if (row.case_id.empty() || row.task_id.empty() || row.activity.empty()) {
      reject("empty identifier field");
      continue;
    }
    if (!lc) {
      reject("unknown lifecycle '" + col(4) + "'");
      continue;
    }
    row.lifecycle = *lc;
    if (!parse_number(col(5), row.timestamp)) {
      reject("bad timestamp '" + col(5) + "'");
      continue;
    }
    if (!parse_number(col(8), row.requested_amount) || !std::isfinite(row.requested_amount)) {
      reject("bad requested_amount '" + col(8) + "'");
      continue;
    }
    if (row.lifecycle != Lifecycle::Enable && row.resource.empty()) {
      reject("missing resource");
      continue;
    }

    if (row.lifecycle == Lifecycle::Start) {
      starts[row.task_id] = row;
    } else if (row.lifecycle == Lifecycle::Complete) {
      EventRecord rec{row.case_id, row.task_id, row.activity, row.resource, row.timestamp, row.timestamp,
                      row.application_type, row.loan_goal, row.requested_amount};
      if (auto it = starts.find(row.task_id); it != starts.end()) {
        rec.start = it->second.timestamp;
        if (it->second.resource != row.resource) {
          reject("resource differs from start row");
          continue;
        }
      }
      if (rec.end < rec.start) {
        reject("end " + std::to_string(rec.end) + " before start " + std::to_string(rec.start));
        continue;
      }
      log.records.push_back(std::move(rec));
    }
    log.rows.push_back(std::move(row));
  }
  return log;
}

EventLog load_event_log(const std::string& path) { return parse_event_log(detail::read_file(path)); }

std::string write_event_log(const std::vector<EventRow>& rows) {
  std::string out(kEventLogHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += csv_field(r.case_id) + ',' + csv_field(r.task_id) + ',' + csv_field(r.activity) + ',' +
           csv_field(r.resource) + ',' + std::string(to_string(r.lifecycle)) + ',' + std::to_string(r.timestamp) +
           ',' + csv_field(r.application_type) + ',' + csv_field(r.loan_goal) + ',' +
           format_amount(r.requested_amount) + '\n';
  }
  return out;
}

void save_event_log(const std::string& path, const std::vector<EventRow>& rows) {
  detail::write_file(path, write_event_log(rows));
}

std::vector<EventRow> rows_of(const std::vector<EventRecord>& records) {
  std::vector<EventRow> rows;
  for (const auto& r : records) {
    EventRow row{r.case_id, r.task_id, r.activity, r.resource, Lifecycle::Start,
                 r.start, r.application_type, r.loan_goal, r.requested_amount};
    rows.push_back(row);
    row.lifecycle = Lifecycle::Complete;
    row.timestamp = r.end;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace kgalloc
