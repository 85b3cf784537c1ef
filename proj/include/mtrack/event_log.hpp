#pragma once

#include "mtrack/paradata.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mtrack {

struct Diagnostic {
    std::size_t line = 0; // 1-based; 0 when not tied to an input line
    std::string message;
};

// Events of one (session, page) merged across all received batches.
struct PageLog {
    std::string session;
    std::string page;
    std::vector<CursorEvent> events;
    std::size_t batches = 0;
    bool reloaded = false;
};

struct EventLog {
    std::vector<PageLog> pages; // order of first appearance
    std::vector<Diagnostic> diagnostics;
};

// Line-delimited batches:
//   {"session":"<id>","page":"<id>","load_epoch":<int>,"events":[[t_ms,x,y],...]}
// Malformed lines are reported and skipped. Duplicate timestamps keep the last
// event seen; consecutive events at an unchanged position are coalesced into
// the earlier one.
EventLog parse_event_log(std::string_view raw);

// One row of the question metadata sidecar:
//   respondent_id,question_id,is_target,condition,answer_position,n_options,age,gender,submit_t_ms
// Empty fields encode missing values.
struct MetadataRow {
    std::string respondent_id;
    std::string question_id;
    bool is_target = false;
    std::optional<int> condition;
    std::optional<int> answer_position;
    int n_options = 0;
    std::optional<double> age;
    std::optional<int> gender;
    std::optional<std::int64_t> submit_t_ms;
};

struct Metadata {
    std::vector<MetadataRow> rows;
    std::vector<Diagnostic> diagnostics;
};

inline constexpr std::string_view kMetadataHeader =
    "respondent_id,question_id,is_target,condition,answer_position,n_options,age,gender,submit_t_ms";

Metadata parse_metadata(std::string_view csv);

struct ParsedRecords {
    std::vector<QuestionRecord> records;
    std::vector<Diagnostic> diagnostics;
};

// Joins the event log with the metadata sidecar: one record per metadata row.
ParsedRecords assemble_records(const Metadata& metadata, const EventLog& log);
ParsedRecords parse_records(std::string_view event_log, std::string_view metadata_csv);

// Serializes trajectories into the wire format, one batch per `batch_ms`
// window up to submission (empty windows are sent as heartbeats).
std::string write_event_log(const std::vector<QuestionRecord>& records, std::int64_t batch_ms = 10000);
std::string write_metadata(const std::vector<QuestionRecord>& records);

} // namespace mtrack
