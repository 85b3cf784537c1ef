#pragma once

#include "mtrack/paradata.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mtrack {

enum class ExclusionRule { no_answer, incomplete_recording, page_reload, missing_demographics, rt_cap };

inline constexpr std::array<ExclusionRule, 5> kExclusionRules = {
    ExclusionRule::no_answer, ExclusionRule::incomplete_recording, ExclusionRule::page_reload,
    ExclusionRule::missing_demographics, ExclusionRule::rt_cap};

std::string_view to_string(ExclusionRule rule);

struct ExclusionConfig {
    std::int64_t rt_cap_ms = 420000;
    bool no_answer = true;
    bool incomplete_recording = true;
    bool page_reload = true;
    bool missing_demographics = true;
    bool rt_cap = true;
    // Incomplete-recording heuristics. An empty event list, a page without any
    // batch, or an invalid trajectory is always incomplete; a gap between
    // consecutive events longer than max_event_gap_ms also is when > 0.
    std::int64_t max_event_gap_ms = 0;
};

// key = value lines; '#' starts a comment. Unknown keys are a ValidationError.
ExclusionConfig parse_exclusion_config(std::string_view text);

struct ExcludedRecord {
    std::string respondent_id;
    std::string question_id;
    ExclusionRule rule;
};

struct ExclusionReport {
    std::size_t total = 0;
    std::size_t retained = 0;
    std::array<std::size_t, kExclusionRules.size()> counts{};
    std::vector<ExcludedRecord> excluded;

    std::size_t count(ExclusionRule rule) const { return counts[static_cast<std::size_t>(rule)]; }
};

struct ExclusionResult {
    std::vector<QuestionRecord> retained;
    ExclusionReport report;
};

// Each excluded record is attributed to the first rule (in declaration order) it violates.
ExclusionResult apply_exclusions(const std::vector<QuestionRecord>& records, const ExclusionConfig& config = {});

std::string format_exclusion_report(const ExclusionReport& report);

} // namespace mtrack
