#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mtrack {

// One mousemove sample: milliseconds since page load, viewport CSS pixels.
struct CursorEvent {
    std::int64_t t_ms = 0;
    std::int32_t x = 0;
    std::int32_t y = 0;

    bool operator==(const CursorEvent&) const = default;
};

struct Trajectory {
    std::string page_id;
    std::vector<CursorEvent> events;
    std::int64_t submit_t_ms = 0;

    bool operator==(const Trajectory&) const = default;
};

// Lists every violated trajectory invariant; empty means valid.
std::vector<std::string> trajectory_violations(const Trajectory& trajectory);
inline bool is_valid(const Trajectory& trajectory) { return trajectory_violations(trajectory).empty(); }

struct QuestionRecord {
    std::string respondent_id;
    std::string question_id;
    Trajectory trajectory;
    bool is_target = false;
    std::optional<int> condition;        // 0 easy, 1 difficult; target questions only
    std::optional<int> answer_position;  // 1-based
    int n_options = 0;
    std::optional<double> age;
    std::optional<int> gender;           // binary indicator
    bool has_submit = true;              // metadata carried a submit time
    bool has_log = true;                 // at least one event batch was received
    bool reloaded = false;               // a batch arrived with a newer page-load epoch

    bool operator==(const QuestionRecord&) const = default;
};

} // namespace mtrack
