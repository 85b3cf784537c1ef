#pragma once

#include "mtrack/paradata.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mtrack {

inline constexpr std::size_t kMeasureCount = 9;

inline constexpr std::array<std::string_view, kMeasureCount> kMeasureNames = {
    "response_time", "initiation_time", "hover_count", "hover_total_ms", "total_distance",
    "max_velocity",  "max_acceleration", "x_flips",    "y_flips"};

enum class Measure : std::size_t {
    response_time,
    initiation_time,
    hover_count,
    hover_total_ms,
    total_distance,
    max_velocity,
    max_acceleration,
    x_flips,
    y_flips
};

// Units: ms, px, px/ms, px/ms^2.
struct MeasureSet {
    double response_time = 0;
    double initiation_time = 0;
    int hover_count = 0;
    double hover_total_ms = 0;
    double total_distance = 0;
    double max_velocity = 0;
    double max_acceleration = 0;
    int x_flips = 0;
    int y_flips = 0;

    std::array<double, kMeasureCount> values() const;
    bool operator==(const MeasureSet&) const = default;
};

class HoverThreshold {
public:
    explicit HoverThreshold(double ms);
    double ms() const { return ms_; }

private:
    double ms_;
};

inline constexpr std::array<double, 4> kDefaultHoverThresholds = {250, 500, 2000, 3000};

struct HoverOptions {
    // Count the pause between the last movement and submission as a hover.
    bool include_terminal_gap = true;
};

struct ResponseTimes {
    double response_time;
    double initiation_time;
};

struct HoverStats {
    int count;
    double total_ms;
};

struct Kinematics {
    double total_distance;
    double max_velocity;
    double max_acceleration;
};

struct FlipCounts {
    int x;
    int y;
};

// All of these throw NoMovementError for an empty event list.
ResponseTimes response_and_initiation_time(const Trajectory& traj);

// A hover is an inter-event gap (or the terminal gap to submission) lasting at
// least the threshold. The pre-movement phase is initiation time, never a hover.
HoverStats hover_metrics(const Trajectory& traj, HoverThreshold threshold, HoverOptions options = {});

// Finite differences on the raw samples: segment velocities, then accelerations
// between consecutive segment midpoints. max_acceleration is the signed maximum.
Kinematics kinematics(const Trajectory& traj);

// Direction reversals among the nonzero per-axis deltas; zero deltas are skipped.
FlipCounts axis_flips(const Trajectory& traj);

MeasureSet extract_measures(const Trajectory& traj, HoverThreshold threshold, HoverOptions options = {});

// Measures CSV:
// respondent_id,question_id,threshold_ms,response_time,...,y_flips
struct MeasureRow {
    std::string respondent_id;
    std::string question_id;
    double threshold_ms = 0;
    MeasureSet measures;
};

std::string measures_csv_header();
std::string format_measure_row(const MeasureRow& row);
std::string write_measures_csv(const std::vector<MeasureRow>& rows);
// Throws ValidationError naming the offending line.
std::vector<MeasureRow> parse_measures_csv(std::string_view text);

} // namespace mtrack
