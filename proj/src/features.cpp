#include "mtrack/features.hpp"

#include "mtrack/csv.hpp"
#include "mtrack/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mtrack {

std::array<double, kMeasureCount> MeasureSet::values() const {
    return {response_time,    initiation_time, static_cast<double>(hover_count), hover_total_ms, total_distance,
            max_velocity,     max_acceleration, static_cast<double>(x_flips),    static_cast<double>(y_flips)};
}

HoverThreshold::HoverThreshold(double ms) : ms_(ms) {
    if (!(ms > 0.0) || !std::isfinite(ms)) throw ValidationError("hover threshold must be positive");
}

namespace {

void require_movement(const Trajectory& traj) {
    if (traj.events.empty()) throw NoMovementError();
}

int count_flips(const std::vector<long long>& deltas) {
    int flips = 0;
    int direction = 0;
    for (long long d : deltas) {
        if (d == 0) continue;
        const int sign = d > 0 ? 1 : -1;
        if (direction != 0 && sign != direction) ++flips;
        direction = sign;
    }
    return flips;
}

} // namespace

ResponseTimes response_and_initiation_time(const Trajectory& traj) {
    require_movement(traj);
    return {static_cast<double>(traj.submit_t_ms), static_cast<double>(traj.events.front().t_ms)};
}

HoverStats hover_metrics(const Trajectory& traj, HoverThreshold threshold, HoverOptions options) {
    require_movement(traj);
    const auto& ev = traj.events;
    HoverStats out{0, 0.0};
    auto consider = [&](double gap) {
        if (gap >= threshold.ms()) {
            ++out.count;
            out.total_ms += gap;
        }
    };
    for (std::size_t i = 1; i < ev.size(); ++i) consider(static_cast<double>(ev[i].t_ms - ev[i - 1].t_ms));
    if (options.include_terminal_gap) consider(static_cast<double>(traj.submit_t_ms - ev.back().t_ms));
    return out;
}

Kinematics kinematics(const Trajectory& traj) {
    require_movement(traj);
    const auto& ev = traj.events;
    Kinematics out{0.0, 0.0, 0.0};
    if (ev.size() < 2) return out;

    std::vector<double> velocity(ev.size() - 1);
    std::vector<double> midpoint(ev.size() - 1);
    for (std::size_t k = 0; k + 1 < ev.size(); ++k) {
        const double dx = static_cast<double>(ev[k + 1].x) - ev[k].x;
        const double dy = static_cast<double>(ev[k + 1].y) - ev[k].y;
        const double dt = static_cast<double>(ev[k + 1].t_ms - ev[k].t_ms);
        const double length = std::hypot(dx, dy);
        out.total_distance += length;
        velocity[k] = length / dt;
        midpoint[k] = 0.5 * (static_cast<double>(ev[k].t_ms) + static_cast<double>(ev[k + 1].t_ms));
    }
    out.max_velocity = *std::max_element(velocity.begin(), velocity.end());
    if (velocity.size() >= 2) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k + 1 < velocity.size(); ++k)
            best = std::max(best, (velocity[k + 1] - velocity[k]) / (midpoint[k + 1] - midpoint[k]));
        out.max_acceleration = best;
    }
    return out;
}

FlipCounts axis_flips(const Trajectory& traj) {
    require_movement(traj);
    const auto& ev = traj.events;
    std::vector<long long> dx, dy;
    for (std::size_t k = 0; k + 1 < ev.size(); ++k) {
        dx.push_back(static_cast<long long>(ev[k + 1].x) - ev[k].x);
        dy.push_back(static_cast<long long>(ev[k + 1].y) - ev[k].y);
    }
    return {count_flips(dx), count_flips(dy)};
}

MeasureSet extract_measures(const Trajectory& traj, HoverThreshold threshold, HoverOptions options) {
    const auto times = response_and_initiation_time(traj);
    const auto hovers = hover_metrics(traj, threshold, options);
    const auto kin = kinematics(traj);
    const auto flips = axis_flips(traj);
    MeasureSet m;
    m.response_time = times.response_time;
    m.initiation_time = times.initiation_time;
    m.hover_count = hovers.count;
    m.hover_total_ms = hovers.total_ms;
    m.total_distance = kin.total_distance;
    m.max_velocity = kin.max_velocity;
    m.max_acceleration = kin.max_acceleration;
    m.x_flips = flips.x;
    m.y_flips = flips.y;
    return m;
}

std::string measures_csv_header() {
    std::string h = "respondent_id,question_id,threshold_ms";
    for (auto name : kMeasureNames) {
        h += ',';
        h += name;
    }
    return h;
}

std::string format_measure_row(const MeasureRow& row) {
    std::string out = row.respondent_id + ',' + row.question_id + ',' + csv::format_double(row.threshold_ms);
    const auto& m = row.measures;
    out += ',' + csv::format_double(m.response_time);
    out += ',' + csv::format_double(m.initiation_time);
    out += ',' + std::to_string(m.hover_count);
    out += ',' + csv::format_double(m.hover_total_ms);
    out += ',' + csv::format_double(m.total_distance);
    out += ',' + csv::format_double(m.max_velocity);
    out += ',' + csv::format_double(m.max_acceleration);
    out += ',' + std::to_string(m.x_flips);
    out += ',' + std::to_string(m.y_flips);
    return out;
}

std::string write_measures_csv(const std::vector<MeasureRow>& rows) {
    std::string out = measures_csv_header() + '\n';
    for (const auto& r : rows) out += format_measure_row(r) + '\n';
    return out;
}

std::vector<MeasureRow> parse_measures_csv(std::string_view text) {
    std::vector<MeasureRow> out;
    const auto all = csv::lines(text);
    const std::string header = measures_csv_header();
    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto line = csv::trim(all[i]);
        if (line.empty()) continue;
        if (i == 0) {
            if (line != header) throw ValidationError("measures CSV: unexpected header");
            continue;
        }
        const auto f = csv::split(line);
        auto fail = [&](const std::string& msg) {
            throw ValidationError("measures CSV line " + std::to_string(i + 1) + ": " + msg);
        };
        if (f.size() != 3 + kMeasureCount) fail("expected 12 fields");
        MeasureRow row;
        row.respondent_id = std::string(f[0]);
        row.question_id = std::string(f[1]);
        std::array<double, 1 + kMeasureCount> v{};
        for (std::size_t k = 0; k < v.size(); ++k) {
            auto d = csv::parse_double(f[2 + k]);
            if (!d) fail("non-numeric field " + std::to_string(3 + k));
            v[k] = *d;
        }
        row.threshold_ms = v[0];
        auto& m = row.measures;
        m.response_time = v[1];
        m.initiation_time = v[2];
        m.hover_count = static_cast<int>(v[3]);
        m.hover_total_ms = v[4];
        m.total_distance = v[5];
        m.max_velocity = v[6];
        m.max_acceleration = v[7];
        m.x_flips = static_cast<int>(v[8]);
        m.y_flips = static_cast<int>(v[9]);
        out.push_back(std::move(row));
    }
    return out;
}

} // namespace mtrack
