#include "mtrack/paradata.hpp"

namespace mtrack {

std::vector<std::string> trajectory_violations(const Trajectory& trajectory) {
    std::vector<std::string> out;
    const auto& ev = trajectory.events;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        if (ev[i].t_ms < 0) out.push_back("negative timestamp at event " + std::to_string(i));
        if (i == 0) continue;
        if (ev[i].t_ms <= ev[i - 1].t_ms)
            out.push_back("timestamps not strictly increasing at event " + std::to_string(i));
        if (ev[i].x == ev[i - 1].x && ev[i].y == ev[i - 1].y)
            out.push_back("unchanged position at event " + std::to_string(i));
    }
    if (!ev.empty() && trajectory.submit_t_ms < ev.back().t_ms)
        out.push_back("submit time precedes last event");
    return out;
}

} // namespace mtrack
