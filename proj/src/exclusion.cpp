#include "mtrack/exclusion.hpp"

#include "mtrack/csv.hpp"
#include "mtrack/error.hpp"

#include <optional>
#include <sstream>

namespace mtrack {

std::string_view to_string(ExclusionRule rule) {
    switch (rule) {
    case ExclusionRule::no_answer: return "no_answer";
    case ExclusionRule::incomplete_recording: return "incomplete_recording";
    case ExclusionRule::page_reload: return "page_reload";
    case ExclusionRule::missing_demographics: return "missing_demographics";
    case ExclusionRule::rt_cap: return "rt_cap";
    }
    return "unknown";
}

ExclusionConfig parse_exclusion_config(std::string_view text) {
    ExclusionConfig cfg;
    const auto all = csv::lines(text);
    for (std::size_t i = 0; i < all.size(); ++i) {
        std::string_view line = all[i];
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = csv::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ValidationError("exclusion config line " + std::to_string(i + 1) + ": expected key = value");
        const auto key = csv::trim(line.substr(0, eq));
        const auto value = csv::trim(line.substr(eq + 1));
        auto as_bool = [&]() {
            if (value == "true" || value == "1" || value == "on") return true;
            if (value == "false" || value == "0" || value == "off") return false;
            throw ValidationError("exclusion config: '" + std::string(key) + "' expects a boolean");
        };
        auto as_int = [&]() {
            auto v = csv::parse_int(value);
            if (!v || *v < 0)
                throw ValidationError("exclusion config: '" + std::string(key) + "' expects a non-negative integer");
            return static_cast<std::int64_t>(*v);
        };
        if (key == "rt_cap_ms") cfg.rt_cap_ms = as_int();
        else if (key == "max_event_gap_ms") cfg.max_event_gap_ms = as_int();
        else if (key == "no_answer") cfg.no_answer = as_bool();
        else if (key == "incomplete_recording") cfg.incomplete_recording = as_bool();
        else if (key == "page_reload") cfg.page_reload = as_bool();
        else if (key == "missing_demographics") cfg.missing_demographics = as_bool();
        else if (key == "rt_cap") cfg.rt_cap = as_bool();
        else throw ValidationError("exclusion config: unknown key '" + std::string(key) + "'");
    }
    return cfg;
}

namespace {

bool incomplete(const QuestionRecord& r, const ExclusionConfig& cfg) {
    const auto& ev = r.trajectory.events;
    if (!r.has_log || !r.has_submit || ev.empty()) return true;
    if (!is_valid(r.trajectory)) return true;
    if (cfg.max_event_gap_ms > 0) {
        for (std::size_t i = 1; i < ev.size(); ++i)
            if (ev[i].t_ms - ev[i - 1].t_ms > cfg.max_event_gap_ms) return true;
    }
    return false;
}

std::optional<ExclusionRule> first_violation(const QuestionRecord& r, const ExclusionConfig& cfg) {
    if (cfg.no_answer && !r.answer_position) return ExclusionRule::no_answer;
    if (cfg.incomplete_recording && incomplete(r, cfg)) return ExclusionRule::incomplete_recording;
    if (cfg.page_reload && r.reloaded) return ExclusionRule::page_reload;
    if (cfg.missing_demographics && (!r.age || !r.gender)) return ExclusionRule::missing_demographics;
    if (cfg.rt_cap && r.trajectory.submit_t_ms > cfg.rt_cap_ms) return ExclusionRule::rt_cap;
    return std::nullopt;
}

} // namespace

ExclusionResult apply_exclusions(const std::vector<QuestionRecord>& records, const ExclusionConfig& config) {
    ExclusionResult out;
    out.report.total = records.size();
    for (const auto& r : records) {
        if (auto rule = first_violation(r, config)) {
            ++out.report.counts[static_cast<std::size_t>(*rule)];
            out.report.excluded.push_back({r.respondent_id, r.question_id, *rule});
        } else {
            out.retained.push_back(r);
        }
    }
    out.report.retained = out.retained.size();
    return out;
}

std::string format_exclusion_report(const ExclusionReport& report) {
    std::ostringstream os;
    os << "rule,count\n";
    os << "total," << report.total << '\n';
    for (auto rule : kExclusionRules) os << to_string(rule) << ',' << report.count(rule) << '\n';
    os << "retained," << report.retained << '\n';
    return os.str();
}

} // namespace mtrack
