#include "mtrack/event_log.hpp"

#include "mtrack/csv.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <sstream>
#include <utility>

namespace mtrack {

namespace {

using json = nlohmann::json;

struct RawEvent {
    CursorEvent event;
    std::size_t order = 0; // arrival order, later wins on duplicate timestamps
};

struct PageAccumulator {
    PageLog log;
    std::vector<RawEvent> raw;
    std::int64_t last_epoch = 0;
    bool any_epoch = false;
};

std::optional<std::int64_t> as_int(const json& v) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d == static_cast<double>(static_cast<std::int64_t>(d))) return static_cast<std::int64_t>(d);
    }
    return std::nullopt;
}

std::optional<std::string> id_field(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return std::nullopt;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    return std::nullopt;
}

} // namespace

EventLog parse_event_log(std::string_view raw) {
    EventLog out;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    std::vector<PageAccumulator> acc;
    std::size_t arrival = 0;

    const auto all_lines = csv::lines(raw);
    for (std::size_t ln = 0; ln < all_lines.size(); ++ln) {
        const std::string_view line = csv::trim(all_lines[ln]);
        const std::size_t line_no = ln + 1;
        if (line.empty()) continue;
        auto fail = [&](std::string msg) { out.diagnostics.push_back({line_no, std::move(msg)}); };

        json obj = json::parse(line.begin(), line.end(), nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            fail("not a JSON object");
            continue;
        }
        auto session = id_field(obj, "session");
        auto page = id_field(obj, "page");
        if (!session) { fail("missing field 'session'"); continue; }
        if (!page) { fail("missing field 'page'"); continue; }
        auto epoch_it = obj.find("load_epoch");
        if (epoch_it == obj.end()) { fail("missing field 'load_epoch'"); continue; }
        auto epoch = as_int(*epoch_it);
        if (!epoch) { fail("non-integer 'load_epoch'"); continue; }
        auto events_it = obj.find("events");
        if (events_it == obj.end()) { fail("missing field 'events'"); continue; }
        if (!events_it->is_array()) { fail("'events' is not an array"); continue; }

        std::vector<CursorEvent> batch;
        bool ok = true;
        static const char* names[] = {"t_ms", "x", "y"};
        for (std::size_t e = 0; e < events_it->size() && ok; ++e) {
            const json& item = (*events_it)[e];
            if (!item.is_array()) {
                fail("event " + std::to_string(e) + " is not an array");
                ok = false;
                break;
            }
            if (item.size() < 3) {
                fail("event " + std::to_string(e) + " missing field '" + names[item.size()] + "'");
                ok = false;
                break;
            }
            std::int64_t vals[3];
            for (int k = 0; k < 3; ++k) {
                auto v = as_int(item[k]);
                if (!v) {
                    fail("event " + std::to_string(e) + " has non-numeric '" + names[k] + "'");
                    ok = false;
                    break;
                }
                vals[k] = *v;
            }
            if (!ok) break;
            if (vals[0] < 0) {
                fail("event " + std::to_string(e) + " has negative timestamp");
                ok = false;
                break;
            }
            batch.push_back({vals[0], static_cast<std::int32_t>(vals[1]), static_cast<std::int32_t>(vals[2])});
        }
        if (!ok) continue;

        auto key = std::make_pair(*session, *page);
        auto [it, inserted] = index.emplace(key, acc.size());
        if (inserted) {
            PageAccumulator a;
            a.log.session = *session;
            a.log.page = *page;
            acc.push_back(std::move(a));
        }
        PageAccumulator& a = acc[it->second];
        if (a.any_epoch && *epoch > a.last_epoch) a.log.reloaded = true;
        if (!a.any_epoch || *epoch > a.last_epoch) a.last_epoch = *epoch;
        a.any_epoch = true;
        ++a.log.batches;

        std::map<std::int64_t, std::size_t> seen_in_batch;
        for (const auto& ev : batch) {
            if (seen_in_batch.count(ev.t_ms))
                out.diagnostics.push_back({line_no, "duplicate timestamp " + std::to_string(ev.t_ms) +
                                                        " within batch; keeping last event"});
            seen_in_batch[ev.t_ms] = 1;
            a.raw.push_back({ev, arrival++});
        }
    }

    for (auto& a : acc) {
        std::stable_sort(a.raw.begin(), a.raw.end(), [](const RawEvent& l, const RawEvent& r) {
            if (l.event.t_ms != r.event.t_ms) return l.event.t_ms < r.event.t_ms;
            return l.order < r.order;
        });
        std::vector<CursorEvent> merged;
        merged.reserve(a.raw.size());
        for (std::size_t i = 0; i < a.raw.size(); ++i) {
            if (i + 1 < a.raw.size() && a.raw[i + 1].event.t_ms == a.raw[i].event.t_ms) continue;
            const CursorEvent& ev = a.raw[i].event;
            if (!merged.empty() && merged.back().x == ev.x && merged.back().y == ev.y) continue;
            merged.push_back(ev);
        }
        a.log.events = std::move(merged);
        out.pages.push_back(std::move(a.log));
    }
    return out;
}

Metadata parse_metadata(std::string_view text) {
    Metadata out;
    const auto all_lines = csv::lines(text);
    bool header_seen = false;
    for (std::size_t ln = 0; ln < all_lines.size(); ++ln) {
        const std::string_view line = csv::trim(all_lines[ln]);
        const std::size_t line_no = ln + 1;
        if (line.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            if (line == kMetadataHeader) continue;
            if (line.starts_with("respondent_id")) {
                out.diagnostics.push_back({line_no, "unexpected metadata header"});
                continue;
            }
        }
        auto fail = [&](std::string msg) { out.diagnostics.push_back({line_no, std::move(msg)}); };
        const auto f = csv::split(line);
        if (f.size() != 9) {
            fail("expected 9 fields, found " + std::to_string(f.size()));
            continue;
        }
        MetadataRow row;
        row.respondent_id = std::string(csv::trim(f[0]));
        row.question_id = std::string(csv::trim(f[1]));
        if (row.respondent_id.empty() || row.question_id.empty()) { fail("missing identifier"); continue; }
        auto is_target = csv::parse_int(f[2]);
        if (!is_target || (*is_target != 0 && *is_target != 1)) { fail("is_target must be 0 or 1"); continue; }
        row.is_target = *is_target == 1;
        auto optional_int = [&](std::string_view s, const char* name, std::optional<int>& dst) {
            if (csv::trim(s).empty()) return true;
            auto v = csv::parse_int(s);
            if (!v) {
                fail(std::string("non-numeric '") + name + "'");
                return false;
            }
            dst = static_cast<int>(*v);
            return true;
        };
        if (!optional_int(f[3], "condition", row.condition)) continue;
        if (row.condition && *row.condition != 0 && *row.condition != 1) { fail("condition must be 0 or 1"); continue; }
        if (row.is_target != row.condition.has_value()) {
            fail(row.is_target ? "target question without condition" : "baseline question with condition");
            continue;
        }
        if (!optional_int(f[4], "answer_position", row.answer_position)) continue;
        auto n_options = csv::parse_int(f[5]);
        if (!n_options || *n_options < 1) { fail("n_options must be a positive integer"); continue; }
        row.n_options = static_cast<int>(*n_options);
        if (row.answer_position && (*row.answer_position < 1 || *row.answer_position > row.n_options)) {
            fail("answer_position outside 1..n_options");
            continue;
        }
        if (!csv::trim(f[6]).empty()) {
            auto age = csv::parse_double(f[6]);
            if (!age) { fail("non-numeric 'age'"); continue; }
            row.age = *age;
        }
        if (!optional_int(f[7], "gender", row.gender)) continue;
        if (!csv::trim(f[8]).empty()) {
            auto submit = csv::parse_int(f[8]);
            if (!submit || *submit < 0) { fail("submit_t_ms must be a non-negative integer"); continue; }
            row.submit_t_ms = *submit;
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

ParsedRecords assemble_records(const Metadata& metadata, const EventLog& log) {
    ParsedRecords out;
    out.diagnostics = metadata.diagnostics;
    out.diagnostics.insert(out.diagnostics.end(), log.diagnostics.begin(), log.diagnostics.end());

    std::map<std::pair<std::string, std::string>, const PageLog*> pages;
    for (const auto& p : log.pages) pages[{p.session, p.page}] = &p;
    std::map<std::pair<std::string, std::string>, bool> used;

    for (const auto& row : metadata.rows) {
        auto key = std::make_pair(row.respondent_id, row.question_id);
        if (used.count(key)) {
            out.diagnostics.push_back({0, "duplicate metadata for respondent " + row.respondent_id +
                                              ", question " + row.question_id});
            continue;
        }
        used[key] = true;
        QuestionRecord rec;
        rec.respondent_id = row.respondent_id;
        rec.question_id = row.question_id;
        rec.is_target = row.is_target;
        rec.condition = row.condition;
        rec.answer_position = row.answer_position;
        rec.n_options = row.n_options;
        rec.age = row.age;
        rec.gender = row.gender;
        rec.trajectory.page_id = row.question_id;
        rec.has_submit = row.submit_t_ms.has_value();
        rec.trajectory.submit_t_ms = row.submit_t_ms.value_or(0);
        auto it = pages.find(key);
        if (it == pages.end()) {
            rec.has_log = false;
        } else {
            rec.trajectory.events = it->second->events;
            rec.reloaded = it->second->reloaded;
        }
        out.records.push_back(std::move(rec));
    }
    for (const auto& p : log.pages) {
        if (!used.count({p.session, p.page}))
            out.diagnostics.push_back({0, "event log for session " + p.session + ", page " + p.page +
                                              " has no metadata row"});
    }
    return out;
}

ParsedRecords parse_records(std::string_view event_log, std::string_view metadata_csv) {
    return assemble_records(parse_metadata(metadata_csv), parse_event_log(event_log));
}

std::string write_event_log(const std::vector<QuestionRecord>& records, std::int64_t batch_ms) {
    std::ostringstream os;
    for (const auto& rec : records) {
        if (!rec.has_log) continue;
        const auto& ev = rec.trajectory.events;
        std::int64_t end = rec.trajectory.submit_t_ms;
        if (!ev.empty()) end = std::max(end, ev.back().t_ms);
        const std::int64_t n_batches = end / batch_ms + 1;
        std::size_t next = 0;
        for (std::int64_t b = 0; b < n_batches; ++b) {
            os << "{\"session\":" << json(rec.respondent_id).dump() << ",\"page\":" << json(rec.question_id).dump()
               << ",\"load_epoch\":1,\"events\":[";
            bool first = true;
            while (next < ev.size() && (ev[next].t_ms < (b + 1) * batch_ms || b == n_batches - 1)) {
                if (!first) os << ',';
                first = false;
                os << '[' << ev[next].t_ms << ',' << ev[next].x << ',' << ev[next].y << ']';
                ++next;
            }
            os << "]}\n";
        }
        if (rec.reloaded) {
            os << "{\"session\":" << json(rec.respondent_id).dump() << ",\"page\":" << json(rec.question_id).dump()
               << ",\"load_epoch\":2,\"events\":[]}\n";
        }
    }
    return os.str();
}

std::string write_metadata(const std::vector<QuestionRecord>& records) {
    std::ostringstream os;
    os << kMetadataHeader << '\n';
    for (const auto& r : records) {
        os << r.respondent_id << ',' << r.question_id << ',' << (r.is_target ? 1 : 0) << ',';
        if (r.condition) os << *r.condition;
        os << ',';
        if (r.answer_position) os << *r.answer_position;
        os << ',' << r.n_options << ',';
        if (r.age) os << csv::format_double(*r.age);
        os << ',';
        if (r.gender) os << *r.gender;
        os << ',';
        if (r.has_submit) os << r.trajectory.submit_t_ms;
        os << '\n';
    }
    return os.str();
}

} // namespace mtrack
