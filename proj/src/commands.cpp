#include "mtrack/commands.hpp"

#include "mtrack/csv.hpp"
#include "mtrack/error.hpp"
#include "mtrack/event_log.hpp"
#include "mtrack/exclusion.hpp"
#include "mtrack/pipeline.hpp"
#include "mtrack/synthetic.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace mtrack {

namespace fs = std::filesystem;
using nlohmann::json;

void write_file_atomic(const std::string& path, std::string_view content) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::string out_path(const RunConfig& c, const std::string& name) { return (fs::path(c.out_dir) / name).string(); }

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json grids_json(const RunConfig& c) {
    json g = json::object();
    for (auto kind : c.learners) {
        json per = json::object();
        for (auto f : {FeatureSet::full, FeatureSet::response_time_only}) {
            const std::size_t p = design_feature_names(f).size();
            json arr = json::array();
            for (const auto& hp : c.spec_for(kind, p).grid) arr.push_back(describe(kind, hp));
            per[std::string(to_string(f))] = arr;
        }
        g[std::string(to_string(kind))] = per;
    }
    return g;
}

void write_manifest(const RunConfig& c, const std::string& command, const std::vector<std::string>& outputs,
                    json extra = json::object()) {
    json m;
    m["command"] = command;
    m["created_utc"] = utc_now();
    m["seed"] = c.seed;
    m["workers"] = c.workers;
    m["config_hash"] = config_hash(c);
    m["config"] = json::parse(to_json(c));
    m["protocol"] = {{"outer_folds", c.outer_folds},
                     {"outer_stratified", true},
                     {"inner_reps", c.inner_reps},
                     {"inner_train_frac", c.train_frac},
                     {"inner_stratified", true},
                     {"importance_permutations", c.importance_permutations},
                     {"importance_data", "out_of_fold"},
                     {"hover_thresholds_ms", c.thresholds},
                     {"positive_class", "difficult"},
                     {"leakage", std::string(to_string(c.leakage))}};
    m["grids"] = grids_json(c);
    m["outputs"] = outputs;
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    write_file_atomic(out_path(c, "manifest_" + command + ".json"), m.dump(2) + "\n");
}

struct Inputs {
    std::vector<MeasureRow> measures;
    std::vector<MetadataRow> metadata;
};

Inputs read_extracted(const RunConfig& c) {
    const std::string measures = out_path(c, "measures.csv");
    const std::string metadata = out_path(c, "retained_metadata.csv");
    if (!fs::exists(measures) || !fs::exists(metadata))
        throw ValidationError("missing " + measures + " or " + metadata + "; run extract first");
    Inputs in;
    in.measures = parse_measures_csv(read_file(measures));
    const Metadata md = parse_metadata(read_file(metadata));
    if (!md.diagnostics.empty())
        throw ValidationError(metadata + " line " + std::to_string(md.diagnostics.front().line) + ": " +
                              md.diagnostics.front().message);
    in.metadata = md.rows;
    for (double thr : c.thresholds) {
        const bool present = std::any_of(in.measures.begin(), in.measures.end(),
                                         [&](const MeasureRow& r) { return r.threshold_ms == thr; });
        if (!present && !in.measures.empty())
            throw ValidationError("measures.csv has no rows for threshold " + csv::format_double(thr));
    }
    return in;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::string summary_csv(const std::vector<MeasureRow>& rows, const std::vector<QuestionRecord>& records) {
    std::map<std::pair<std::string, std::string>, std::string> group;
    std::vector<std::string> questions;
    for (const auto& r : records) {
        group[{r.respondent_id, r.question_id}] =
            !r.is_target ? "baseline" : (r.condition && *r.condition == 1 ? "difficult" : "easy");
        if (std::find(questions.begin(), questions.end(), r.question_id) == questions.end())
            questions.push_back(r.question_id);
    }
    using Key = std::tuple<std::string, double, std::string>;
    std::map<Key, std::vector<std::array<double, kMeasureCount>>> values;
    std::vector<double> thresholds;
    for (const auto& r : rows) {
        values[{r.question_id, r.threshold_ms, group[{r.respondent_id, r.question_id}]}].push_back(r.measures.values());
        if (std::find(thresholds.begin(), thresholds.end(), r.threshold_ms) == thresholds.end())
            thresholds.push_back(r.threshold_ms);
    }
    std::string out = "question,threshold_ms,condition,measure,n,mean,sd,median\n";
    for (const auto& q : questions)
        for (double thr : thresholds)
            for (const char* cond : {"easy", "difficult", "baseline"}) {
                auto it = values.find({q, thr, cond});
                if (it == values.end()) continue;
                const auto& v = it->second;
                for (std::size_t j = 0; j < kMeasureCount; ++j) {
                    std::vector<double> col;
                    for (const auto& row : v) col.push_back(row[j]);
                    double mean = 0;
                    for (double x : col) mean += x;
                    mean /= static_cast<double>(col.size());
                    double sq = 0;
                    for (double x : col) sq += (x - mean) * (x - mean);
                    const double sd = col.size() > 1 ? std::sqrt(sq / static_cast<double>(col.size() - 1)) : std::nan("");
                    out += csv::join({q, csv::format_double(thr), cond, std::string(kMeasureNames[j]),
                                      std::to_string(col.size()), csv::format_double(mean), csv::format_double(sd),
                                      csv::format_double(median(col))});
                    out += '\n';
                }
            }
    return out;
}

std::optional<Cell> parse_cell_row(const std::vector<std::string_view>& f) {
    if (f.size() != 8) return std::nullopt;
    Cell c;
    c.question = std::string(f[0]);
    c.manipulation = std::string(f[1]);
    c.personalization = parse_personalization(f[2]);
    const auto colon = f[3].find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    c.features = f[3].substr(0, colon) == "full" ? FeatureSet::full : FeatureSet::response_time_only;
    c.learner = parse_learner_kind(f[3].substr(colon + 1));
    const auto thr = csv::parse_double(f[4]);
    if (!thr) return std::nullopt;
    c.threshold_ms = *thr;
    return c;
}

} // namespace

void cmd_synth(const RunConfig& config, std::ostream& log) {
    config.validate(false);
    GeneratorConfig gen = config.generator;
    gen.effects = effect_preset(config.synth_preset);
    const SyntheticSurvey survey = gen_survey(gen, config.seed);
    const std::string events = write_event_log(survey.records);
    const std::string metadata = write_metadata(survey.records);
    const std::string truth = write_truth_csv(survey);
    write_file_atomic(out_path(config, "events.jsonl"), events);
    write_file_atomic(out_path(config, "metadata.csv"), metadata);
    write_file_atomic(out_path(config, "truth.csv"), truth);
    write_manifest(config, "synth", {"events.jsonl", "metadata.csv", "truth.csv"},
                   {{"respondents", survey.respondents.size()}, {"records", survey.records.size()}});
    log << "synth: " << survey.respondents.size() << " respondents, " << survey.records.size() << " records, preset "
        << config.synth_preset << "\n";
}

void cmd_extract(const RunConfig& config, std::ostream& log) {
    config.validate(true);
    const ParsedRecords parsed = parse_records(read_file(config.events_file()), read_file(config.metadata_file()));
    if (!parsed.diagnostics.empty()) {
        log << "extract: " << parsed.diagnostics.size() << " input diagnostics\n";
        const std::size_t shown = std::min<std::size_t>(parsed.diagnostics.size(), 10);
        for (std::size_t i = 0; i < shown; ++i)
            log << "  line " << parsed.diagnostics[i].line << ": " << parsed.diagnostics[i].message << "\n";
        if (!config.allow_partial)
            throw ValidationError(std::to_string(parsed.diagnostics.size()) +
                                  " malformed input lines; set allow_partial to extract anyway");
    }
    const ExclusionResult excluded = apply_exclusions(parsed.records, config.exclusions);
    std::vector<MeasureRow> rows;
    for (double thr : config.thresholds) {
        auto per = extract_measure_rows(excluded.retained, thr, config.hover);
        rows.insert(rows.end(), per.begin(), per.end());
    }
    if (excluded.retained.empty()) log << "extract: warning: no records retained\n";
    std::string excluded_csv = "respondent_id,question_id,rule\n";
    for (const auto& e : excluded.report.excluded)
        excluded_csv += e.respondent_id + "," + e.question_id + "," + std::string(to_string(e.rule)) + "\n";

    write_file_atomic(out_path(config, "measures.csv"), write_measures_csv(rows));
    write_file_atomic(out_path(config, "retained_metadata.csv"), write_metadata(excluded.retained));
    write_file_atomic(out_path(config, "exclusions.csv"), format_exclusion_report(excluded.report));
    write_file_atomic(out_path(config, "excluded.csv"), excluded_csv);
    write_file_atomic(out_path(config, "measure_summary.csv"), summary_csv(rows, excluded.retained));
    write_manifest(config, "extract",
                   {"measures.csv", "retained_metadata.csv", "exclusions.csv", "excluded.csv", "measure_summary.csv"},
                   {{"parsed", parsed.records.size()},
                    {"retained", excluded.report.retained},
                    {"diagnostics", parsed.diagnostics.size()}});
    log << "extract: " << excluded.report.retained << " of " << excluded.report.total << " records retained, "
        << rows.size() << " measure rows\n";
}

void cmd_personalize(const RunConfig& config, std::ostream& log) {
    config.validate(false);
    const Inputs in = read_extracted(config);
    const TableSet tables = build_tables(in.measures, in.metadata, config.thresholds);
    std::string corrected = "respondent_id,question_id,threshold_ms";
    for (auto n : kMeasureNames) corrected += "," + std::string(n);
    corrected += ",correction\n";
    std::vector<std::string> outputs = {"corrected_measures.csv"};
    for (std::size_t t = 0; t < tables.thresholds.size(); ++t)
        for (const auto& table : tables.tables[t])
            for (auto mode : config.personalization) {
                Eigen::MatrixXd values = table.data.target.values;
                const auto rows = all_rows(table.rows());
                if (mode != Personalization::none) {
                    const auto cm = mode == Personalization::baseline ? CorrectionMode::baseline
                                                                      : CorrectionMode::baseline_position;
                    const CorrectionModel model = fit_correction(cm, table.data, rows);
                    values = apply_correction(model, table.data, rows);
                    const std::string name = "coefficients_" + table.question_id + "_" +
                                             csv::format_double(table.threshold_ms) + "_" +
                                             std::string(to_string(mode)) + ".csv";
                    write_file_atomic(out_path(config, name), write_coefficients_csv(model));
                    outputs.push_back(name);
                    for (const auto& d : model.diagnostics) log << "personalize: " << table.question_id << ": " << d << "\n";
                }
                for (std::size_t i = 0; i < table.rows(); ++i) {
                    std::vector<std::string> f = {table.respondent_ids[i], table.question_id,
                                                  csv::format_double(table.threshold_ms)};
                    for (Eigen::Index j = 0; j < values.cols(); ++j)
                        f.push_back(csv::format_double(values(static_cast<Eigen::Index>(i), j)));
                    f.emplace_back(to_string(mode));
                    corrected += csv::join(f) + "\n";
                }
            }
    write_file_atomic(out_path(config, "corrected_measures.csv"), corrected);
    write_manifest(config, "personalize", outputs);
    log << "personalize: wrote " << outputs.size() << " files\n";
}

bool cmd_evaluate(const RunConfig& config, std::ostream& log) {
    config.validate(false);
    const Inputs in = read_extracted(config);
    const TableSet tables = build_tables(in.measures, in.metadata, config.thresholds);
    const std::vector<Cell> cells = enumerate_cells(config, tables);
    const std::vector<CellOutcome> outcomes = run_cells(config, tables, cells, true);
    json cell_log = json::array();
    bool all_ok = true;
    for (const auto& o : outcomes) {
        cell_log.push_back({{"id", o.cell.id()}, {"status", o.ok ? "ok" : "failed"}, {"error", o.error}});
        if (!o.ok) {
            all_ok = false;
            log << "evaluate: cell " << o.cell.id() << " failed: " << o.error << "\n";
        }
    }
    write_file_atomic(out_path(config, "report.csv"), format_report_csv(outcomes));
    write_file_atomic(out_path(config, "folds.csv"), format_folds_csv(outcomes));
    write_file_atomic(out_path(config, "best_models.csv"), format_best_csv(outcomes));
    write_manifest(config, "evaluate", {"report.csv", "folds.csv", "best_models.csv"}, {{"cells", cell_log}});
    log << "evaluate: " << outcomes.size() << " cells\n";
    return all_ok;
}

bool cmd_importance(const RunConfig& config, std::ostream& log) {
    config.validate(false);
    const std::string best_path = out_path(config, "best_models.csv");
    if (!fs::exists(best_path)) throw ValidationError("missing " + best_path + "; run evaluate first");
    const Inputs in = read_extracted(config);
    const TableSet tables = build_tables(in.measures, in.metadata, config.thresholds);
    std::vector<Cell> cells;
    const std::string text = read_file(best_path);
    const auto lines = csv::lines(text);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (csv::trim(lines[i]).empty()) continue;
        auto cell = parse_cell_row(csv::split(lines[i]));
        if (!cell) throw ValidationError(best_path + " line " + std::to_string(i + 1) + " is malformed");
        cells.push_back(*cell);
    }
    std::vector<ImportanceResult> results;
    json cell_log = json::array();
    bool all_ok = true;
    for (const auto& c : cells) {
        try {
            results.push_back(cell_importance(config, tables, c));
            cell_log.push_back({{"id", c.id()}, {"status", "ok"}, {"error", ""}});
        } catch (const ValidationError&) {
            throw;
        } catch (const Error& e) {
            all_ok = false;
            cell_log.push_back({{"id", c.id()}, {"status", "failed"}, {"error", e.what()}});
            log << "importance: cell " << c.id() << " failed: " << e.what() << "\n";
        }
    }
    write_file_atomic(out_path(config, "importance.csv"), format_importance_csv(results));
    write_manifest(config, "importance", {"importance.csv"}, {{"cells", cell_log}});
    log << "importance: " << results.size() << " models\n";
    return all_ok;
}

void cmd_report(const RunConfig& config, std::ostream& out) {
    config.validate(false);
    const std::string report_path = out_path(config, "report.csv");
    if (!fs::exists(report_path)) throw ValidationError("missing " + report_path + "; run evaluate first");
    const std::string report = read_file(report_path);

    // Best full and best response-time-only row per question.
    struct Best {
        std::vector<std::string> row;
        double accuracy = -1;
    };
    std::vector<std::string> order;
    std::map<std::string, std::map<std::string, Best>> best;
    const auto lines = csv::lines(report);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = csv::split(lines[i]);
        if (f.size() != 8) continue;
        const std::string q(f[0]);
        const std::string kind = f[3].substr(0, f[3].find(':')) == "full" ? "full" : "rt_only";
        const double acc = csv::parse_double(f[5]).value_or(-1);
        if (!best.count(q)) order.push_back(q);
        auto& b = best[q][kind];
        if (acc > b.accuracy) {
            b.accuracy = acc;
            b.row.assign(f.begin(), f.end());
        }
    }
    std::string text = "# Best predictive models\n\n"
                       "| question | variant | personalization | model | hovers_ms | accuracy | sensitivity | specificity |\n"
                       "|---|---|---|---|---|---|---|---|\n";
    auto fmt = [](const std::string& s) {
        const auto v = csv::parse_double(s);
        return v && !std::isnan(*v) ? csv::format_fixed(*v, 4) : s;
    };
    for (const auto& q : order)
        for (const char* kind : {"full", "rt_only"}) {
            auto it = best[q].find(kind);
            if (it == best[q].end()) continue;
            const auto& r = it->second.row;
            text += "| " + q + " | " + kind + " | " + r[2] + " | " + r[3].substr(r[3].find(':') + 1) + " | " + r[4] +
                    " | " + fmt(r[5]) + " | " + fmt(r[6]) + " | " + fmt(r[7]) + " |\n";
        }
    const std::string imp_path = out_path(config, "importance.csv");
    if (fs::exists(imp_path)) {
        text += "\n# Permutation importance (out-of-fold, mean accuracy drop)\n\n"
                "| question | model | rank | feature | mean_drop | sd_drop |\n|---|---|---|---|---|---|\n";
        const std::string imp = read_file(imp_path);
        std::vector<std::vector<std::string>> rows;
        const auto il = csv::lines(imp);
        for (std::size_t i = 1; i < il.size(); ++i) {
            const auto f = csv::split(il[i]);
            if (f.size() == 6) rows.emplace_back(f.begin(), f.end());
        }
        std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
            if (a[0] != b[0]) return false;
            return csv::parse_int(a[5]).value_or(0) < csv::parse_int(b[5]).value_or(0);
        });
        for (const auto& r : rows)
            text += "| " + r[0] + " | " + r[1] + " | " + r[5] + " | " + r[2] + " | " + fmt(r[3]) + " | " + fmt(r[4]) +
                    " |\n";
    }
    write_file_atomic(out_path(config, "summary.md"), text);
    write_manifest(config, "report", {"summary.md"});
    out << text;
}

std::vector<std::string> command_names() {
    return {"synth", "extract", "personalize", "evaluate", "importance", "report"};
}

int run_command(std::string_view name, const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        if (name == "synth") cmd_synth(config, err);
        else if (name == "extract") cmd_extract(config, err);
        else if (name == "personalize") cmd_personalize(config, err);
        else if (name == "evaluate") return cmd_evaluate(config, err) ? kExitOk : kExitRuntime;
        else if (name == "importance") return cmd_importance(config, err) ? kExitOk : kExitRuntime;
        else if (name == "report") cmd_report(config, out);
        else throw ValidationError("unknown command '" + std::string(name) + "'");
        return kExitOk;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

} // namespace mtrack
