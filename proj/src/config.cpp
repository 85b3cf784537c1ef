#include "mtrack/config.hpp"

#include "mtrack/error.hpp"
#include "mtrack/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace mtrack {

using nlohmann::json;
namespace fs = std::filesystem;

std::string RunConfig::events_file() const {
    return events_path.empty() ? (fs::path(out_dir) / "events.jsonl").string() : events_path;
}

std::string RunConfig::metadata_file() const {
    return metadata_path.empty() ? (fs::path(out_dir) / "metadata.csv").string() : metadata_path;
}

HyperparameterSpec RunConfig::spec_for(LearnerKind kind, std::size_t n_features) const {
    auto it = grids.find(kind);
    if (it == grids.end()) return default_spec(kind, n_features);
    HyperparameterSpec spec{kind, {}};
    for (auto hp : it->second) {
        if (kind == LearnerKind::random_forest)
            hp.mtry = std::clamp(hp.mtry, 1, static_cast<int>(std::max<std::size_t>(n_features, 1)));
        if (std::find(spec.grid.begin(), spec.grid.end(), hp) == spec.grid.end()) spec.grid.push_back(hp);
    }
    return spec;
}

std::string RunConfig::manipulation_for(const std::string& question) const {
    auto it = manipulations.find(question);
    if (it != manipulations.end()) return it->second;
    if (events_path.empty()) return synth_preset;
    return "unspecified";
}

void RunConfig::validate(bool check_inputs) const {
    auto bad = [](const std::string& m) { throw ValidationError("config: " + m); };
    if (thresholds.empty()) bad("thresholds must not be empty");
    for (double t : thresholds)
        if (!(t > 0.0) || !std::isfinite(t)) bad("thresholds must be positive");
    for (std::size_t a = 0; a < thresholds.size(); ++a)
        for (std::size_t b = a + 1; b < thresholds.size(); ++b)
            if (thresholds[a] == thresholds[b]) bad("thresholds must be distinct");
    if (personalization.empty()) bad("personalization must not be empty");
    if (learners.empty()) bad("learners must not be empty");
    if (outer_folds < 2) bad("cv.outer_folds must be >= 2");
    if (inner_reps < 1) bad("cv.inner_reps must be >= 1");
    if (!(train_frac > 0.0 && train_frac < 1.0)) bad("cv.train_frac must lie in (0, 1)");
    if (importance_permutations < 1) bad("importance.permutations must be >= 1");
    if (workers < 1) bad("workers must be >= 1");
    if (out_dir.empty()) bad("out must not be empty");
    for (const auto& [kind, grid] : grids) {
        if (grid.empty()) bad(std::string("grid for ") + std::string(to_string(kind)) + " is empty");
        mtrack::validate(spec_for(kind, kMeasureCount + 2), kMeasureCount + 2);
    }
    effect_preset(synth_preset);
    generator.validate();
    if (check_inputs) {
        if (!fs::exists(events_file())) bad("event log " + events_file() + " does not exist");
        if (!fs::exists(metadata_file())) bad("metadata " + metadata_file() + " does not exist");
    }
}

namespace {

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw ValidationError("config: " + where + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        if (!known) throw ValidationError("config: unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    auto it = obj.find(key);
    if (it != obj.end()) out = it->get<T>();
}

std::string resolve(const std::string& base, const std::string& path) {
    if (path.empty() || base.empty() || fs::path(path).is_absolute()) return path;
    return (fs::path(base) / path).lexically_normal().string();
}

Hyperparameters parse_hp(const json& j, LearnerKind kind) {
    const std::string where = "grids." + std::string(to_string(kind));
    allow_keys(j, where, {"complexity", "n_trees", "mtry", "depth", "shrinkage", "cost", "gamma", "hidden", "decay"});
    Hyperparameters hp;
    read(j, "complexity", hp.complexity);
    read(j, "n_trees", hp.n_trees);
    read(j, "mtry", hp.mtry);
    read(j, "depth", hp.depth);
    read(j, "shrinkage", hp.shrinkage);
    read(j, "cost", hp.cost);
    read(j, "gamma", hp.gamma);
    read(j, "hidden", hp.hidden);
    read(j, "decay", hp.decay);
    return hp;
}

json hp_json(LearnerKind kind, const Hyperparameters& hp) {
    switch (kind) {
    case LearnerKind::logistic: return json::object();
    case LearnerKind::tree: return {{"complexity", hp.complexity}};
    case LearnerKind::random_forest: return {{"n_trees", hp.n_trees}, {"mtry", hp.mtry}};
    case LearnerKind::boosting: return {{"n_trees", hp.n_trees}, {"depth", hp.depth}, {"shrinkage", hp.shrinkage}};
    case LearnerKind::svm: return {{"cost", hp.cost}, {"gamma", hp.gamma}};
    case LearnerKind::neural_net: return {{"hidden", hp.hidden}, {"decay", hp.decay}};
    }
    return json::object();
}

void parse_exclusions(const json& j, ExclusionConfig& e) {
    allow_keys(j, "exclusions", {"rt_cap_ms", "no_answer", "incomplete_recording", "page_reload",
                                 "missing_demographics", "rt_cap", "max_event_gap_ms"});
    read(j, "rt_cap_ms", e.rt_cap_ms);
    read(j, "no_answer", e.no_answer);
    read(j, "incomplete_recording", e.incomplete_recording);
    read(j, "page_reload", e.page_reload);
    read(j, "missing_demographics", e.missing_demographics);
    read(j, "rt_cap", e.rt_cap);
    read(j, "max_event_gap_ms", e.max_event_gap_ms);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

RunConfig parse_run_config(std::string_view text, const std::string& base_dir) {
    RunConfig c;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    try {
        allow_keys(j, "config",
                   {"input", "synth", "thresholds", "hover", "exclusions", "exclusion_config", "personalization",
                    "leakage", "learners", "response_time_only", "grids", "learner_options", "cv", "importance",
                    "seed", "workers", "out", "manipulations", "allow_partial"});
        if (j.contains("input")) {
            const auto& in = j["input"];
            allow_keys(in, "input", {"events", "metadata"});
            read(in, "events", c.events_path);
            read(in, "metadata", c.metadata_path);
            c.events_path = resolve(base_dir, c.events_path);
            c.metadata_path = resolve(base_dir, c.metadata_path);
        }
        if (j.contains("synth")) {
            const auto& s = j["synth"];
            allow_keys(s, "synth", {"preset", "n", "log_speed_sd", "timing_noise_sd", "pause_rate", "jitter_px",
                                    "cadence_ms", "excursion_rate"});
            read(s, "preset", c.synth_preset);
            read(s, "n", c.generator.n_respondents);
            read(s, "log_speed_sd", c.generator.log_speed_sd);
            read(s, "timing_noise_sd", c.generator.timing_noise_sd);
            read(s, "pause_rate", c.generator.pause_rate);
            read(s, "jitter_px", c.generator.jitter_px);
            read(s, "cadence_ms", c.generator.cadence_ms);
            read(s, "excursion_rate", c.generator.excursion_rate);
        }
        if (j.contains("thresholds")) c.thresholds = j["thresholds"].get<std::vector<double>>();
        if (j.contains("hover")) {
            allow_keys(j["hover"], "hover", {"include_terminal_gap"});
            read(j["hover"], "include_terminal_gap", c.hover.include_terminal_gap);
        }
        if (j.contains("exclusion_config"))
            c.exclusions = parse_exclusion_config(slurp(resolve(base_dir, j["exclusion_config"].get<std::string>())));
        if (j.contains("exclusions")) parse_exclusions(j["exclusions"], c.exclusions);
        if (j.contains("personalization")) {
            c.personalization.clear();
            const auto& p = j["personalization"];
            if (p.is_string()) c.personalization.push_back(parse_personalization(p.get<std::string>()));
            else
                for (const auto& v : p) c.personalization.push_back(parse_personalization(v.get<std::string>()));
        }
        if (j.contains("leakage")) c.leakage = parse_leakage(j["leakage"].get<std::string>());
        if (j.contains("learners")) {
            c.learners.clear();
            for (const auto& v : j["learners"]) c.learners.push_back(parse_learner_kind(v.get<std::string>()));
        }
        read(j, "response_time_only", c.response_time_only);
        if (j.contains("grids")) {
            const auto& g = j["grids"];
            if (!g.is_object()) throw ValidationError("config: grids must be an object");
            for (auto it = g.begin(); it != g.end(); ++it) {
                const LearnerKind kind = parse_learner_kind(it.key());
                auto& grid = c.grids[kind];
                for (const auto& hp : it.value()) grid.push_back(parse_hp(hp, kind));
            }
        }
        if (j.contains("learner_options")) {
            const auto& o = j["learner_options"];
            allow_keys(o, "learner_options", {"logistic", "tree", "boosting", "svm", "neural_net"});
            auto& lo = c.learner_options;
            if (o.contains("logistic")) {
                allow_keys(o["logistic"], "learner_options.logistic", {"max_iter", "tolerance"});
                read(o["logistic"], "max_iter", lo.logistic.max_iter);
                read(o["logistic"], "tolerance", lo.logistic.tolerance);
            }
            if (o.contains("tree")) {
                allow_keys(o["tree"], "learner_options.tree", {"min_split", "min_leaf", "max_depth"});
                read(o["tree"], "min_split", lo.tree.min_split);
                read(o["tree"], "min_leaf", lo.tree.min_leaf);
                read(o["tree"], "max_depth", lo.tree.max_depth);
            }
            if (o.contains("boosting")) {
                allow_keys(o["boosting"], "learner_options.boosting", {"min_leaf"});
                read(o["boosting"], "min_leaf", lo.boosting.min_leaf);
            }
            if (o.contains("svm")) {
                allow_keys(o["svm"], "learner_options.svm", {"tolerance", "max_iter"});
                read(o["svm"], "tolerance", lo.svm.tolerance);
                read(o["svm"], "max_iter", lo.svm.max_iter);
            }
            if (o.contains("neural_net")) {
                allow_keys(o["neural_net"], "learner_options.neural_net",
                           {"restarts", "max_iter", "init_range", "grad_tol"});
                read(o["neural_net"], "restarts", lo.neural_net.restarts);
                read(o["neural_net"], "max_iter", lo.neural_net.max_iter);
                read(o["neural_net"], "init_range", lo.neural_net.init_range);
                read(o["neural_net"], "grad_tol", lo.neural_net.grad_tol);
            }
        }
        if (j.contains("cv")) {
            allow_keys(j["cv"], "cv", {"outer_folds", "inner_reps", "train_frac"});
            read(j["cv"], "outer_folds", c.outer_folds);
            read(j["cv"], "inner_reps", c.inner_reps);
            read(j["cv"], "train_frac", c.train_frac);
        }
        if (j.contains("importance")) {
            allow_keys(j["importance"], "importance", {"permutations"});
            read(j["importance"], "permutations", c.importance_permutations);
        }
        read(j, "seed", c.seed);
        read(j, "workers", c.workers);
        if (j.contains("out")) c.out_dir = resolve(base_dir, j["out"].get<std::string>());
        if (j.contains("manipulations")) c.manipulations = j["manipulations"].get<std::map<std::string, std::string>>();
        read(j, "allow_partial", c.allow_partial);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return c;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(slurp(path), fs::path(path).parent_path().string());
}

namespace {

json config_json(const RunConfig& c, bool with_runtime) {
    json j;
    j["input"] = {{"events", c.events_path}, {"metadata", c.metadata_path}};
    const auto& g = c.generator;
    j["synth"] = {{"preset", c.synth_preset},         {"n", g.n_respondents},
                  {"log_speed_sd", g.log_speed_sd},   {"timing_noise_sd", g.timing_noise_sd},
                  {"pause_rate", g.pause_rate},       {"jitter_px", g.jitter_px},
                  {"cadence_ms", g.cadence_ms},       {"excursion_rate", g.excursion_rate}};
    j["thresholds"] = c.thresholds;
    j["hover"] = {{"include_terminal_gap", c.hover.include_terminal_gap}};
    const auto& e = c.exclusions;
    j["exclusions"] = {{"rt_cap_ms", e.rt_cap_ms},
                       {"no_answer", e.no_answer},
                       {"incomplete_recording", e.incomplete_recording},
                       {"page_reload", e.page_reload},
                       {"missing_demographics", e.missing_demographics},
                       {"rt_cap", e.rt_cap},
                       {"max_event_gap_ms", e.max_event_gap_ms}};
    json p = json::array();
    for (auto m : c.personalization) p.push_back(std::string(to_string(m)));
    j["personalization"] = p;
    j["leakage"] = std::string(to_string(c.leakage));
    json l = json::array();
    for (auto k : c.learners) l.push_back(std::string(to_string(k)));
    j["learners"] = l;
    j["response_time_only"] = c.response_time_only;
    json grids = json::object();
    for (const auto& [kind, grid] : c.grids) {
        json arr = json::array();
        for (const auto& hp : grid) arr.push_back(hp_json(kind, hp));
        grids[std::string(to_string(kind))] = arr;
    }
    j["grids"] = grids;
    const auto& lo = c.learner_options;
    j["learner_options"] = {
        {"logistic", {{"max_iter", lo.logistic.max_iter}, {"tolerance", lo.logistic.tolerance}}},
        {"tree", {{"min_split", lo.tree.min_split}, {"min_leaf", lo.tree.min_leaf}, {"max_depth", lo.tree.max_depth}}},
        {"boosting", {{"min_leaf", lo.boosting.min_leaf}}},
        {"svm", {{"tolerance", lo.svm.tolerance}, {"max_iter", lo.svm.max_iter}}},
        {"neural_net",
         {{"restarts", lo.neural_net.restarts},
          {"max_iter", lo.neural_net.max_iter},
          {"init_range", lo.neural_net.init_range},
          {"grad_tol", lo.neural_net.grad_tol}}}};
    j["cv"] = {{"outer_folds", c.outer_folds}, {"inner_reps", c.inner_reps}, {"train_frac", c.train_frac}};
    j["importance"] = {{"permutations", c.importance_permutations}};
    j["seed"] = c.seed;
    j["manipulations"] = c.manipulations;
    j["allow_partial"] = c.allow_partial;
    if (with_runtime) {
        j["workers"] = c.workers;
        j["out"] = c.out_dir;
    }
    return j;
}

} // namespace

std::string to_json(const RunConfig& config) { return config_json(config, true).dump(2) + "\n"; }

std::string config_hash(const RunConfig& config) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(hash_label(config_json(config, false).dump())));
    return buf;
}

} // namespace mtrack
