#pragma once

#include "mtrack/analysis.hpp"
#include "mtrack/exclusion.hpp"
#include "mtrack/learners.hpp"
#include "mtrack/synthetic.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mtrack {

struct RunConfig {
    // Inputs; empty paths mean the synth outputs in `out_dir`.
    std::string events_path;
    std::string metadata_path;

    std::string synth_preset = "language_complexity";
    GeneratorConfig generator = default_generator_config();

    std::vector<double> thresholds = {kDefaultHoverThresholds.begin(), kDefaultHoverThresholds.end()};
    HoverOptions hover;
    ExclusionConfig exclusions;

    std::vector<Personalization> personalization = {Personalization::none};
    LeakagePolicy leakage = LeakagePolicy::fold_local;
    std::vector<LearnerKind> learners = {kAllLearners.begin(), kAllLearners.end()};
    bool response_time_only = true; // also evaluate response time + age + gender
    std::map<LearnerKind, std::vector<Hyperparameters>> grids; // overrides of the default grids
    LearnerOptions learner_options;

    int outer_folds = 10;
    int inner_reps = 500;
    double train_frac = 0.75;
    int importance_permutations = 500;

    std::uint64_t seed = 1;
    int workers = 1;
    std::string out_dir = "out";
    std::map<std::string, std::string> manipulations; // question id -> tag for the report
    bool allow_partial = false; // extract despite malformed input lines

    std::string events_file() const;
    std::string metadata_file() const;
    HyperparameterSpec spec_for(LearnerKind kind, std::size_t n_features) const;
    std::string manipulation_for(const std::string& question) const;

    // Throws ValidationError. Paths are checked only when `check_inputs`.
    void validate(bool check_inputs) const;
};

// JSON; relative paths resolve against `base_dir`. Unknown keys are an error.
RunConfig parse_run_config(std::string_view json_text, const std::string& base_dir = "");
RunConfig load_run_config(const std::string& path);

// Canonical JSON of the resolved configuration; stable key order.
std::string to_json(const RunConfig& config);
// FNV-1a of to_json without the worker count and output directory.
std::string config_hash(const RunConfig& config);

} // namespace mtrack
