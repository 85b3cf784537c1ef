#pragma once

#include "mtrack/features.hpp"
#include "mtrack/paradata.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mtrack {

// Page layout of one question: options stacked vertically, submit button below.
struct QuestionGeometry {
    std::string id;
    bool is_target = false;
    int n_options = 4;
    double start_x = 640, start_y = 120; // cursor position at page load
    double option_x = 300, first_option_y = 260, option_spacing = 45;
    double submit_x = 640, submit_y = 620;
    double initiation_ms = 1800; // reading time before the first movement

    double option_y(int position) const { return first_option_y + option_spacing * (position - 1); }
};

// Shifts applied to difficult-condition trajectories. All-neutral values leave
// both conditions identically distributed.
struct EffectSpec {
    std::string name = "null";
    double rt_multiplier = 1.0;         // every duration on the page
    double initiation_multiplier = 1.0; // reading phase only, on top of rt_multiplier
    double extra_hover_rate = 0.0;      // Poisson rate of additional pauses
    double extra_x_flip_rate = 0.0;     // Poisson rate of horizontal back-and-forth excursions
    double extra_y_flip_rate = 0.0;     // Poisson rate of excursions to a neighbouring option and back
    // Dwell (ms) added before submitting, by 1-based answer position; applies
    // in both conditions.
    std::vector<double> position_effect_ms;

    bool is_identity() const;
};

// null, language_complexity, option_shuffle, response_time. Throws ValidationError.
EffectSpec effect_preset(std::string_view name);
std::vector<std::string> effect_preset_names();

struct RespondentProfile {
    std::string id;
    double speed = 1.0;            // multiplies every duration
    double pause_propensity = 0.6; // Poisson rate of pauses per page
    double jitter = 0.8;           // sd of positional noise, px
    double age = 40;
    int gender = 0;
};

struct GeneratorConfig {
    std::size_t n_respondents = 1000;
    double log_speed_sd = 0.25; // person effect on all timings
    double pause_rate = 0.6;
    double pause_log_sd = 0.5;
    double jitter_px = 0.8;
    double jitter_log_sd = 0.3;
    double age_min = 18, age_max = 70;
    double gender_p = 0.5;
    double timing_noise_sd = 0.2; // per-page log-normal noise on durations
    double cadence_ms = 15;
    double pause_ms = 1800;       // median pause length
    double excursion_rate = 0.3;  // baseline rate of each excursion kind
    double dwell_ms = 350;
    double terminal_ms = 220;
    std::vector<QuestionGeometry> questions;
    EffectSpec effects;

    // Throws ValidationError.
    void validate() const;
};

// Three target and eight baseline questions.
std::vector<QuestionGeometry> default_questions();
GeneratorConfig default_generator_config();

std::vector<RespondentProfile> gen_respondents(const GeneratorConfig& config, std::uint64_t seed);

// Reading pause, minimum-jerk movement to the chosen option and on to the
// submit button, sampled every cadence_ms with positional jitter, plus
// Poisson pauses and excursions. The result always satisfies the trajectory
// invariants.
Trajectory gen_trajectory(const RespondentProfile& profile, const QuestionGeometry& question, int answer_position,
                          int condition, const EffectSpec& effects, const GeneratorConfig& config,
                          std::uint64_t seed);

struct TruthRow {
    std::string respondent_id;
    std::string question_id;
    bool is_target = false;
    int condition = -1; // -1 for baseline questions
    int answer_position = 0;
    double speed = 1;
    double pause_propensity = 0;
    double jitter = 0;
};

struct SyntheticSurvey {
    std::vector<RespondentProfile> respondents;
    std::vector<QuestionRecord> records; // respondent-major, questions in config order
    std::vector<TruthRow> truth;
    EffectSpec effects;
};

// Conditions are balanced per target question (counts differ by at most one)
// and assigned independently across questions. Each trajectory draws from its
// own derived stream.
SyntheticSurvey gen_survey(const GeneratorConfig& config, std::uint64_t seed);

// respondent_id,question_id,is_target,condition,answer_position,speed,pause_propensity,jitter
// preceded by '#' lines carrying the effect parameters.
std::string write_truth_csv(const SyntheticSurvey& survey);

// Measure-level generator for fast experiments: log-normal person effects on
// the timing measures, Poisson counts, no trajectories.
struct MeasureLevelConfig {
    std::size_t n_respondents = 1000;
    std::size_t n_baselines = 8;
    double person_sd = 0.4;    // log scale, shared by all of a respondent's questions
    double noise_sd = 0.2;     // log scale, per question
    double effect = 0.26;      // log response-time shift for difficult targets
    double position_ms = 0.0;  // response-time shift per answer position step
    int n_options = 5;
};

struct MeasureLevelData {
    std::vector<int> labels;
    std::vector<int> target_positions;
    std::vector<MeasureSet> target;
    std::vector<std::vector<MeasureSet>> baselines;    // [respondent][question]
    std::vector<std::vector<int>> baseline_positions;  // [respondent][question]
    std::vector<double> person_effect;
};

MeasureLevelData gen_measure_level(const MeasureLevelConfig& config, std::uint64_t seed);

} // namespace mtrack
