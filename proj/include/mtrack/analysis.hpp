#pragma once

#include "mtrack/dataset.hpp"
#include "mtrack/evaluation.hpp"
#include "mtrack/event_log.hpp"
#include "mtrack/features.hpp"
#include "mtrack/personalization.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mtrack {

enum class Personalization { none, baseline, baseline_position };
enum class LeakagePolicy { fold_local, global };
enum class FeatureSet { full, response_time_only };

std::string_view to_string(Personalization p);
std::string_view to_string(LeakagePolicy p);
std::string_view to_string(FeatureSet f);
// Throw ValidationError on unknown names.
Personalization parse_personalization(std::string_view name);
LeakagePolicy parse_leakage(std::string_view name);

// Metadata view of records, as written to the sidecar.
std::vector<MetadataRow> metadata_rows(const std::vector<QuestionRecord>& records);
std::vector<MeasureRow> extract_measure_rows(const std::vector<QuestionRecord>& records, double threshold_ms,
                                             HoverOptions options = {});

// One target question at one hover threshold: a row per respondent with a
// labelled target record and known age and gender. Baseline questions the
// respondent lacks are NaN rows in the panel.
struct QuestionTable {
    std::string question_id;
    double threshold_ms = 0;
    std::vector<std::string> respondent_ids;
    std::vector<int> labels;
    std::vector<double> age;
    std::vector<int> gender;
    CorrectionData data;

    std::size_t rows() const { return labels.size(); }
};

// Target questions in order of first appearance in the metadata.
std::vector<QuestionTable> build_question_tables(const std::vector<MeasureRow>& measures,
                                                 const std::vector<MetadataRow>& metadata, double threshold_ms);

std::vector<std::string> design_feature_names(FeatureSet features);

// Nine (possibly corrected) measures plus age and gender, or response time
// plus age and gender. Corrections are fitted on `fit_rows`, applied to all rows.
Dataset build_design(const QuestionTable& table, Personalization personalization, FeatureSet features,
                     std::span<const std::size_t> fit_rows);

// fold_local refits the correction on each outer training side; global fits
// it once on every row. `table` must outlive the builder.
DesignBuilder design_builder(const QuestionTable& table, Personalization personalization, LeakagePolicy leakage,
                             FeatureSet features);

} // namespace mtrack
