#include "mtrack/analysis.hpp"

#include "mtrack/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>

namespace mtrack {

std::string_view to_string(Personalization p) {
    switch (p) {
    case Personalization::none: return "none";
    case Personalization::baseline: return "baseline";
    case Personalization::baseline_position: return "baseline_position";
    }
    return "none";
}

std::string_view to_string(LeakagePolicy p) { return p == LeakagePolicy::global ? "global" : "fold_local"; }

std::string_view to_string(FeatureSet f) { return f == FeatureSet::full ? "full" : "rt_only"; }

Personalization parse_personalization(std::string_view name) {
    for (auto p : {Personalization::none, Personalization::baseline, Personalization::baseline_position})
        if (to_string(p) == name) return p;
    throw ValidationError("unknown personalization mode '" + std::string(name) + "'");
}

LeakagePolicy parse_leakage(std::string_view name) {
    if (name == "fold_local") return LeakagePolicy::fold_local;
    if (name == "global") return LeakagePolicy::global;
    throw ValidationError("unknown leakage policy '" + std::string(name) + "'");
}

std::vector<MetadataRow> metadata_rows(const std::vector<QuestionRecord>& records) {
    std::vector<MetadataRow> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        MetadataRow m;
        m.respondent_id = r.respondent_id;
        m.question_id = r.question_id;
        m.is_target = r.is_target;
        m.condition = r.condition;
        m.answer_position = r.answer_position;
        m.n_options = r.n_options;
        m.age = r.age;
        m.gender = r.gender;
        if (r.has_submit) m.submit_t_ms = r.trajectory.submit_t_ms;
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<MeasureRow> extract_measure_rows(const std::vector<QuestionRecord>& records, double threshold_ms,
                                             HoverOptions options) {
    const HoverThreshold threshold(threshold_ms);
    std::vector<MeasureRow> out;
    out.reserve(records.size());
    for (const auto& r : records)
        out.push_back({r.respondent_id, r.question_id, threshold_ms, extract_measures(r.trajectory, threshold, options)});
    return out;
}

std::vector<QuestionTable> build_question_tables(const std::vector<MeasureRow>& measures,
                                                 const std::vector<MetadataRow>& metadata, double threshold_ms) {
    using Key = std::pair<std::string, std::string>;
    std::map<Key, const MeasureSet*> by_key;
    for (const auto& m : measures)
        if (m.threshold_ms == threshold_ms) by_key[{m.respondent_id, m.question_id}] = &m.measures;

    std::vector<std::string> targets, baselines;
    std::map<std::string, int> n_options;
    std::map<Key, const MetadataRow*> meta;
    auto remember = [](std::vector<std::string>& ids, const std::string& id) {
        if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
    };
    for (const auto& row : metadata) {
        if (!by_key.count({row.respondent_id, row.question_id})) continue;
        remember(row.is_target ? targets : baselines, row.question_id);
        n_options.emplace(row.question_id, row.n_options);
        meta[{row.respondent_id, row.question_id}] = &row;
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto fill_row = [&](QuestionBlock& block, Eigen::Index i, const std::string& respondent) {
        const Key key{respondent, block.question_id};
        auto m = by_key.find(key);
        auto md = meta.find(key);
        if (m == by_key.end() || md == meta.end()) return;
        const auto v = m->second->values();
        for (std::size_t j = 0; j < kMeasureCount; ++j) block.values(i, static_cast<Eigen::Index>(j)) = v[j];
        block.answer_positions[static_cast<std::size_t>(i)] = md->second->answer_position.value_or(0);
    };

    std::vector<QuestionTable> tables;
    for (const auto& target : targets) {
        QuestionTable t;
        t.question_id = target;
        t.threshold_ms = threshold_ms;
        for (const auto& row : metadata) {
            if (row.question_id != target || !row.is_target) continue;
            if (!by_key.count({row.respondent_id, target})) continue;
            if (!row.condition || !row.age || !row.gender) continue;
            if (std::find(t.respondent_ids.begin(), t.respondent_ids.end(), row.respondent_id) != t.respondent_ids.end())
                continue;
            t.respondent_ids.push_back(row.respondent_id);
            t.labels.push_back(*row.condition);
            t.age.push_back(*row.age);
            t.gender.push_back(*row.gender);
        }
        const auto n = static_cast<Eigen::Index>(t.rows());
        auto make_block = [&](const std::string& id) {
            QuestionBlock b;
            b.question_id = id;
            b.n_options = n_options[id];
            b.answer_positions.assign(static_cast<std::size_t>(n), 0);
            b.values = Eigen::MatrixXd::Constant(n, static_cast<Eigen::Index>(kMeasureCount), nan);
            for (Eigen::Index i = 0; i < n; ++i) fill_row(b, i, t.respondent_ids[static_cast<std::size_t>(i)]);
            return b;
        };
        t.data.target = make_block(target);
        for (const auto& b : baselines) t.data.panel.questions.push_back(make_block(b));
        tables.push_back(std::move(t));
    }
    return tables;
}

std::vector<std::string> design_feature_names(FeatureSet features) {
    std::vector<std::string> names;
    if (features == FeatureSet::full)
        for (auto n : kMeasureNames) names.emplace_back(n);
    else
        names.emplace_back(kMeasureNames[0]);
    names.emplace_back("age");
    names.emplace_back("gender");
    return names;
}

Dataset build_design(const QuestionTable& table, Personalization personalization, FeatureSet features,
                     std::span<const std::size_t> fit_rows) {
    const auto n = static_cast<Eigen::Index>(table.rows());
    Eigen::MatrixXd measures;
    if (personalization == Personalization::none) {
        measures = table.data.target.values;
    } else {
        const auto mode = personalization == Personalization::baseline ? CorrectionMode::baseline
                                                                       : CorrectionMode::baseline_position;
        const CorrectionModel model = fit_correction(mode, table.data, fit_rows);
        measures = apply_correction(model, table.data, all_rows(table.rows()));
    }
    Dataset d;
    d.feature_names = design_feature_names(features);
    const std::size_t p = d.feature_names.size();
    d.X.resize(n, static_cast<Eigen::Index>(p));
    const std::size_t m = features == FeatureSet::full ? kMeasureCount : 1;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) d.X(i, static_cast<Eigen::Index>(j)) = measures(i, static_cast<Eigen::Index>(j));
        d.X(i, static_cast<Eigen::Index>(m)) = table.age[static_cast<std::size_t>(i)];
        d.X(i, static_cast<Eigen::Index>(m + 1)) = table.gender[static_cast<std::size_t>(i)];
    }
    d.y = table.labels;
    d.binary_features.assign(p, false);
    d.binary_features[p - 1] = true;
    return d;
}

DesignBuilder design_builder(const QuestionTable& table, Personalization personalization, LeakagePolicy leakage,
                             FeatureSet features) {
    if (personalization == Personalization::none || leakage == LeakagePolicy::global) {
        auto fixed = std::make_shared<const Dataset>(
            build_design(table, personalization, features, all_rows(table.rows())));
        return [fixed](std::span<const std::size_t>) { return *fixed; };
    }
    return [&table, personalization, features](std::span<const std::size_t> train_rows) {
        return build_design(table, personalization, features, train_rows);
    };
}

} // namespace mtrack
