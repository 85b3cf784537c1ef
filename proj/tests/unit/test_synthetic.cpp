#include "mtrack/error.hpp"
#include "mtrack/event_log.hpp"
#include "mtrack/exclusion.hpp"
#include "mtrack/features.hpp"
#include "mtrack/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

using namespace mtrack;

namespace {

GeneratorConfig small(std::size_t n, const std::string& preset = "language_complexity") {
    auto c = default_generator_config();
    c.n_respondents = n;
    c.effects = effect_preset(preset);
    return c;
}

double mean_rt(const std::vector<Trajectory>& ts) {
    double s = 0;
    for (const auto& t : ts) s += response_and_initiation_time(t).response_time;
    return s / static_cast<double>(ts.size());
}

} // namespace

TEST(Synthetic, Presets) {
    for (const auto& name : effect_preset_names()) EXPECT_EQ(effect_preset(name).name, name);
    EXPECT_TRUE(effect_preset("null").is_identity());
    EXPECT_FALSE(effect_preset("response_time").is_identity());
    EXPECT_DOUBLE_EQ(effect_preset("response_time").rt_multiplier, 1.3);
    EXPECT_THROW(effect_preset("huge"), ValidationError);
}

TEST(Synthetic, DefaultQuestions) {
    const auto qs = default_questions();
    ASSERT_EQ(qs.size(), 11u);
    int targets = 0;
    for (const auto& q : qs) targets += q.is_target;
    EXPECT_EQ(targets, 3);
    EXPECT_EQ(qs[0].id, "employment_detail");
}

TEST(Synthetic, SeedDeterminism) {
    const auto c = small(40);
    const auto a = gen_survey(c, 7);
    const auto b = gen_survey(c, 7);
    EXPECT_EQ(a.records, b.records);
    EXPECT_EQ(write_truth_csv(a), write_truth_csv(b));
    EXPECT_NE(gen_survey(c, 8).records, a.records);
}

TEST(Synthetic, PersonSpeedDistribution) {
    auto c = small(4000);
    const auto people = gen_respondents(c, 3);
    ASSERT_EQ(people.size(), 4000u);
    double s = 0, ss = 0;
    for (const auto& p : people) {
        const double l = std::log(p.speed);
        s += l;
        ss += l * l;
        EXPECT_GE(p.age, c.age_min);
        EXPECT_LE(p.age, c.age_max);
    }
    const double mean = s / 4000, sd = std::sqrt(ss / 4000 - mean * mean);
    EXPECT_LT(std::abs(mean), 3 * c.log_speed_sd / std::sqrt(4000.0));
    EXPECT_NEAR(sd, c.log_speed_sd, 0.1 * c.log_speed_sd);
    EXPECT_EQ(people[0].id, "r00001");
}

TEST(Synthetic, TrajectoriesValidAndRetained) {
    const auto survey = gen_survey(small(150, "option_shuffle"), 4);
    ASSERT_EQ(survey.records.size(), 150u * 11);
    for (const auto& r : survey.records) {
        EXPECT_TRUE(is_valid(r.trajectory)) << r.respondent_id << ' ' << r.question_id;
        ASSERT_TRUE(r.answer_position.has_value());
        EXPECT_GE(*r.answer_position, 1);
        EXPECT_LE(*r.answer_position, r.n_options);
    }
    const auto ex = apply_exclusions(survey.records);
    EXPECT_EQ(ex.report.retained, survey.records.size());
}

TEST(Synthetic, ConditionsBalancedPerTarget) {
    const auto survey = gen_survey(small(101), 5);
    std::map<std::string, std::array<int, 2>> counts;
    for (const auto& r : survey.records) {
        if (!r.is_target) {
            EXPECT_FALSE(r.condition.has_value());
            continue;
        }
        ASSERT_TRUE(r.condition.has_value());
        ++counts[r.question_id][static_cast<std::size_t>(*r.condition)];
    }
    ASSERT_EQ(counts.size(), 3u);
    for (const auto& [q, c] : counts) EXPECT_LE(std::abs(c[0] - c[1]), 1) << q;
}

TEST(Synthetic, ResponseTimeMultiplier) {
    auto c = small(1);
    EffectSpec e;
    e.name = "x";
    e.rt_multiplier = 1.5;
    RespondentProfile p;
    p.id = "r";
    const auto& q = c.questions[0];
    std::vector<Trajectory> easy, hard;
    for (std::uint64_t s = 0; s < 2000; ++s) {
        easy.push_back(gen_trajectory(p, q, 2, 0, e, c, s));
        hard.push_back(gen_trajectory(p, q, 2, 1, e, c, 100000 + s));
    }
    EXPECT_NEAR(mean_rt(hard) / mean_rt(easy), 1.5, 0.05);
}

TEST(Synthetic, NullEffectLeavesConditionsAlike) {
    auto c = small(1);
    const auto e = effect_preset("null");
    RespondentProfile p;
    const auto& q = c.questions[1];
    for (std::uint64_t s = 0; s < 20; ++s) EXPECT_EQ(gen_trajectory(p, q, 3, 0, e, c, s), gen_trajectory(p, q, 3, 1, e, c, s));
}

TEST(Synthetic, FartherOptionsTravelFarther) {
    auto c = small(1);
    const auto e = effect_preset("null");
    RespondentProfile p;
    auto near = c.questions[0];
    auto far = near;
    near.option_x = 600;
    far.option_x = 100;
    double dn = 0, df = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        dn += kinematics(gen_trajectory(p, near, 1, 0, e, c, s)).total_distance;
        df += kinematics(gen_trajectory(p, far, 1, 0, e, c, s)).total_distance;
    }
    EXPECT_GT(df, dn + 200 * 500);
}

TEST(Synthetic, EventLogRoundTrip) {
    const auto survey = gen_survey(small(20), 6);
    const auto parsed = parse_records(write_event_log(survey.records), write_metadata(survey.records));
    EXPECT_TRUE(parsed.diagnostics.empty());
    ASSERT_EQ(parsed.records.size(), survey.records.size());
    std::map<std::pair<std::string, std::string>, const QuestionRecord*> by_key;
    for (const auto& r : parsed.records) by_key[{r.respondent_id, r.question_id}] = &r;
    for (const auto& r : survey.records) {
        const auto* back = by_key.at({r.respondent_id, r.question_id});
        EXPECT_EQ(back->trajectory, r.trajectory);
        EXPECT_EQ(back->condition, r.condition);
        EXPECT_EQ(back->answer_position, r.answer_position);
    }
}

TEST(Synthetic, TruthCsv) {
    const auto csv = write_truth_csv(gen_survey(small(3), 1));
    EXPECT_EQ(csv.rfind("# effects", 0), 0u);
    EXPECT_NE(csv.find("\nrespondent_id,question_id,is_target,condition,answer_position,speed,pause_propensity,jitter\n"),
              std::string::npos);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2 + 3 * 11);
}

TEST(Synthetic, InvalidConfig) {
    auto c = small(0);
    EXPECT_THROW(gen_survey(c, 1), ValidationError);
    c = small(10);
    c.questions.clear();
    EXPECT_THROW(gen_survey(c, 1), ValidationError);
}

TEST(MeasureLevel, EffectShiftsLogResponseTime) {
    MeasureLevelConfig c;
    c.n_respondents = 4000;
    const auto d = gen_measure_level(c, 2);
    double s[2] = {0, 0};
    int n[2] = {0, 0};
    for (std::size_t i = 0; i < d.labels.size(); ++i) {
        s[d.labels[i]] += std::log(d.target[i].response_time);
        ++n[d.labels[i]];
        EXPECT_EQ(d.baselines[i].size(), c.n_baselines);
    }
    EXPECT_EQ(n[1], 2000);
    EXPECT_NEAR(s[1] / n[1] - s[0] / n[0], c.effect, 0.04);
}
