#include "mtrack/error.hpp"
#include "mtrack/exclusion.hpp"

#include <gtest/gtest.h>

using namespace mtrack;

namespace {

QuestionRecord clean(int i) {
    QuestionRecord r;
    r.respondent_id = "r" + std::to_string(i);
    r.question_id = "q";
    r.trajectory.page_id = "q";
    r.trajectory.events = {{100, 1, 1}, {200, 5, 5}, {300, 9, 2}};
    r.trajectory.submit_t_ms = 4000;
    r.is_target = true;
    r.condition = i % 2;
    r.answer_position = 1;
    r.n_options = 3;
    r.age = 30;
    r.gender = 0;
    return r;
}

std::vector<QuestionRecord> ten_with_two_violations() {
    std::vector<QuestionRecord> rs;
    for (int i = 0; i < 10; ++i) rs.push_back(clean(i));
    rs[3].trajectory.submit_t_ms = 430000;
    rs[7].trajectory.events.clear();
    return rs;
}

} // namespace

TEST(Exclusions, ConstructedFixture) {
    const auto res = apply_exclusions(ten_with_two_violations());
    EXPECT_EQ(res.retained.size(), 8u);
    EXPECT_EQ(res.report.total, 10u);
    EXPECT_EQ(res.report.retained, 8u);
    EXPECT_EQ(res.report.count(ExclusionRule::rt_cap), 1u);
    EXPECT_EQ(res.report.count(ExclusionRule::incomplete_recording), 1u);
    EXPECT_EQ(res.report.excluded.size() + res.report.retained, res.report.total);
    ASSERT_EQ(res.report.excluded.size(), 2u);
    EXPECT_EQ(res.report.excluded[0].respondent_id, "r3");
    EXPECT_EQ(res.report.excluded[1].rule, ExclusionRule::incomplete_recording);
}

TEST(Exclusions, RtCapBoundary) {
    auto r = clean(0);
    r.trajectory.submit_t_ms = 420000;
    EXPECT_EQ(apply_exclusions({r}).retained.size(), 1u);
    r.trajectory.submit_t_ms = 420001;
    EXPECT_EQ(apply_exclusions({r}).report.count(ExclusionRule::rt_cap), 1u);
    ExclusionConfig cfg;
    cfg.rt_cap = false;
    EXPECT_EQ(apply_exclusions({r}, cfg).retained.size(), 1u);
}

TEST(Exclusions, EachRuleAndFirstMatchAttribution) {
    auto no_answer = clean(0);
    no_answer.answer_position.reset();
    no_answer.trajectory.events.clear(); // also incomplete, but no_answer comes first
    auto no_log = clean(1);
    no_log.has_log = false;
    auto no_submit = clean(2);
    no_submit.has_submit = false;
    auto reload = clean(3);
    reload.reloaded = true;
    auto no_age = clean(4);
    no_age.age.reset();
    auto no_gender = clean(5);
    no_gender.gender.reset();
    auto invalid = clean(6);
    invalid.trajectory.events.push_back({250, 3, 3}); // out of order
    const auto res = apply_exclusions({no_answer, no_log, no_submit, reload, no_age, no_gender, invalid, clean(7)});
    EXPECT_EQ(res.report.count(ExclusionRule::no_answer), 1u);
    EXPECT_EQ(res.report.count(ExclusionRule::incomplete_recording), 3u);
    EXPECT_EQ(res.report.count(ExclusionRule::page_reload), 1u);
    EXPECT_EQ(res.report.count(ExclusionRule::missing_demographics), 2u);
    EXPECT_EQ(res.retained.size(), 1u);
}

TEST(Exclusions, OptionalGapHeuristic) {
    auto r = clean(0);
    r.trajectory.events.push_back({60000, 2, 7});
    r.trajectory.submit_t_ms = 61000;
    EXPECT_EQ(apply_exclusions({r}).retained.size(), 1u);
    ExclusionConfig cfg;
    cfg.max_event_gap_ms = 30000;
    EXPECT_EQ(apply_exclusions({r}, cfg).report.count(ExclusionRule::incomplete_recording), 1u);
}

TEST(Exclusions, Idempotent) {
    const auto once = apply_exclusions(ten_with_two_violations());
    const auto twice = apply_exclusions(once.retained);
    EXPECT_EQ(twice.retained, once.retained);
    EXPECT_TRUE(twice.report.excluded.empty());
}

TEST(Exclusions, RetainedTrajectoriesAreValid) {
    for (const auto& r : apply_exclusions(ten_with_two_violations()).retained) {
        EXPECT_TRUE(trajectory_violations(r.trajectory).empty());
        EXPECT_GE(r.trajectory.submit_t_ms, r.trajectory.events.back().t_ms);
    }
}

TEST(ExclusionConfigFile, ParsesKeysAndRejectsUnknown) {
    const auto cfg = parse_exclusion_config("# caps\nrt_cap_ms = 300000\npage_reload = off  # keep reloads\n"
                                            "max_event_gap_ms=15000\n");
    EXPECT_EQ(cfg.rt_cap_ms, 300000);
    EXPECT_FALSE(cfg.page_reload);
    EXPECT_TRUE(cfg.no_answer);
    EXPECT_EQ(cfg.max_event_gap_ms, 15000);
    EXPECT_THROW(parse_exclusion_config("bogus = 1"), ValidationError);
    EXPECT_THROW(parse_exclusion_config("rt_cap_ms = soon"), ValidationError);
    EXPECT_THROW(parse_exclusion_config("rt_cap_ms"), ValidationError);
}

TEST(ExclusionReportText, ListsEveryRule) {
    const auto text = format_exclusion_report(apply_exclusions(ten_with_two_violations()).report);
    EXPECT_EQ(text,
              "rule,count\ntotal,10\nno_answer,0\nincomplete_recording,1\npage_reload,0\n"
              "missing_demographics,0\nrt_cap,1\nretained,8\n");
}
