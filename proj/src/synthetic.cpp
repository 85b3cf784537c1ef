#include "mtrack/synthetic.hpp"

#include "mtrack/csv.hpp"
#include "mtrack/error.hpp"
#include "mtrack/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mtrack {

bool EffectSpec::is_identity() const {
    return rt_multiplier == 1.0 && initiation_multiplier == 1.0 && extra_hover_rate == 0.0 &&
           extra_x_flip_rate == 0.0 && extra_y_flip_rate == 0.0;
}

std::vector<std::string> effect_preset_names() {
    return {"null", "language_complexity", "option_shuffle", "response_time"};
}

EffectSpec effect_preset(std::string_view name) {
    EffectSpec e;
    e.name = std::string(name);
    if (name == "null") return e;
    if (name == "language_complexity") {
        e.rt_multiplier = 1.3;
        e.extra_hover_rate = 1.0;
        e.extra_y_flip_rate = 1.0;
        return e;
    }
    if (name == "option_shuffle") {
        e.initiation_multiplier = 1.4;
        e.extra_x_flip_rate = 1.0;
        e.extra_hover_rate = 0.5;
        return e;
    }
    if (name == "response_time") {
        e.rt_multiplier = 1.3;
        return e;
    }
    throw ValidationError("unknown effect preset '" + std::string(name) + "'");
}

std::vector<QuestionGeometry> default_questions() {
    std::vector<QuestionGeometry> qs;
    auto add = [&](std::string id, bool target, int options, double initiation) {
        QuestionGeometry q;
        q.id = std::move(id);
        q.is_target = target;
        q.n_options = options;
        q.initiation_ms = initiation;
        q.submit_y = q.option_y(options) + 120;
        qs.push_back(q);
    };
    add("employment_detail", true, 5, 2200);
    add("employee_level", true, 4, 1800);
    add("education_level", true, 6, 2000);
    const int options[] = {3, 4, 5, 6, 7, 2, 4, 5};
    const double reading[] = {1500, 1700, 1900, 2100, 2300, 1300, 1600, 2000};
    for (int b = 0; b < 8; ++b) add("baseline_" + std::to_string(b + 1), false, options[b], reading[b]);
    return qs;
}

GeneratorConfig default_generator_config() {
    GeneratorConfig c;
    c.questions = default_questions();
    return c;
}

void GeneratorConfig::validate() const {
    auto bad = [](const std::string& m) { throw ValidationError("generator: " + m); };
    if (n_respondents < 1) bad("n_respondents must be >= 1");
    if (questions.empty()) bad("no questions configured");
    if (!(cadence_ms >= 1.0)) bad("cadence_ms must be >= 1");
    for (double v : {log_speed_sd, pause_log_sd, jitter_log_sd, timing_noise_sd, pause_rate, jitter_px,
                     excursion_rate, dwell_ms, terminal_ms, pause_ms})
        if (!(v >= 0.0) || !std::isfinite(v)) bad("dispersion, rate and duration parameters must be non-negative");
    if (!(age_max >= age_min)) bad("age_max must be >= age_min");
    if (!(gender_p >= 0.0 && gender_p <= 1.0)) bad("gender_p must lie in [0, 1]");
    for (const auto& q : questions) {
        if (q.id.empty()) bad("question without id");
        if (q.n_options < 2) bad("question " + q.id + " needs at least 2 options");
        if (!(q.initiation_ms > 0.0)) bad("question " + q.id + " needs a positive initiation_ms");
    }
    for (std::size_t a = 0; a < questions.size(); ++a)
        for (std::size_t b = a + 1; b < questions.size(); ++b)
            if (questions[a].id == questions[b].id) bad("duplicate question id " + questions[a].id);
    if (!(effects.rt_multiplier > 0.0 && effects.initiation_multiplier > 0.0)) bad("multipliers must be positive");
    if (effects.extra_hover_rate < 0 || effects.extra_x_flip_rate < 0 || effects.extra_y_flip_rate < 0)
        bad("extra rates must be non-negative");
}

std::vector<RespondentProfile> gen_respondents(const GeneratorConfig& config, std::uint64_t seed) {
    std::vector<RespondentProfile> out(config.n_respondents);
    for (std::size_t i = 0; i < out.size(); ++i) {
        Rng rng(derive_seed(seed, "respondent", i));
        auto& p = out[i];
        char id[32];
        std::snprintf(id, sizeof id, "r%05zu", i + 1);
        p.id = id;
        p.speed = rng.lognormal(0.0, config.log_speed_sd);
        p.pause_propensity = config.pause_rate * rng.lognormal(0.0, 0.4);
        p.jitter = config.jitter_px * rng.lognormal(0.0, config.jitter_log_sd);
        p.age = std::floor(rng.uniform(config.age_min, config.age_max + 1.0));
        p.gender = rng.bernoulli(config.gender_p) ? 1 : 0;
    }
    return out;
}

namespace {

struct Piece {
    bool move = true;
    double x = 0, y = 0;
    double duration = 0;
};

double min_jerk(double tau) { return tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau)); }

} // namespace

Trajectory gen_trajectory(const RespondentProfile& profile, const QuestionGeometry& q, int answer_position,
                          int condition, const EffectSpec& effects, const GeneratorConfig& config,
                          std::uint64_t seed) {
    if (answer_position < 1 || answer_position > q.n_options)
        throw ValidationError("gen_trajectory: answer position out of range");
    Rng rng(seed);
    const bool difficult = condition == 1;
    const double scale =
        profile.speed * (difficult ? effects.rt_multiplier : 1.0) * rng.lognormal(0.0, config.timing_noise_sd);
    const double initiation = q.initiation_ms * scale * (difficult ? effects.initiation_multiplier : 1.0) *
                              rng.lognormal(0.0, 0.25);

    const double ox = q.option_x, oy = q.option_y(answer_position);
    std::vector<Piece> pieces;
    auto travel = [&](double fx, double fy, double tx, double ty) {
        return (300.0 + 1.1 * std::hypot(tx - fx, ty - fy)) * scale * rng.lognormal(0.0, 0.1);
    };
    pieces.push_back({true, ox, oy, travel(q.start_x, q.start_y, ox, oy)});

    // Excursions: 0 = sideways jiggle, 1 = visit a neighbouring option.
    std::vector<int> excursions;
    const int nx = rng.poisson(config.excursion_rate + (difficult ? effects.extra_x_flip_rate : 0.0));
    const int ny = rng.poisson(config.excursion_rate + (difficult ? effects.extra_y_flip_rate : 0.0));
    excursions.insert(excursions.end(), static_cast<std::size_t>(nx), 0);
    excursions.insert(excursions.end(), static_cast<std::size_t>(ny), 1);
    rng.shuffle(std::span<int>(excursions));
    for (int kind : excursions) {
        if (kind == 0) {
            const double dx = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(20.0, 60.0);
            pieces.push_back({true, ox + dx, oy, 180.0 * scale});
            pieces.push_back({true, ox, oy, 180.0 * scale});
        } else {
            int nb = answer_position + (rng.bernoulli(0.5) ? 1 : -1);
            if (nb < 1) nb = 2;
            if (nb > q.n_options) nb = q.n_options - 1;
            pieces.push_back({true, ox, q.option_y(nb), 250.0 * scale});
            pieces.push_back({true, ox, oy, 250.0 * scale});
        }
    }
    double dwell = config.dwell_ms * scale * rng.lognormal(0.0, 0.3);
    if (static_cast<std::size_t>(answer_position) <= effects.position_effect_ms.size())
        dwell += effects.position_effect_ms[static_cast<std::size_t>(answer_position - 1)] * scale;
    pieces.push_back({false, 0, 0, std::max(0.0, dwell)});
    pieces.push_back({true, q.submit_x, q.submit_y, travel(ox, oy, q.submit_x, q.submit_y)});

    const int pauses = rng.poisson(profile.pause_propensity + (difficult ? effects.extra_hover_rate : 0.0));
    for (int k = 0; k < pauses; ++k) {
        const double length = config.pause_ms * scale * rng.lognormal(0.0, config.pause_log_sd);
        const std::size_t at = 1 + rng.below(pieces.size());
        pieces.insert(pieces.begin() + static_cast<std::ptrdiff_t>(at), Piece{false, 0, 0, length});
    }

    Trajectory traj;
    traj.page_id = q.id;
    double t = initiation - config.cadence_ms;
    double px = q.start_x, py = q.start_y;
    for (const Piece& piece : pieces) {
        if (!piece.move) {
            t += piece.duration;
            continue;
        }
        const int steps = std::max(2, static_cast<int>(std::lround(piece.duration / config.cadence_ms)));
        for (int k = 1; k <= steps; ++k) {
            const double tau = static_cast<double>(k) / steps;
            const double s = min_jerk(tau);
            const double wobble = profile.jitter * std::sin(M_PI * tau);
            const double x = px + (piece.x - px) * s + wobble * rng.normal();
            const double y = py + (piece.y - py) * s + wobble * rng.normal();
            t += config.cadence_ms;
            CursorEvent ev{std::llround(t), static_cast<std::int32_t>(std::lround(x)),
                           static_cast<std::int32_t>(std::lround(y))};
            if (!traj.events.empty()) {
                const auto& last = traj.events.back();
                if (last.x == ev.x && last.y == ev.y) continue;
                if (ev.t_ms <= last.t_ms) ev.t_ms = last.t_ms + 1;
            } else if (ev.t_ms < 0) {
                ev.t_ms = 0;
            }
            traj.events.push_back(ev);
        }
        px = piece.x;
        py = piece.y;
    }
    const double terminal = config.terminal_ms * scale * rng.lognormal(0.0, 0.3);
    traj.submit_t_ms = std::max(traj.events.back().t_ms, static_cast<std::int64_t>(std::llround(t + terminal)));
    return traj;
}

SyntheticSurvey gen_survey(const GeneratorConfig& config, std::uint64_t seed) {
    config.validate();
    SyntheticSurvey survey;
    survey.effects = config.effects;
    survey.respondents = gen_respondents(config, seed);
    const std::size_t n = survey.respondents.size();

    std::vector<std::vector<int>> conditions(config.questions.size());
    for (std::size_t qi = 0; qi < config.questions.size(); ++qi) {
        const auto& q = config.questions[qi];
        if (!q.is_target) continue;
        Rng rng(derive_seed(seed, "condition", q.id));
        auto& c = conditions[qi];
        c.assign(n, 0);
        std::fill(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(n / 2), 1);
        if (n % 2 == 1 && rng.bernoulli(0.5)) c[n - 1] = 1;
        rng.shuffle(std::span<int>(c));
    }

    for (std::size_t i = 0; i < n; ++i) {
        const auto& person = survey.respondents[i];
        for (std::size_t qi = 0; qi < config.questions.size(); ++qi) {
            const auto& q = config.questions[qi];
            Rng pick(derive_seed(seed, "answer", i, q.id));
            const int position = 1 + static_cast<int>(pick.below(static_cast<std::size_t>(q.n_options)));
            const int condition = q.is_target ? conditions[qi][i] : -1;
            QuestionRecord rec;
            rec.respondent_id = person.id;
            rec.question_id = q.id;
            rec.trajectory = gen_trajectory(person, q, position, condition, config.effects, config,
                                            derive_seed(seed, "trajectory", i, q.id));
            rec.is_target = q.is_target;
            if (q.is_target) rec.condition = condition;
            rec.answer_position = position;
            rec.n_options = q.n_options;
            rec.age = person.age;
            rec.gender = person.gender;
            survey.records.push_back(std::move(rec));
            survey.truth.push_back({person.id, q.id, q.is_target, condition, position, person.speed,
                                    person.pause_propensity, person.jitter});
        }
    }
    return survey;
}

std::string write_truth_csv(const SyntheticSurvey& survey) {
    const auto& e = survey.effects;
    std::string out = "# effects name=" + e.name + " rt_multiplier=" + csv::format_double(e.rt_multiplier) +
                      " initiation_multiplier=" + csv::format_double(e.initiation_multiplier) +
                      " extra_hover_rate=" + csv::format_double(e.extra_hover_rate) +
                      " extra_x_flip_rate=" + csv::format_double(e.extra_x_flip_rate) +
                      " extra_y_flip_rate=" + csv::format_double(e.extra_y_flip_rate) + "\n";
    out += "respondent_id,question_id,is_target,condition,answer_position,speed,pause_propensity,jitter\n";
    for (const auto& t : survey.truth) {
        out += csv::join({t.respondent_id, t.question_id, t.is_target ? "1" : "0",
                          t.condition < 0 ? "" : std::to_string(t.condition), std::to_string(t.answer_position),
                          csv::format_double(t.speed), csv::format_double(t.pause_propensity),
                          csv::format_double(t.jitter)});
        out += '\n';
    }
    return out;
}

MeasureLevelData gen_measure_level(const MeasureLevelConfig& config, std::uint64_t seed) {
    if (config.n_respondents < 2) throw ValidationError("measure-level generator: need at least 2 respondents");
    if (config.n_options < 2) throw ValidationError("measure-level generator: need at least 2 options");
    const std::size_t n = config.n_respondents;
    MeasureLevelData d;
    d.labels.assign(n, 0);
    std::fill(d.labels.begin(), d.labels.begin() + static_cast<std::ptrdiff_t>(n / 2), 1);
    Rng assign(derive_seed(seed, "labels"));
    assign.shuffle(std::span<int>(d.labels));

    auto draw = [&](Rng& rng, double person, double shift, int position) {
        MeasureSet m;
        const double pace = std::exp(person + rng.normal(0.0, config.noise_sd) + shift);
        m.initiation_time = 1500.0 * pace * rng.lognormal(0.0, 0.2);
        m.response_time = m.initiation_time + 4000.0 * pace + config.position_ms * position;
        m.hover_count = rng.poisson(0.6);
        m.hover_total_ms = 0;
        for (int h = 0; h < m.hover_count; ++h) m.hover_total_ms += 1800.0 * pace * rng.lognormal(0.0, 0.5);
        m.hover_total_ms = std::min(m.hover_total_ms, m.response_time - m.initiation_time);
        m.total_distance = 600.0 * rng.lognormal(0.0, 0.15);
        m.max_velocity = 2.0 / pace * rng.lognormal(0.0, 0.2);
        m.max_acceleration = 0.02 / (pace * pace) * rng.lognormal(0.0, 0.3);
        m.x_flips = rng.poisson(1.0);
        m.y_flips = rng.poisson(1.0);
        return m;
    };

    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, "measure_level", i));
        const double person = rng.normal(0.0, config.person_sd);
        d.person_effect.push_back(person);
        const int tp = 1 + static_cast<int>(rng.below(static_cast<std::size_t>(config.n_options)));
        d.target_positions.push_back(tp);
        d.target.push_back(draw(rng, person, d.labels[i] ? config.effect : 0.0, tp));
        std::vector<MeasureSet> base;
        std::vector<int> pos;
        for (std::size_t r = 0; r < config.n_baselines; ++r) {
            const int bp = 1 + static_cast<int>(rng.below(static_cast<std::size_t>(config.n_options)));
            pos.push_back(bp);
            base.push_back(draw(rng, person, 0.0, bp));
        }
        d.baselines.push_back(std::move(base));
        d.baseline_positions.push_back(std::move(pos));
    }
    return d;
}

} // namespace mtrack
