// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "mtrack/analysis.hpp"
#include "mtrack/commands.hpp"
#include "mtrack/config.hpp"
#include "mtrack/csv.hpp"
#include "mtrack/evaluation.hpp"
#include "mtrack/event_log.hpp"
#include "mtrack/exclusion.hpp"
#include "mtrack/features.hpp"
#include "mtrack/learners.hpp"
#include "mtrack/personalization.hpp"
#include "mtrack/pipeline.hpp"
#include "mtrack/rng.hpp"
#include "mtrack/synthetic.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace mtrack;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Tolerances and experiment sizes.
constexpr double kExactTol = 1e-12;
constexpr double kPropertyTol = 1e-9;
constexpr double kOrthogonalityTol = 1e-6;
constexpr double kAffineTol = 1e-9;
constexpr double kGradientRelTol = 1e-4;
constexpr double kEquivalenceTol = 1e-9;
constexpr double kNullSlopeSe = 3.0;
constexpr int kPropertyTrajectories = 1000;
constexpr int kGradientPoints = 100;

constexpr std::size_t kSurveyN = 1000;
constexpr int kSeeds = 20;
constexpr double kFloorLo = 0.45, kFloorHi = 0.55;
constexpr int kFloorMinSeeds = 18;
constexpr int kFloorInnerReps = 50;
constexpr double kMinGain = 0.01;
constexpr int kImportanceMinSeeds = 16;
constexpr double kPersonSd = 0.40; // >= log(1.3), the language_complexity RT shift
constexpr double kTargetThreshold = 2000;
const std::string kTargetQuestion = "employment_detail";
const std::string kDominantFeature = "response_time";
constexpr std::size_t kDefaultRunN = 200;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const std::string& name, const Outcome& o, double seconds) {
    if (!o.pass) ++failures;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1fs", seconds);
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << buf << "]" << std::endl;
}

void run(const std::string& name, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    report(name, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

std::string fmt(double v, int digits = 4) { return csv::format_fixed(v, digits); }

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

// ---------------------------------------------------------------------------

Outcome feature_oracle() {
    Trajectory t;
    t.events = {{500, 100, 100}, {600, 103, 104}, {3100, 106, 108}, {3200, 110, 111}};
    t.submit_t_ms = 6000;
    const auto rt = response_and_initiation_time(t);
    const auto k = kinematics(t);
    const auto h2 = hover_metrics(t, HoverThreshold(2000));
    const auto h3 = hover_metrics(t, HoverThreshold(3000));
    const auto f = axis_flips(t);
    std::vector<std::string> bad;
    if (rt.response_time != 6000) bad.push_back("response_time");
    if (rt.initiation_time != 500) bad.push_back("initiation_time");
    if (std::abs(k.total_distance - 15) > kExactTol) bad.push_back("distance");
    if (std::abs(k.max_velocity - 0.05) > kExactTol) bad.push_back("max_velocity");
    if (std::abs(k.max_acceleration - 0.048 / 1300) > kExactTol) bad.push_back("max_acceleration");
    if (h2.count != 2 || h2.total_ms != 5300) bad.push_back("hovers(2000)");
    if (h3.count != 0 || h3.total_ms != 0) bad.push_back("hovers(3000)");
    if (f.x != 0 || f.y != 0) bad.push_back("flips");
    std::string detail = bad.empty() ? "all fixture values exact" : "mismatch:";
    for (const auto& b : bad) detail += " " + b;
    return {bad.empty(), detail};
}

Trajectory random_trajectory(Rng& rng) {
    Trajectory t;
    const int n = 1 + static_cast<int>(rng.below(60));
    std::int64_t time = static_cast<std::int64_t>(rng.below(3000));
    int x = static_cast<int>(rng.below(800)), y = static_cast<int>(rng.below(600));
    for (int i = 0; i < n; ++i) {
        t.events.push_back({time, x, y});
        time += 1 + static_cast<std::int64_t>(rng.below(rng.bernoulli(0.2) ? 5000 : 60));
        int dx = 0, dy = 0;
        while (dx == 0 && dy == 0) {
            dx = static_cast<int>(rng.below(41)) - 20;
            dy = static_cast<int>(rng.below(41)) - 20;
        }
        x += dx;
        y += dy;
    }
    t.submit_t_ms = t.events.back().t_ms + static_cast<std::int64_t>(rng.below(4000));
    return t;
}

Outcome trajectory_properties() {
    Rng rng(derive_seed(20240611, "acceptance", "properties"));
    const std::vector<double> sweep = {1, 50, 250, 500, 1000, 2000, 3000, 6000};
    std::map<std::string, int> violations;
    for (int trial = 0; trial < kPropertyTrajectories; ++trial) {
        const Trajectory t = rng.bernoulli(0.5) ? random_trajectory(rng) : [&] {
            const auto qs = default_questions();
            const auto& q = qs[rng.below(qs.size())];
            RespondentProfile p;
            p.speed = rng.lognormal(0, 0.3);
            return gen_trajectory(p, q, 1 + static_cast<int>(rng.below(static_cast<std::size_t>(q.n_options))),
                                  static_cast<int>(rng.below(2)), effect_preset("option_shuffle"),
                                  default_generator_config(), rng.next());
        }();
        const auto k = kinematics(t);
        const auto f = axis_flips(t);
        const auto m = extract_measures(t, HoverThreshold(500));

        Trajectory scaled = t, reflected = t, shifted = t;
        for (auto& e : scaled.events) e.x *= 3, e.y *= 3;
        for (auto& e : reflected.events) e.x = -e.x;
        for (auto& e : shifted.events) e.x += 137, e.y -= 59;
        const auto ks = kinematics(scaled), kr = kinematics(reflected), kt = kinematics(shifted);
        if (!near(ks.total_distance, 3 * k.total_distance, kPropertyTol) ||
            !near(ks.max_velocity, 3 * k.max_velocity, kPropertyTol) ||
            !near(ks.max_acceleration, 3 * k.max_acceleration, kPropertyTol))
            ++violations["scaling"];
        const auto ms = extract_measures(scaled, HoverThreshold(500));
        if (ms.response_time != m.response_time || ms.hover_count != m.hover_count || ms.x_flips != m.x_flips ||
            ms.y_flips != m.y_flips)
            ++violations["scaling counts"];
        const auto fr = axis_flips(reflected);
        if (fr.x != f.x || fr.y != f.y || !near(kr.total_distance, k.total_distance, kPropertyTol) ||
            !near(kr.max_velocity, k.max_velocity, kPropertyTol))
            ++violations["reflection"];
        if (extract_measures(shifted, HoverThreshold(500)) != m ||
            !near(kt.max_acceleration, k.max_acceleration, kPropertyTol))
            ++violations["translation"];

        HoverStats previous{INT32_MAX, 1e300};
        for (double thr : sweep) {
            const auto h = hover_metrics(t, HoverThreshold(thr));
            if (h.count > previous.count || h.total_ms > previous.total_ms) ++violations["hover monotonicity"];
            previous = h;
        }
        const double dx = t.events.back().x - t.events.front().x, dy = t.events.back().y - t.events.front().y;
        if (k.total_distance < std::hypot(dx, dy) - kPropertyTol) ++violations["distance >= displacement"];
    }
    std::string detail = std::to_string(kPropertyTrajectories) + " trajectories";
    for (const auto& [name, count] : violations) detail += "; " + name + " violated " + std::to_string(count) + "x";
    return {violations.empty(), detail};
}

CorrectionData correction_data(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    const auto M = static_cast<Eigen::Index>(kMeasureCount);
    std::vector<double> u(n);
    for (auto& v : u) v = rng.normal();
    auto block = [&](const std::string& id) {
        QuestionBlock b;
        b.question_id = id;
        b.n_options = 4;
        b.values.resize(static_cast<Eigen::Index>(n), M);
        for (std::size_t i = 0; i < n; ++i) {
            b.answer_positions.push_back(1 + static_cast<int>(rng.below(4)));
            for (Eigen::Index j = 0; j < M; ++j)
                b.values(static_cast<Eigen::Index>(i), j) =
                    50 + 5 * u[i] + 2.0 * b.answer_positions.back() + rng.normal() * (1 + j);
        }
        return b;
    };
    CorrectionData d;
    d.target = block("target");
    for (int r = 0; r < 8; ++r) d.panel.questions.push_back(block("b" + std::to_string(r)));
    return d;
}

Outcome ols_invariants() {
    const std::size_t n = 600;
    const auto d = correction_data(n, 11);
    const auto train = all_rows(400);
    std::vector<std::size_t> held;
    for (std::size_t i = 400; i < n; ++i) held.push_back(i);

    double worst_orth = 0;
    const auto model = fit_baseline_correction(d.target, d.panel, train);
    const Eigen::MatrixXd res = apply_baseline_correction(model, d.target, d.panel, train);
    for (Eigen::Index j = 0; j < res.cols(); ++j) {
        const Eigen::VectorXd e = res.col(j);
        worst_orth = std::max(worst_orth, std::abs(e.sum()) / (e.norm() * std::sqrt(400.0)));
        for (const auto& q : d.panel.questions) {
            const Eigen::VectorXd x = q.values.col(j).head(400);
            worst_orth = std::max(worst_orth, std::abs(e.dot(x)) / (e.norm() * x.norm()));
        }
    }

    double worst_affine = 0;
    for (auto mode : {CorrectionMode::baseline, CorrectionMode::baseline_position}) {
        auto shifted = d;
        shifted.target.values.array() += 25.0;
        for (auto& q : shifted.panel.questions) q.values.array() += 25.0;
        const Eigen::MatrixXd a = apply_correction(fit_correction(mode, d, train), d, all_rows(n));
        const Eigen::MatrixXd b = apply_correction(fit_correction(mode, shifted, train), shifted, all_rows(n));
        worst_affine = std::max(worst_affine, (a - b).cwiseAbs().maxCoeff());
    }

    // Leakage probe through the fold-local design builder: permuting held-out
    // labels and scrambling held-out measures moves no coefficient.
    QuestionTable table;
    table.question_id = "target";
    table.threshold_ms = 500;
    table.data = d;
    Rng rng(12);
    for (std::size_t i = 0; i < n; ++i) {
        table.respondent_ids.push_back("r" + std::to_string(i));
        table.labels.push_back(rng.bernoulli(0.5));
        table.age.push_back(20 + static_cast<double>(rng.below(50)));
        table.gender.push_back(rng.bernoulli(0.5));
    }
    QuestionTable probed = table;
    std::vector<int> held_labels;
    for (auto i : held) held_labels.push_back(probed.labels[i]);
    rng.shuffle(std::span<int>(held_labels));
    for (std::size_t k = 0; k < held.size(); ++k) {
        probed.labels[held[k]] = held_labels[k];
        probed.data.target.values.row(static_cast<Eigen::Index>(held[k])).array() *= -2.0;
        for (auto& q : probed.data.panel.questions) q.values.row(static_cast<Eigen::Index>(held[k])).array() += 1e3;
    }
    bool leak = false;
    for (auto mode : {CorrectionMode::baseline, CorrectionMode::baseline_position}) {
        const auto a = fit_correction(mode, table.data, train);
        const auto b = fit_correction(mode, probed.data, train);
        const auto& fa = mode == CorrectionMode::baseline ? a.baseline_fits : a.person_fits;
        const auto& fb = mode == CorrectionMode::baseline ? b.baseline_fits : b.person_fits;
        for (std::size_t j = 0; j < fa.size(); ++j) leak = leak || fa[j].coefficients != fb[j].coefficients;
    }
    for (auto p : {Personalization::baseline, Personalization::baseline_position}) {
        const Dataset a = design_builder(table, p, LeakagePolicy::fold_local, FeatureSet::full)(train);
        const Dataset b = design_builder(probed, p, LeakagePolicy::fold_local, FeatureSet::full)(train);
        leak = leak || select_rows(a.X, train) != select_rows(b.X, train);
    }

    const bool pass = worst_orth <= kOrthogonalityTol && worst_affine <= kAffineTol && !leak;
    std::ostringstream s;
    s << "orthogonality " << worst_orth << " (<= " << kOrthogonalityTol << "), affine shift " << worst_affine
      << " (<= " << kAffineTol << "), leakage probe " << (leak ? "changed coefficients" : "no change");
    return {pass, s.str()};
}

Outcome nn_gradient_check() {
    Rng rng(derive_seed(7, "acceptance", "nn_gradient"));
    double worst = 0;
    for (int point = 0; point < kGradientPoints; ++point) {
        const int inputs = 1 + static_cast<int>(rng.below(5));
        NeuralNetParams p;
        p.inputs = inputs;
        p.hidden = 1 + static_cast<int>(rng.below(10));
        p.theta.resize(NeuralNetParams::size_for(p.inputs, p.hidden));
        for (Eigen::Index k = 0; k < p.theta.size(); ++k) p.theta[k] = rng.uniform(-1.5, 1.5);
        Eigen::MatrixXd X(25, inputs);
        std::vector<int> y(25);
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            for (Eigen::Index j = 0; j < inputs; ++j) X(i, j) = rng.normal();
            y[static_cast<std::size_t>(i)] = rng.bernoulli(0.5);
        }
        const double decay = point % 3 == 0 ? 0.0 : rng.uniform(0.0, 0.1);
        const Eigen::VectorXd g = nn_gradient(p, X, y, decay);
        Eigen::VectorXd fd(g.size());
        for (Eigen::Index k = 0; k < p.theta.size(); ++k) {
            const double h = 1e-5 * std::max(1.0, std::abs(p.theta[k]));
            auto up = p, down = p;
            up.theta[k] += h;
            down.theta[k] -= h;
            fd[k] = (nn_loss(up, X, y, decay) - nn_loss(down, X, y, decay)) / (2 * h);
        }
        worst = std::max(worst, (g - fd).norm() / std::max(fd.norm(), 1e-8));
    }
    return {worst < kGradientRelTol, "worst relative error " + csv::format_double(worst) + " over " +
                                         std::to_string(kGradientPoints) + " points (< 1e-4)"};
}

Dataset random_dataset(std::size_t n, std::size_t p, const std::vector<double>& beta, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < n; ++i) {
        double eta = 0;
        for (std::size_t j = 0; j < p; ++j) {
            d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rng.normal();
            if (j < beta.size()) eta += beta[j] * d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        d.y.push_back(rng.uniform() < 1 / (1 + std::exp(-eta)));
    }
    for (std::size_t j = 0; j < p; ++j) d.feature_names.push_back("x" + std::to_string(j));
    d.binary_features.assign(p, false);
    return d;
}

bool same_structure(const cart::Tree& a, const cart::Tree& b) {
    if (a.nodes.size() != b.nodes.size()) return false;
    for (std::size_t i = 0; i < a.nodes.size(); ++i)
        if (a.nodes[i].feature != b.nodes[i].feature || a.nodes[i].threshold != b.nodes[i].threshold ||
            a.nodes[i].left != b.nodes[i].left)
            return false;
    return true;
}

Outcome learner_equivalence() {
    int boost_bad = 0, forest_bad = 0, logistic_bad = 0, checks = 0;
    double worst_slope = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto d = random_dataset(300, 5, {1.0, -0.7, 0.4}, derive_seed(s, "equivalence"));
        ++checks;

        BoostingOptions bo;
        const auto boost = fit_boosting(d, 1, 1, 1.0, bo);
        cart::GrowOptions go;
        go.min_leaf = bo.min_leaf;
        go.min_split = 2 * bo.min_leaf;
        go.max_depth = 1;
        const std::vector<double> target(d.y.begin(), d.y.end());
        const auto rows = all_rows(d.rows());
        const auto stump = cart::grow(d.X, target, rows, go);
        const auto pb = boosting_proba(boost, d.X);
        bool ok = same_structure(boost.trees[0], stump);
        for (Eigen::Index i = 0; ok && i < d.X.rows(); ++i)
            ok = std::abs(pb[i] - stump.predict(d.X.row(i))) <= kEquivalenceTol;
        boost_bad += !ok;

        ForestOptions fo;
        fo.bootstrap = false;
        const auto forest = fit_forest(d, 1, static_cast<int>(d.cols()), s, fo);
        TreeOptions to;
        to.min_split = fo.min_split;
        to.min_leaf = fo.min_leaf;
        to.max_depth = fo.max_depth;
        const auto tree = fit_tree(d, 0.0, to);
        ok = same_structure(forest.trees[0], tree.tree);
        const auto pf = forest_proba(forest, d.X);
        const auto pt = tree_proba(tree, d.X);
        for (Eigen::Index i = 0; ok && i < pf.size(); ++i) ok = pf[i] == (pt[i] >= 0.5 ? 1.0 : 0.0);
        forest_bad += !ok;

        const auto null = random_dataset(2000, 4, {}, derive_seed(s, "null_logistic"));
        const auto lm = fit_logistic(null);
        for (Eigen::Index j = 1; j < lm.coefficients.size(); ++j) {
            const double z = std::abs(lm.coefficients[j] / lm.standard_errors[j]);
            worst_slope = std::max(worst_slope, z);
            logistic_bad += z >= kNullSlopeSe;
        }
    }
    std::ostringstream s;
    s << checks << " datasets: boosting/stump mismatches " << boost_bad << ", forest/tree mismatches " << forest_bad
      << ", null slopes >= 3 SE " << logistic_bad << " (max |z| " << fmt(worst_slope, 2) << ")";
    return {boost_bad == 0 && forest_bad == 0 && logistic_bad == 0, s.str()};
}

// ---------------------------------------------------------------------------

TableSet survey_tables(const GeneratorConfig& g, std::uint64_t seed) {
    const auto survey = gen_survey(g, seed);
    const auto ex = apply_exclusions(survey.records);
    return build_tables(extract_measure_rows(ex.retained, kTargetThreshold, {}), metadata_rows(ex.retained),
                        {kTargetThreshold});
}

Hyperparameters hp_with(const std::function<void(Hyperparameters&)>& f) {
    Hyperparameters h;
    f(h);
    return h;
}

// Smaller grids and model sizes keep 20 x 6 nested runs within minutes.
RunConfig floor_config(int inner_reps) {
    RunConfig c;
    c.inner_reps = inner_reps;
    c.grids[LearnerKind::random_forest] = {hp_with([](auto& h) { h.n_trees = 25, h.mtry = 1; }),
                                           hp_with([](auto& h) { h.n_trees = 25, h.mtry = 3; })};
    c.grids[LearnerKind::boosting] = {hp_with([](auto& h) { h.n_trees = 25, h.depth = 1, h.shrinkage = 0.1; }),
                                      hp_with([](auto& h) { h.n_trees = 50, h.depth = 1, h.shrinkage = 0.1; }),
                                      hp_with([](auto& h) { h.n_trees = 25, h.depth = 2, h.shrinkage = 0.1; }),
                                      hp_with([](auto& h) { h.n_trees = 50, h.depth = 2, h.shrinkage = 0.1; })};
    c.grids[LearnerKind::svm] = {hp_with([](auto& h) { h.cost = 1, h.gamma = 0.01; }),
                                 hp_with([](auto& h) { h.cost = 1, h.gamma = 0.1; })};
    c.grids[LearnerKind::neural_net] = {hp_with([](auto& h) { h.hidden = 1, h.decay = 0.01; }),
                                        hp_with([](auto& h) { h.hidden = 3, h.decay = 0.1; })};
    c.learner_options.neural_net.restarts = 2;
    c.learner_options.neural_net.max_iter = 100;
    return c;
}

Outcome no_signal_floor() {
    auto g = default_generator_config();
    g.n_respondents = kSurveyN;
    g.effects = effect_preset("null");
    std::map<LearnerKind, int> inside;
    std::map<LearnerKind, std::pair<double, double>> range;
    for (auto k : kAllLearners) range[k] = {1.0, 0.0};
    for (int s = 0; s < kSeeds; ++s) {
        const std::uint64_t seed = derive_seed(2024, "floor", static_cast<std::uint64_t>(s));
        const auto tables = survey_tables(g, seed);
        auto c = floor_config(kFloorInnerReps);
        c.seed = seed;
        for (auto k : kAllLearners) {
            const auto o = run_cell(c, tables, {kTargetQuestion, "null", Personalization::none, FeatureSet::full, k,
                                                kTargetThreshold});
            if (!o.ok) throw std::runtime_error(std::string(to_string(k)) + ": " + o.error);
            const double acc = o.metrics.accuracy;
            inside[k] += acc >= kFloorLo && acc <= kFloorHi;
            range[k].first = std::min(range[k].first, acc);
            range[k].second = std::max(range[k].second, acc);
        }
    }
    // full protocol spot check on the cheap learners
    const auto tables = survey_tables(g, derive_seed(2024, "floor_spot"));
    auto c = floor_config(500);
    c.seed = 99;
    std::string spot;
    bool spot_ok = true;
    for (auto k : {LearnerKind::logistic, LearnerKind::tree}) {
        const auto o =
            run_cell(c, tables, {kTargetQuestion, "null", Personalization::none, FeatureSet::full, k, kTargetThreshold});
        spot_ok = spot_ok && o.ok && o.metrics.accuracy >= kFloorLo && o.metrics.accuracy <= kFloorHi;
        spot += " " + std::string(to_string(k)) + "=" + (o.ok ? fmt(o.metrics.accuracy, 3) : "failed");
    }
    bool pass = spot_ok;
    std::string detail;
    for (auto k : kAllLearners) {
        pass = pass && inside[k] >= kFloorMinSeeds;
        detail += std::string(to_string(k)) + " " + std::to_string(inside[k]) + "/" + std::to_string(kSeeds) + " [" +
                  fmt(range[k].first, 3) + "," + fmt(range[k].second, 3) + "]; ";
    }
    return {pass, detail + "500-rep spot check" + spot};
}

Outcome signal_recovery() {
    auto g = default_generator_config();
    g.n_respondents = kSurveyN;
    g.effects = effect_preset("language_complexity");
    auto g_person = g;
    g_person.log_speed_sd = kPersonSd;
    const double effect = std::log(g.effects.rt_multiplier);

    RunConfig c;
    double full = 0, rt_only = 0, corrected = 0, uncorrected = 0;
    int first = 0;
    for (int s = 0; s < kSeeds; ++s) {
        c.seed = derive_seed(2024, "signal", static_cast<std::uint64_t>(s));
        const auto tables = survey_tables(g, c.seed);
        Cell cell{kTargetQuestion, "language_complexity", Personalization::none, FeatureSet::full,
                  LearnerKind::logistic, kTargetThreshold};
        const auto f = run_cell(c, tables, cell, true);
        cell.features = FeatureSet::response_time_only;
        const auto r = run_cell(c, tables, cell);
        if (!f.ok || !r.ok) throw std::runtime_error("signal cell failed: " + f.error + r.error);
        full += f.metrics.accuracy;
        rt_only += r.metrics.accuracy;
        const auto imp = permutation_importance(*f.cv, c.importance_permutations,
                                                derive_seed(c.seed, "importance", kTargetQuestion), 1);
        for (const auto& fi : imp.features) first += fi.feature == kDominantFeature && fi.rank == 1;

        const auto tp = survey_tables(g_person, c.seed);
        cell.features = FeatureSet::full;
        const auto u = run_cell(c, tp, cell);
        cell.personalization = Personalization::baseline;
        const auto b = run_cell(c, tp, cell);
        if (!u.ok || !b.ok) throw std::runtime_error("personalization cell failed: " + u.error + b.error);
        uncorrected += u.metrics.accuracy;
        corrected += b.metrics.accuracy;
    }
    full /= kSeeds, rt_only /= kSeeds, corrected /= kSeeds, uncorrected /= kSeeds;
    const bool a = full - rt_only >= kMinGain;
    const bool b = kPersonSd >= effect && corrected - uncorrected >= kMinGain;
    const bool cc = first >= kImportanceMinSeeds;
    std::ostringstream s;
    s << "(a) full " << fmt(full) << " vs rt_only " << fmt(rt_only) << (a ? " ok" : " short") << "; (b) person sd "
      << kPersonSd << " vs effect " << fmt(effect, 3) << ": baseline " << fmt(corrected) << " vs none "
      << fmt(uncorrected) << (b ? " ok" : " short") << "; (c) " << kDominantFeature << " ranked first in " << first
      << "/" << kSeeds << (cc ? " ok" : " short");
    return {a && b && cc, s.str()};
}

// ---------------------------------------------------------------------------

RunConfig default_run(const fs::path& out, int workers) {
    RunConfig c;
    c.generator.n_respondents = kDefaultRunN;
    c.learners = {LearnerKind::logistic, LearnerKind::tree};
    c.out_dir = out.string();
    c.workers = workers;
    return c;
}

void pipeline(const RunConfig& c) {
    std::ostringstream log, err;
    for (const char* cmd : {"synth", "extract", "evaluate", "importance"})
        if (run_command(cmd, c, log, err) != kExitOk) throw std::runtime_error(std::string(cmd) + ": " + err.str());
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("mtrack_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Outcome protocol_conformance(const fs::path& dir) {
    const RunConfig c = default_run(dir, 1);
    pipeline(c);
    std::vector<std::string> bad;
    const auto me = json::parse(read_file((dir / "manifest_evaluate.json").string()));
    const auto mi = json::parse(read_file((dir / "manifest_importance.json").string()));
    const auto& p = me["protocol"];
    if (p["outer_folds"] != 10 || p["outer_stratified"] != true) bad.push_back("outer folds");
    if (p["inner_reps"] != 500 || p["inner_train_frac"] != 0.75 || p["inner_stratified"] != true)
        bad.push_back("inner subsampling");
    if (mi["protocol"]["importance_permutations"] != 500) bad.push_back("permutations");
    if (p["hover_thresholds_ms"] != std::vector<double>{250, 500, 2000, 3000}) bad.push_back("hover sweep");
    if (me["config_hash"] != config_hash(c)) bad.push_back("config hash");

    // the folds the run used, rebuilt from its own extracted files
    const auto measures = parse_measures_csv(read_file((dir / "measures.csv").string()));
    const auto metadata = parse_metadata(read_file((dir / "retained_metadata.csv").string())).rows;
    const auto tables = build_tables(measures, metadata, c.thresholds);
    for (const auto& table : tables.tables[0]) {
        const auto plan = plan_for(c, table);
        for (int cls : {0, 1}) {
            std::size_t lo = SIZE_MAX, hi = 0;
            for (int k = 0; k < plan.folds; ++k) {
                const auto v = plan.validation_rows(k);
                const auto m = static_cast<std::size_t>(
                    std::count_if(v.begin(), v.end(), [&](std::size_t i) { return plan.labels[i] == cls; }));
                lo = std::min(lo, m), hi = std::max(hi, m);
            }
            if (hi - lo > 1) bad.push_back("stratification " + table.question_id);
        }
        const auto rows = plan.train_rows(0);
        const auto split = inner_split(plan, rows, 0, 499);
        if (std::abs(static_cast<double>(split.train.size()) - 0.75 * static_cast<double>(rows.size())) > 1.0)
            bad.push_back("inner split size");
    }

    const std::string report = read_file((dir / "report.csv").string());
    const auto lines = csv::lines(report);
    const std::string expected_header =
        "question,manipulation,personalization,model,threshold_hovers_ms,accuracy,sensitivity,specificity";
    if (lines.empty() || lines[0] != expected_header) bad.push_back("report columns");
    // 3 questions x 4 thresholds x 2 feature sets x 2 learners
    if (lines.size() != 1 + 48) bad.push_back("report rows " + std::to_string(lines.size() - 1));
    const auto imp = csv::lines(read_file((dir / "importance.csv").string()));
    if (imp.size() != 1 + 3 * 11) bad.push_back("importance rows");

    std::string detail = bad.empty() ? "10 stratified folds, 500 x 75/25 inner, 500 permutations, "
                                       "hover sweep {250,500,2000,3000}, report columns"
                                     : "mismatch:";
    for (const auto& b : bad) detail += " " + b;
    return {bad.empty(), detail};
}

Outcome determinism(const fs::path& first) {
    const auto second = scratch("determinism");
    pipeline(default_run(second, 3));
    std::vector<std::string> differ;
    for (const char* f : {"report.csv", "importance.csv", "folds.csv", "best_models.csv"})
        if (read_file((first / f).string()) != read_file((second / f).string())) differ.push_back(f);
    std::string detail = differ.empty() ? "report, importance, folds and best-model CSVs byte-identical (1 vs 3 workers)"
                                        : "differ:";
    for (const auto& d : differ) detail += " " + d;
    return {differ.empty(), detail};
}

} // namespace

int main() {
    run("feature_oracle", feature_oracle);
    run("trajectory_properties", trajectory_properties);
    run("ols_correction_invariants", ols_invariants);
    run("nn_gradient_check", nn_gradient_check);
    run("learner_equivalence_oracles", learner_equivalence);
    run("no_signal_floor", no_signal_floor);
    run("signal_recovery", signal_recovery);
    const auto dir = scratch("default_run");
    run("protocol_conformance", [&] { return protocol_conformance(dir); });
    run("determinism", [&] { return determinism(dir); });
    std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criteria failed" : "acceptance: all passed")
              << std::endl;
    return failures ? 1 : 0;
}
