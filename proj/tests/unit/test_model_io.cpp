#include "mtrack/error.hpp"
#include "mtrack/model_io.hpp"
#include "mtrack/rng.hpp"

#include <json.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace mtrack;

namespace {

Dataset noisy(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.X.resize(static_cast<Eigen::Index>(n), 3);
    for (std::size_t i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) d.X(static_cast<Eigen::Index>(i), j) = rng.normal() * (j + 1) * 100;
        d.X(static_cast<Eigen::Index>(i), 2) = rng.bernoulli(0.5);
        const double eta = d.X(static_cast<Eigen::Index>(i), 0) / 100 - d.X(static_cast<Eigen::Index>(i), 1) / 200;
        d.y.push_back(rng.uniform() < 1 / (1 + std::exp(-eta)));
    }
    d.feature_names = {"a", "b", "g"};
    d.binary_features = {false, false, true};
    return d;
}

} // namespace

TEST(ModelIo, ReloadPredictsBitIdentically) {
    const auto d = noisy(150, 1);
    Rng rng(2);
    Eigen::MatrixXd probe(50, 3);
    for (Eigen::Index i = 0; i < probe.rows(); ++i)
        probe.row(i) << rng.normal() * 150, rng.normal() * 300, rng.bernoulli(0.5);
    for (auto kind : kAllLearners) {
        Hyperparameters hp;
        hp.n_trees = 20;
        hp.decay = 0.01;
        auto model = fit(kind, d, hp, 9);
        model.fold_id = 4;
        const std::string text = export_model(model);
        const FittedModel back = import_model(text);
        EXPECT_EQ(back.kind, kind);
        EXPECT_EQ(back.hp, model.hp);
        EXPECT_EQ(back.seed, 9u);
        EXPECT_EQ(back.fold_id, 4);
        EXPECT_EQ(predict_proba(back, probe), predict_proba(model, probe)) << to_string(kind);
        EXPECT_EQ(export_model(back), text) << to_string(kind);
    }
}

TEST(ModelIo, RejectsMalformedInput) {
    const auto text = export_model(fit(LearnerKind::logistic, noisy(80, 3), {}, 1));
    EXPECT_THROW(import_model("not json"), ValidationError);
    EXPECT_THROW(import_model("{}"), ValidationError);
    auto j = nlohmann::json::parse(text);
    j["version"] = kModelFormatVersion + 1;
    EXPECT_THROW(import_model(j.dump()), ValidationError);
    j = nlohmann::json::parse(text);
    j["kind"] = "lasso";
    EXPECT_THROW(import_model(j.dump()), ValidationError);
}
