#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "ctxprior/expectations.hpp"
#include "ctxprior/rng.hpp"
#include "ctxprior/synth.hpp"
#include "oracles.hpp"

using namespace ctxprior;

namespace {

struct ManualData {
    std::vector<SceneRecord> scenes;
    std::vector<RatingAggregate> aggregates;
};

// Scenes with random channel features and a likelihood target y = planted
// linear map + noise. Channels not listed get independent noise features.
ManualData planted_linear(int n, const std::map<ChannelId, int>& dims, ChannelId signal_channel,
                          std::uint64_t seed, double noise_sd) {
    auto rng = make_engine(seed);
    std::normal_distribution<double> normal;
    ManualData data;
    const int sd = dims.at(signal_channel);
    Eigen::VectorXd w(sd);
    for (int j = 0; j < sd; ++j) w(j) = normal(rng);
    w /= w.norm();
    for (int i = 0; i < n; ++i) {
        SceneRecord scene;
        scene.scene_id = "m" + std::to_string(1000 + i);
        for (const auto& [channel, d] : dims) {
            Eigen::VectorXd x(d);
            for (int j = 0; j < d; ++j) x(j) = normal(rng);
            scene.channel_features[channel] = x;
        }
        RatingAggregate agg;
        agg.scene_id = scene.scene_id;
        agg.category = "car";
        agg.likelihood = w.dot(scene.features(signal_channel)) + 0.25 + noise_sd * normal(rng);
        agg.n_subjects = 1;
        data.scenes.push_back(std::move(scene));
        data.aggregates.push_back(std::move(agg));
    }
    return data;
}

ModelSpec spec_for(const std::string& letters, int pca_dims, bool standardize = true) {
    ModelSpec spec;
    spec.channels = ChannelSet::parse(letters);
    spec.pca_dims = pca_dims;
    spec.category = "car";
    spec.dimension = RatingDimension::Likelihood;
    spec.standardize = standardize;
    return spec;
}

}  // namespace

TEST_SUITE("expectations") {

TEST_CASE("full-rank pca plus regression reproduces a planted linear target") {
    const ManualData data = planted_linear(80, {{ChannelId::Coarse, 10}}, ChannelId::Coarse, 3, 0.0);
    const ExpectationModel model = fit_expectation_model(spec_for("C", 10), data.scenes, data.aggregates);
    const TrainingView view = training_view(data.scenes, data.aggregates, "car",
                                            RatingDimension::Likelihood);
    const Eigen::VectorXd pred = model.predict(view.scenes);
    CHECK((pred - view.y).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(pearson(pred, view.y) > 0.999999);
}

TEST_CASE("three-channel spec concatenates twenty dims per channel") {
    SynthConfig cfg;
    cfg.n_scenes = 120;
    cfg.seed = 5;
    const SynthExpectationData data = generate_expectation_dataset(cfg);
    const ExpectationModel model =
        fit_expectation_model(spec_for("TNC", 20), data.scenes, data.aggregates);
    CHECK(model.input_dim() == 60);
    REQUIRE(model.channel_bases.size() == 3);
    CHECK(model.channel_bases[0].channel == ChannelId::Target);
    for (const ChannelPca& cb : model.channel_bases) CHECK(cb.k_effective == 20);
}

TEST_CASE("pca dims are capped by training size and recorded") {
    const ManualData data = planted_linear(12, {{ChannelId::Target, 15}}, ChannelId::Target, 7, 0.1);
    const ExpectationModel model =
        fit_expectation_model(spec_for("T", 20), data.scenes, data.aggregates);
    CHECK(model.channel_bases[0].k_effective == 10);  // n - 2
    CHECK(model.input_dim() == 10);
}

TEST_CASE("fit failure modes") {
    const ManualData tiny = planted_linear(3, {{ChannelId::Target, 4}}, ChannelId::Target, 9, 0.0);
    CHECK_THROWS_AS(fit_expectation_model(spec_for("T", 2), tiny.scenes, tiny.aggregates), Error);

    ManualData missing = planted_linear(30, {{ChannelId::Target, 4}}, ChannelId::Target, 11, 0.0);
    try {
        fit_expectation_model(spec_for("TN", 2), missing.scenes, missing.aggregates);
        FAIL("expected MissingChannel");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingChannel);
    }

    // geometry dimension with zero boxes anywhere -> no training scenes
    ManualData data = planted_linear(30, {{ChannelId::Target, 4}}, ChannelId::Target, 13, 0.0);
    ModelSpec spec = spec_for("T", 2);
    spec.dimension = RatingDimension::Scale;
    CHECK_THROWS_AS(fit_expectation_model(spec, data.scenes, data.aggregates), Error);
}

TEST_CASE("kfold cv approaches one on noiseless data and chance on shuffled targets") {
    const ManualData clean =
        planted_linear(100, {{ChannelId::Nontarget, 8}}, ChannelId::Nontarget, 17, 0.0);
    const CvResult cv = kfold_eval(spec_for("N", 8), clean.scenes, clean.aggregates, 5, 21);
    CHECK(cv.r_cv > 0.999);
    CHECK(cv.fold_count == 5);
    CHECK(cv.n_scenes == 100);

    ManualData shuffled =
        planted_linear(650, {{ChannelId::Target, 8}}, ChannelId::Target, 19, 0.0);
    auto rng = make_engine(23);
    std::vector<int> perm = random_permutation(650, rng);
    std::vector<double> values;
    for (const auto& agg : shuffled.aggregates) values.push_back(agg.likelihood);
    for (int i = 0; i < 650; ++i)
        shuffled.aggregates[static_cast<std::size_t>(i)].likelihood =
            values[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    const CvResult null_cv =
        kfold_eval(spec_for("T", 8), shuffled.scenes, shuffled.aggregates, 5, 29);
    CHECK(std::abs(null_cv.r_cv) < 0.15);

    // determinism
    const CvResult again = kfold_eval(spec_for("T", 8), shuffled.scenes, shuffled.aggregates, 5, 29);
    CHECK(again.r_cv == null_cv.r_cv);
}

TEST_CASE("cross-validation defeats in-sample overfitting on pure noise") {
    const ManualData noise =
        planted_linear(60, {{ChannelId::Coarse, 40}}, ChannelId::Coarse, 31, 25.0);
    const ExpectationModel model =
        fit_expectation_model(spec_for("C", 20), noise.scenes, noise.aggregates);
    const TrainingView view =
        training_view(noise.scenes, noise.aggregates, "car", RatingDimension::Likelihood);
    const double in_sample = pearson(model.predict(view.scenes), view.y);
    const CvResult cv = kfold_eval(spec_for("C", 20), noise.scenes, noise.aggregates, 5, 37);
    CHECK(in_sample > 0.5);          // many dims fit the noise
    CHECK(std::abs(cv.r_cv) < 0.35); // held-out folds do not
}

TEST_CASE("single split equals the documented seed derivation") {
    const ManualData data =
        planted_linear(90, {{ChannelId::Nontarget, 6}}, ChannelId::Nontarget, 41, 0.5);
    SplitProtocol protocol;
    protocol.n_splits = 1;
    protocol.train_frac = 0.8;
    protocol.seed = 77;
    const SplitDistribution dist =
        repeated_split_eval(spec_for("N", 6), data.scenes, data.aggregates, protocol);
    REQUIRE(dist.correlations.size() == 1);

    // replicate split 0 by hand from the documented (seed, index) contract
    const TrainingView view =
        training_view(data.scenes, data.aggregates, "car", RatingDimension::Likelihood);
    auto rng = make_engine(derive_seed(77, 0));
    const std::vector<int> perm = random_permutation(view.size(), rng);
    const int n_train = static_cast<int>(std::llround(0.8 * view.size()));
    std::vector<const SceneRecord*> train_scenes, test_scenes;
    Eigen::VectorXd y_train(n_train), y_test(view.size() - n_train);
    for (int i = 0; i < n_train; ++i) {
        train_scenes.push_back(view.scenes[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
        y_train(i) = view.y(perm[static_cast<std::size_t>(i)]);
    }
    for (int i = n_train; i < view.size(); ++i) {
        test_scenes.push_back(view.scenes[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
        y_test(i - n_train) = view.y(perm[static_cast<std::size_t>(i)]);
    }
    const ExpectationModel fold_model = fit_on_view(spec_for("N", 6), train_scenes, y_train);
    const double r = pearson(fold_model.predict(test_scenes), y_test);
    CHECK(dist.correlations[0] == doctest::Approx(r).epsilon(1e-9));
    CHECK(dist.mean == doctest::Approx(r).epsilon(1e-9));
}

TEST_CASE("paired comparison bookkeeping") {
    SplitDistribution a, b;
    a.seed = b.seed = 5;
    a.train_frac = b.train_frac = 0.8;
    a.n_scenes = b.n_scenes = 100;
    a.spec = spec_for("N", 4);
    b.spec = spec_for("C", 4);
    a.correlations = {0.5, 0.7, 0.6};
    b.correlations = {0.6, 0.6, 0.6};
    const ModelComparison cmp = compare_models(a, b);
    CHECK(cmp.p_frac == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(cmp.n_splits == 3);

    // a against itself: strict wins never happen
    CHECK(compare_models(a, a).p_frac == doctest::Approx(0.0).epsilon(1e-15));

    SplitDistribution other = b;
    other.seed = 6;
    CHECK_THROWS_AS(compare_models(a, other), Error);
    other = b;
    other.correlations.pop_back();
    CHECK_THROWS_AS(compare_models(a, other), Error);
}

TEST_CASE("equal planted signals tie over repeated splits") {
    // T and N carry independent same-strength halves of the target. On any one
    // dataset sampling noise makes one channel genuinely stronger and the
    // paired comparison amplifies that, so the tie shows up in the average
    // p_frac over independent datasets, not in each p_frac alone.
    auto make_data = [](std::uint64_t seed) {
        auto rng = make_engine(seed);
        std::normal_distribution<double> normal;
        ManualData data;
        for (int i = 0; i < 140; ++i) {
            SceneRecord scene;
            scene.scene_id = "q" + std::to_string(i);
            Eigen::VectorXd t(5), n(5);
            for (int j = 0; j < 5; ++j) t(j) = normal(rng);
            for (int j = 0; j < 5; ++j) n(j) = normal(rng);
            scene.channel_features[ChannelId::Target] = t;
            scene.channel_features[ChannelId::Nontarget] = n;
            RatingAggregate agg;
            agg.scene_id = scene.scene_id;
            agg.category = "car";
            agg.likelihood = t(0) + n(0) + 0.4 * normal(rng);
            agg.n_subjects = 1;
            data.scenes.push_back(std::move(scene));
            data.aggregates.push_back(std::move(agg));
        }
        return data;
    };

    SplitProtocol protocol;
    protocol.n_splits = 200;
    protocol.seed = 47;
    std::vector<double> p_fracs;
    for (std::uint64_t seed : {43u, 143u, 243u, 343u, 443u, 543u, 643u, 743u, 843u}) {
        const ManualData data = make_data(seed);
        const TrainingView view =
            training_view(data.scenes, data.aggregates, "car", RatingDimension::Likelihood);
        const auto dists =
            repeated_split_eval_multi({spec_for("T", 5), spec_for("N", 5)}, view, protocol);
        REQUIRE(dists.size() == 2);
        const ModelComparison cmp = compare_models(dists[0], dists[1]);
        CHECK(cmp.p_frac >= 0.005);  // neither channel sweeps every split
        CHECK(cmp.p_frac <= 0.995);
        p_fracs.push_back(cmp.p_frac);
    }
    const double mean_p = oracle::mean(p_fracs);
    CHECK(mean_p > 0.3);
    CHECK(mean_p < 0.7);

    // distributions are deterministic and schedule-invariant
    const ManualData data = make_data(43);
    const TrainingView view =
        training_view(data.scenes, data.aggregates, "car", RatingDimension::Likelihood);
    const auto dists =
        repeated_split_eval_multi({spec_for("T", 5), spec_for("N", 5)}, view, protocol);
    SplitProtocol threaded = protocol;
    threaded.jobs = 3;
    const auto again = repeated_split_eval_multi({spec_for("T", 5), spec_for("N", 5)}, view, threaded);
    CHECK(again[0].correlations == dists[0].correlations);
    CHECK(again[1].correlations == dists[1].correlations);
}

TEST_CASE("stored distribution moments match the vector") {
    const ManualData data =
        planted_linear(70, {{ChannelId::Coarse, 6}}, ChannelId::Coarse, 53, 0.8);
    SplitProtocol protocol;
    protocol.n_splits = 60;
    protocol.seed = 59;
    const SplitDistribution dist =
        repeated_split_eval(spec_for("C", 6), data.scenes, data.aggregates, protocol);
    REQUIRE(static_cast<int>(dist.correlations.size()) == 60);
    CHECK(dist.mean == doctest::Approx(oracle::mean(dist.correlations)).epsilon(1e-12));
    CHECK(dist.sd == doctest::Approx(oracle::sample_sd(dist.correlations)).epsilon(1e-12));
}

TEST_CASE("channel-subset table on planted nontarget-plus-coarse signal") {
    SynthConfig cfg;
    cfg.n_scenes = 160;
    cfg.n_subjects = 8;
    cfg.dims = {{ChannelId::Target, 16}, {ChannelId::Nontarget, 12}, {ChannelId::Coarse, 24}};
    cfg.factor_rank = {{ChannelId::Target, 4}, {ChannelId::Nontarget, 4}, {ChannelId::Coarse, 4}};
    cfg.noise_sd = 0.4;
    cfg.reliability = 0.92;
    cfg.seed = 61;
    const SynthExpectationData data = generate_expectation_dataset(cfg);

    EvalConfig eval;
    eval.pca_dims = 6;
    eval.n_splits = 80;
    eval.ceiling_resamples = 120;
    eval.seed = 67;
    SliderRange slider;
    FrameSize frame;
    const SpecTable table = evaluate_all_specs(data.scenes, data.aggregates, data.ratings, frame,
                                               slider, "car", RatingDimension::Likelihood, eval);

    const std::vector<std::string> expected_order = {"TNC", "T", "N", "C", "TN", "TC", "NC"};
    REQUIRE(table.rows.size() == expected_order.size());
    for (std::size_t i = 0; i < expected_order.size(); ++i)
        CHECK(table.rows[i].spec == expected_order[i]);

    auto row = [&](const std::string& name) {
        return *std::find_if(table.rows.begin(), table.rows.end(),
                             [&](const SpecRow& r) { return r.spec == name; });
    };
    CHECK((table.best_spec == "NC" || table.best_spec == "TNC"));
    CHECK(row("T").mean < 0.35);
    CHECK(row("NC").mean > 0.6);
    CHECK(row(table.best_spec).best);
    CHECK(row(table.best_spec).p_frac == 0.0);
    CHECK(row("T").flag == "*");

    // supersets lose little: joint model at least matches its parts
    CHECK(row("NC").mean >= row("N").mean - 0.03);
    CHECK(row("NC").mean >= row("C").mean - 0.03);

    // flags agree with the stored p_frac values
    for (const SpecRow& r : table.rows) {
        if (r.best) continue;
        if (r.p_frac < 0.001) CHECK(r.flag == "*");
        if (r.p_frac > 0.05) CHECK(r.flag == "#");
    }

    // ceiling present and dominating
    REQUIRE(table.ceiling.has_value());
    CHECK(table.ceiling->mean > 0.8);
    for (const SpecRow& r : table.rows)
        CHECK(r.mean <= table.ceiling->mean + 2.0 * table.ceiling->sd);

    // distributions stay aligned with rows and pairwise comparable
    REQUIRE(table.distributions.size() == table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i)
        CHECK(table.distributions[i].spec.name() == table.rows[i].spec);
}

TEST_CASE("table with a single subject omits the ceiling") {
    SynthConfig cfg;
    cfg.n_scenes = 80;
    cfg.n_subjects = 1;
    cfg.dims = {{ChannelId::Target, 8}, {ChannelId::Nontarget, 8}, {ChannelId::Coarse, 8}};
    cfg.factor_rank = {{ChannelId::Target, 3}, {ChannelId::Nontarget, 3}, {ChannelId::Coarse, 3}};
    cfg.seed = 71;
    const SynthExpectationData data = generate_expectation_dataset(cfg);
    EvalConfig eval;
    eval.pca_dims = 3;
    eval.n_splits = 20;
    eval.seed = 73;
    eval.specs = {ChannelSet::parse("NC")};
    const SpecTable table = evaluate_all_specs(data.scenes, data.aggregates, data.ratings, {}, {},
                                               "car", RatingDimension::Likelihood, eval);
    CHECK(!table.ceiling.has_value());
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].spec == "NC");
    CHECK(table.rows[0].best);
}

TEST_CASE("persisted models predict bit-identically") {
    SynthConfig cfg;
    cfg.n_scenes = 90;
    cfg.dims = {{ChannelId::Target, 10}, {ChannelId::Nontarget, 10}, {ChannelId::Coarse, 14}};
    cfg.factor_rank = {{ChannelId::Target, 3}, {ChannelId::Nontarget, 3}, {ChannelId::Coarse, 3}};
    cfg.seed = 79;
    const SynthExpectationData data = generate_expectation_dataset(cfg);
    const ExpectationModel model =
        fit_expectation_model(spec_for("NC", 5), data.scenes, data.aggregates);
    const std::string bytes = save_model(model);
    const ExpectationModel loaded = load_expectation_model(bytes);
    for (int i = 0; i < 10; ++i) {
        const SceneRecord& scene = data.scenes[static_cast<std::size_t>(i * 7)];
        CHECK(model.predict(scene) == loaded.predict(scene));
    }
    CHECK(save_model(loaded) == bytes);

    CHECK_THROWS_AS(load_expectation_model("garbage"), Error);

    nlohmann::json doc = nlohmann::json::parse(bytes);
    doc["version"] = 2;
    try {
        load_expectation_model(doc.dump());
        FAIL("expected VersionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::VersionMismatch);
    }

    std::string truncated = bytes.substr(0, bytes.size() / 2);
    CHECK_THROWS_AS(load_expectation_model(truncated), Error);
}

TEST_CASE("feature-space weights reproduce prediction differences") {
    for (bool standardize : {true, false}) {
        const ManualData data = planted_linear(
            50, {{ChannelId::Nontarget, 7}, {ChannelId::Coarse, 9}}, ChannelId::Coarse, 83, 0.3);
        const ExpectationModel model =
            fit_expectation_model(spec_for("NC", 5, standardize), data.scenes, data.aggregates);
        const Eigen::VectorXd wn = feature_space_weights(model, ChannelId::Nontarget);
        const Eigen::VectorXd wc = feature_space_weights(model, ChannelId::Coarse);
        REQUIRE(wn.size() == 7);
        REQUIRE(wc.size() == 9);
        for (int i = 0; i < 6; ++i) {
            const SceneRecord& a = data.scenes[static_cast<std::size_t>(i)];
            const SceneRecord& b = data.scenes[static_cast<std::size_t>(i + 20)];
            const double direct = model.predict(a) - model.predict(b);
            const double via_weights =
                wn.dot(a.features(ChannelId::Nontarget) - b.features(ChannelId::Nontarget)) +
                wc.dot(a.features(ChannelId::Coarse) - b.features(ChannelId::Coarse));
            CHECK(direct == doctest::Approx(via_weights).epsilon(1e-8));
        }
        CHECK_THROWS_AS(feature_space_weights(model, ChannelId::Target), Error);
    }
}

TEST_CASE("nontarget weight correlation endpoints and top labels") {
    const ManualData data = planted_linear(60, {{ChannelId::Nontarget, 6}}, ChannelId::Nontarget,
                                           89, 0.2);
    const ExpectationModel model =
        fit_expectation_model(spec_for("N", 6), data.scenes, data.aggregates);
    std::vector<std::string> vocab;
    for (int j = 0; j < 6; ++j) vocab.push_back("label_" + std::to_string(j));

    const NontargetWeightReport same = nontarget_weight_correlation(model, model, vocab);
    CHECK(same.r == doctest::Approx(1.0).epsilon(1e-9));

    ExpectationModel negated = model;
    negated.regression.weights = -model.regression.weights;
    const NontargetWeightReport flipped = nontarget_weight_correlation(model, negated, vocab);
    CHECK(flipped.r == doctest::Approx(-1.0).epsilon(1e-9));

    CHECK(!same.top_positive_a.empty());
    CHECK(same.top_positive_a.size() <= 5);
    for (const LabelWeight& lw : same.top_positive_a) CHECK(lw.weight > 0.0);
    for (const LabelWeight& lw : same.top_negative_a) CHECK(lw.weight < 0.0);
    for (std::size_t i = 1; i < same.top_positive_a.size(); ++i)
        CHECK(same.top_positive_a[i - 1].weight >= same.top_positive_a[i].weight);

    std::vector<std::string> short_vocab(vocab.begin(), vocab.end() - 1);
    CHECK_THROWS_AS(nontarget_weight_correlation(model, model, short_vocab), Error);
}

}  // TEST_SUITE
