#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "ctxprior/fusion.hpp"
#include "ctxprior/rng.hpp"
#include "oracles.hpp"

using namespace ctxprior;

namespace {

FusionFeatureSet two_features() {
    FusionFeatureSet set = FusionFeatureSet::baseline();
    set.items.push_back(FusionFeature::expectation("car", RatingDimension::Likelihood));
    return set;
}

// Matrix with fabricated columns; labels supplied by the caller.
FusionMatrix make_matrix(const Eigen::MatrixXd& X, const std::vector<std::uint8_t>& labels,
                         const FusionFeatureSet& features) {
    FusionMatrix data;
    data.X = X;
    data.labels = labels;
    data.features = features;
    for (int i = 0; i < X.rows(); ++i) data.scene_ids.push_back("s" + std::to_string(i));
    return data;
}

FusionClassifier identity_classifier(const Eigen::VectorXd& weights, double bias,
                                     double threshold, const FusionFeatureSet& features) {
    FusionClassifier clf;
    clf.features = features;
    clf.scaler.mean = Eigen::VectorXd::Zero(weights.size());
    clf.scaler.sd = Eigen::VectorXd::Ones(weights.size());
    clf.weights = weights;
    clf.bias = bias;
    clf.threshold = threshold;
    return clf;
}

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("auc matches the pair-counting oracle") {
    auto rng = make_engine(101);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 200;
        Eigen::VectorXd scores(n);
        std::vector<std::uint8_t> labels(n);
        for (int i = 0; i < n; ++i) {
            // one-decimal quantization forces plenty of ties
            scores[i] = std::round(uniform(rng) * 10.0) / 10.0;
            labels[static_cast<std::size_t>(i)] = coin(rng) ? 1 : 0;
        }
        labels[0] = 1;
        labels[1] = 0;
        std::vector<double> sv(scores.data(), scores.data() + n);
        const double expected = oracle::pair_count_auc(sv, labels);
        CHECK(roc(scores, labels).auc == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("curve endpoints, midpoint thresholds and tie handling") {
    Eigen::VectorXd scores(4);
    scores << 0.9, 0.8, 0.8, 0.3;
    const std::vector<std::uint8_t> labels = {1, 0, 1, 0};
    const RocCurve curve = roc(scores, labels);

    REQUIRE(curve.points.size() == 4);
    CHECK(curve.points[0].threshold == std::numeric_limits<double>::infinity());
    CHECK(curve.points[0].fpr == 0.0);
    CHECK(curve.points[0].tpr == 0.0);
    CHECK(curve.points[1].threshold == doctest::Approx(0.85).epsilon(1e-15));
    CHECK(curve.points[1].fpr == 0.0);
    CHECK(curve.points[1].tpr == 0.5);
    CHECK(curve.points[2].threshold == doctest::Approx(0.55).epsilon(1e-15));
    CHECK(curve.points[2].fpr == 0.5);
    CHECK(curve.points[2].tpr == 1.0);
    CHECK(curve.points[3].threshold == -std::numeric_limits<double>::infinity());
    CHECK(curve.points[3].fpr == 1.0);
    CHECK(curve.points[3].tpr == 1.0);
    // pos {0.9, 0.8} vs neg {0.8, 0.3}: wins 3, tie 1 -> 3.5 / 4
    CHECK(curve.auc == doctest::Approx(0.875).epsilon(1e-12));

    // trapezoid re-integration reproduces the reported auc
    double integral = 0.0;
    for (std::size_t j = 1; j < curve.points.size(); ++j)
        integral += (curve.points[j].fpr - curve.points[j - 1].fpr) *
                    (curve.points[j].tpr + curve.points[j - 1].tpr) / 2.0;
    CHECK(curve.auc == doctest::Approx(integral).epsilon(1e-12));
}

TEST_CASE("curve is monotone with strictly decreasing thresholds") {
    auto rng = make_engine(103);
    std::normal_distribution<double> normal;
    Eigen::VectorXd scores(120);
    std::vector<std::uint8_t> labels(120);
    for (int i = 0; i < 120; ++i) {
        labels[static_cast<std::size_t>(i)] = i % 2;
        scores[i] = std::round((normal(rng) + 0.8 * (i % 2)) * 4.0) / 4.0;
    }
    const RocCurve curve = roc(scores, labels);
    for (std::size_t j = 1; j < curve.points.size(); ++j) {
        CHECK(curve.points[j].fpr >= curve.points[j - 1].fpr);
        CHECK(curve.points[j].tpr >= curve.points[j - 1].tpr);
        CHECK(curve.points[j].threshold < curve.points[j - 1].threshold);
    }
}

TEST_CASE("auc endpoints and refusals") {
    Eigen::VectorXd separated(6);
    separated << 5, 4, 3, 2, 1, 0;
    CHECK(roc(separated, {1, 1, 1, 0, 0, 0}).auc == 1.0);
    CHECK(roc(separated, {0, 0, 0, 1, 1, 1}).auc == 0.0);

    const Eigen::VectorXd flat = Eigen::VectorXd::Constant(10, 0.7);
    std::vector<std::uint8_t> half(10, 0);
    for (int i = 0; i < 5; ++i) half[static_cast<std::size_t>(i)] = 1;
    CHECK(roc(flat, half).auc == doctest::Approx(0.5).epsilon(1e-15));

    try {
        roc(separated, {1, 1, 1, 1, 1, 1});
        FAIL("expected SingleClassInput");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingleClassInput);
    }
    CHECK_THROWS_AS(roc(separated, {1, 0}), Error);
    Eigen::VectorXd with_nan = separated;
    with_nan[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(roc(with_nan, {1, 1, 1, 0, 0, 0}), Error);
}

TEST_CASE("auc is invariant to increasing affine score maps") {
    auto rng = make_engine(107);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Eigen::VectorXd scores(80);
    std::vector<std::uint8_t> labels(80);
    for (int i = 0; i < 80; ++i) {
        scores[i] = std::round(uniform(rng) * 20.0) / 20.0;
        labels[static_cast<std::size_t>(i)] = i % 3 == 0;
    }
    const double base = roc(scores, labels).auc;
    CHECK(roc((2.0 * scores).array() + 3.0, labels).auc == doctest::Approx(base).epsilon(1e-12));
    CHECK(roc(-scores, labels).auc == doctest::Approx(1.0 - base).epsilon(1e-12));
}

TEST_CASE("separable features train to perfect accuracy") {
    auto rng = make_engine(109);
    std::normal_distribution<double> normal;
    const int n = 120;
    Eigen::MatrixXd X(n, 2);
    std::vector<std::uint8_t> labels(n);
    for (int i = 0; i < n; ++i) {
        labels[static_cast<std::size_t>(i)] = i % 2;
        X(i, 0) = (i % 2 ? 2.0 : -2.0) + 0.3 * normal(rng);  // margin ~1.4
        X(i, 1) = normal(rng);
    }
    const FusionTrainResult result = train_fusion(make_matrix(X, labels, two_features()), 5, 7, 1e-3);
    CHECK(result.cv_accuracy == 1.0);
    REQUIRE(result.fold_accuracies.size() == 5);
    const ErrorBreakdown breakdown =
        error_breakdown(result.classifier, make_matrix(X, labels, two_features()));
    CHECK(breakdown.accuracy() == 1.0);
    CHECK(breakdown.misses == 0);
    CHECK(breakdown.false_alarms == 0);
}

TEST_CASE("labels independent of features give chance accuracy") {
    std::normal_distribution<double> normal;
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        auto rng = make_engine(seed);
        const int n = 400;
        Eigen::MatrixXd X(n, 2);
        std::vector<std::uint8_t> labels(n);
        for (int i = 0; i < n; ++i) {
            labels[static_cast<std::size_t>(i)] = i % 2;  // balanced
            X(i, 0) = normal(rng);
            X(i, 1) = normal(rng);
        }
        const FusionTrainResult result =
            train_fusion(make_matrix(X, labels, two_features()), 5, seed, 1e-3);
        CHECK(result.cv_accuracy > 0.40);
        CHECK(result.cv_accuracy < 0.60);
    }
}

TEST_CASE("refit classifier sits at the regularized loss optimum") {
    auto rng = make_engine(113);
    std::normal_distribution<double> normal;
    const int n = 150;
    const double l2 = 0.5;
    Eigen::MatrixXd X(n, 3);
    std::vector<std::uint8_t> labels(n);
    for (int i = 0; i < n; ++i) {
        labels[static_cast<std::size_t>(i)] = i % 2;
        for (int j = 0; j < 3; ++j) X(i, j) = normal(rng) + (j == 0 ? 0.8 * (i % 2) : 0.0);
    }
    FusionFeatureSet set = two_features();
    set.items.push_back(FusionFeature::expectation("car", RatingDimension::Scale));
    const FusionMatrix data = make_matrix(X, labels, set);

    SUBCASE("logistic") {
        const FusionClassifier clf = train_fusion(data, 5, 3, l2, FusionLoss::Logistic).classifier;
        const Eigen::MatrixXd Z = clf.scaler.apply(X);
        Eigen::VectorXd grad_w = Eigen::VectorXd::Zero(3);
        double grad_b = 0.0;
        for (int i = 0; i < n; ++i) {
            const double eta = clf.weights.dot(Z.row(i)) + clf.bias;
            const double mu = 1.0 / (1.0 + std::exp(-eta));
            const double y = labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
            grad_w += (mu - y) * Z.row(i).transpose();
            grad_b += mu - y;
        }
        grad_w += l2 * clf.weights;
        CHECK(grad_w.cwiseAbs().maxCoeff() < 1e-6);
        CHECK(std::abs(grad_b) < 1e-6);
    }

    SUBCASE("squared hinge") {
        const FusionClassifier clf = train_fusion(data, 5, 3, l2, FusionLoss::Margin).classifier;
        const Eigen::MatrixXd Z = clf.scaler.apply(X);
        Eigen::VectorXd grad_w = Eigen::VectorXd::Zero(3);
        double grad_b = 0.0;
        for (int i = 0; i < n; ++i) {
            const double y = labels[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
            const double margin = y * (clf.weights.dot(Z.row(i)) + clf.bias);
            if (margin >= 1.0) continue;
            grad_w += 2.0 * (margin - 1.0) * y * Z.row(i).transpose();
            grad_b += 2.0 * (margin - 1.0) * y;
        }
        grad_w += l2 * clf.weights;
        CHECK(grad_w.cwiseAbs().maxCoeff() < 1e-5);
        CHECK(std::abs(grad_b) < 1e-5);
    }
}

TEST_CASE("decisions are invariant to joint positive rescaling") {
    auto rng = make_engine(127);
    std::normal_distribution<double> normal;
    Eigen::VectorXd w(2);
    w << 1.3, -0.4;
    const FusionClassifier clf = identity_classifier(w, 0.2, 0.1, two_features());
    FusionClassifier scaled = clf;
    scaled.weights *= 3.7;
    scaled.bias *= 3.7;
    scaled.threshold *= 3.7;
    for (int i = 0; i < 200; ++i) {
        Eigen::VectorXd x(2);
        x << normal(rng), normal(rng);
        CHECK(clf.decide(x) == scaled.decide(x));
    }
}

TEST_CASE("score exactly at threshold resolves to absent") {
    Eigen::VectorXd w(1);
    w << 1.0;
    const FusionClassifier clf = identity_classifier(w, 0.0, 0.7, FusionFeatureSet::baseline());
    Eigen::VectorXd x(1);
    x << 0.7;
    CHECK(clf.decision_score(x) == 0.7);
    CHECK(!clf.decide(x));
    x << 0.7 + 1e-12;
    CHECK(clf.decide(x));
}

TEST_CASE("training refusals") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(40, 2);
    std::vector<std::uint8_t> labels(40, 0);
    for (int i = 0; i < 20; ++i) labels[static_cast<std::size_t>(i)] = 1;
    const FusionMatrix data = make_matrix(X, labels, two_features());

    CHECK_THROWS_AS(train_fusion(data, 1, 5, 0.0), Error);    // k_folds
    CHECK_THROWS_AS(train_fusion(data, 5, 5, -0.1), Error);   // negative l2

    std::vector<std::uint8_t> one_class(40, 1);
    try {
        train_fusion(make_matrix(X, one_class, two_features()), 5, 5, 0.0);
        FAIL("expected SingleClassInput");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingleClassInput);
    }

    std::vector<std::uint8_t> lone_positive(40, 0);
    lone_positive[3] = 1;
    try {
        train_fusion(make_matrix(X, lone_positive, two_features()), 2, 5, 0.0);
        FAIL("expected DegenerateFold");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateFold);
    }
}

TEST_CASE("class balancing subsamples the majority in place") {
    auto rng = make_engine(131);
    std::normal_distribution<double> normal;
    const int n = 33;
    Eigen::MatrixXd X(n, 1);
    std::vector<std::uint8_t> labels(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = normal(rng);
        labels[static_cast<std::size_t>(i)] = i < 30 ? 1 : 0;  // 30 pos, 3 neg
    }
    const FusionMatrix data = make_matrix(X, labels, FusionFeatureSet::baseline());
    const FusionMatrix balanced = balance_classes(data, 17);

    CHECK(balanced.n() == 6);
    int pos = 0;
    for (std::uint8_t label : balanced.labels) pos += label;
    CHECK(pos == 3);

    // kept rows appear in original order and carry their original values
    std::size_t cursor = 0;
    for (std::size_t j = 0; j < balanced.scene_ids.size(); ++j) {
        while (cursor < data.scene_ids.size() && data.scene_ids[cursor] != balanced.scene_ids[j])
            ++cursor;
        REQUIRE(cursor < data.scene_ids.size());
        CHECK(balanced.X(static_cast<int>(j), 0) == data.X(static_cast<int>(cursor), 0));
        CHECK(balanced.labels[j] == data.labels[cursor]);
    }

    const FusionMatrix same = balance_classes(data, 17);
    CHECK(same.scene_ids == balanced.scene_ids);
    CHECK(same.X == balanced.X);
    const FusionMatrix other = balance_classes(data, 18);
    CHECK(other.scene_ids != balanced.scene_ids);

    // already balanced input comes back unchanged
    const FusionMatrix noop = balance_classes(balanced, 99);
    CHECK(noop.X == balanced.X);
    CHECK(noop.scene_ids == balanced.scene_ids);
    CHECK(noop.labels == balanced.labels);
}

TEST_CASE("feature matrix assembly from scores, truth and models") {
    auto rng = make_engine(137);
    std::normal_distribution<double> normal;

    // evaluation scenes with coarse features and ground truth
    std::vector<SceneRecord> scenes(8);
    std::vector<const SceneRecord*> ptrs;
    std::vector<DetectorScore> scores;
    std::vector<SceneRecord> train_scenes;
    std::vector<RatingAggregate> train_aggs;
    for (int i = 0; i < 8; ++i) {
        scenes[static_cast<std::size_t>(i)].scene_id = "e" + std::to_string(i);
        Eigen::VectorXd c(5);
        for (int j = 0; j < 5; ++j) c(j) = normal(rng);
        scenes[static_cast<std::size_t>(i)].channel_features[ChannelId::Coarse] = c;
        scenes[static_cast<std::size_t>(i)].ground_truth["car"] = i % 2 == 0;
        ptrs.push_back(&scenes[static_cast<std::size_t>(i)]);
        scores.push_back({"e" + std::to_string(i), "cnn_a", "car", 0.1 * i});
        scores.push_back({"e" + std::to_string(i), "cnn_b", "car", -1.0});  // decoy detector
    }
    for (int i = 0; i < 40; ++i) {
        SceneRecord s;
        s.scene_id = "t" + std::to_string(i);
        Eigen::VectorXd c(5);
        for (int j = 0; j < 5; ++j) c(j) = normal(rng);
        s.channel_features[ChannelId::Coarse] = c;
        RatingAggregate a;
        a.scene_id = s.scene_id;
        a.category = "car";
        a.likelihood = c(0) * 0.5 + 0.5;
        a.n_subjects = 1;
        train_scenes.push_back(std::move(s));
        train_aggs.push_back(std::move(a));
    }
    ModelSpec spec;
    spec.channels = ChannelSet::parse("C");
    spec.pca_dims = 4;
    spec.category = "car";
    const ExpectationModel model = fit_expectation_model(spec, train_scenes, train_aggs);

    std::map<ExpectationModelKey, const ExpectationModel*> models;
    for (const std::string& cat : {"car", "person"})
        for (RatingDimension dim : kAllDimensions) models[{cat, dim}] = &model;

    SUBCASE("score-only set reproduces the confidence column") {
        const FusionMatrix m =
            build_fusion_features(scores, "cnn_a", "car", {}, ptrs, FusionFeatureSet::baseline());
        REQUIRE(m.X.cols() == 1);
        REQUIRE(m.n() == 8);
        for (int i = 0; i < 8; ++i) {
            CHECK(m.X(i, 0) == 0.1 * i);
            CHECK(m.labels[static_cast<std::size_t>(i)] == (i % 2 == 0 ? 1 : 0));
        }
    }

    SUBCASE("all-ratings set has eleven columns of model predictions") {
        const FusionFeatureSet set = FusionFeatureSet::all_ratings({"car", "person"});
        CHECK(set.size() == 11);
        CHECK(set.items[0].is_score);
        const FusionMatrix m = build_fusion_features(scores, "cnn_a", "car", models, ptrs, set);
        REQUIRE(m.X.cols() == 11);
        for (int i = 0; i < 8; ++i)
            for (int c = 1; c < 11; ++c) CHECK(m.X(i, c) == model.predict(scenes[static_cast<std::size_t>(i)]));
    }

    SUBCASE("missing pieces are named errors") {
        std::vector<DetectorScore> short_scores(scores.begin(), scores.end() - 2);
        try {
            build_fusion_features(short_scores, "cnn_a", "car", {}, ptrs,
                                  FusionFeatureSet::baseline());
            FAIL("expected MissingScore");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MissingScore);
        }

        SceneRecord no_truth = scenes[0];
        no_truth.ground_truth.clear();
        std::vector<const SceneRecord*> with_gap = ptrs;
        with_gap[0] = &no_truth;
        try {
            build_fusion_features(scores, "cnn_a", "car", {}, with_gap,
                                  FusionFeatureSet::baseline());
            FAIL("expected MissingGroundTruth");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MissingGroundTruth);
        }

        CHECK_THROWS_AS(build_fusion_features(scores, "cnn_a", "car", {}, ptrs, two_features()),
                        Error);  // no model registered
    }

    SUBCASE("malformed feature sets are rejected up front") {
        FusionFeatureSet no_score;
        no_score.items.push_back(FusionFeature::expectation("car", RatingDimension::Likelihood));
        CHECK_THROWS_AS(build_fusion_features(scores, "cnn_a", "car", models, ptrs, no_score),
                        Error);
        FusionFeatureSet dup = two_features();
        dup.items.push_back(FusionFeature::expectation("car", RatingDimension::Likelihood));
        try {
            build_fusion_features(scores, "cnn_a", "car", models, ptrs, dup);
            FAIL("expected DuplicateEntry");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DuplicateEntry);
        }
    }
}

TEST_CASE("error breakdown counts every cell") {
    Eigen::VectorXd w(1);
    w << 1.0;
    const FusionClassifier clf = identity_classifier(w, 0.0, 0.5, FusionFeatureSet::baseline());
    Eigen::MatrixXd X(4, 1);
    X << 1.0, 0.2, 0.8, 0.4;
    const FusionMatrix data = make_matrix(X, {1, 1, 0, 0}, FusionFeatureSet::baseline());
    const ErrorBreakdown out = error_breakdown(clf, data);
    CHECK(out.hits == 1);
    CHECK(out.misses == 1);
    CHECK(out.false_alarms == 1);
    CHECK(out.correct_rejections == 1);
    CHECK(out.positives() == 2);
    CHECK(out.negatives() == 2);
    CHECK(out.accuracy() == 0.5);
    CHECK(out.decisions == std::vector<std::uint8_t>{1, 0, 1, 0});

    const FusionMatrix mismatched = make_matrix(X, {1, 1, 0, 0}, two_features());
    CHECK_THROWS_AS(error_breakdown(clf, mismatched), Error);
}

TEST_CASE("planted context gives a negative boundary slope and a real gain") {
    auto rng = make_engine(139);
    std::normal_distribution<double> normal;
    const int n = 500;
    Eigen::MatrixXd X(n, 2);
    std::vector<std::uint8_t> labels(n);
    for (int i = 0; i < n; ++i) {
        const int y = i % 2;
        labels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(y);
        X(i, 0) = 1.2 * y + normal(rng);  // detector score
        X(i, 1) = 0.9 * y + normal(rng);  // predicted likelihood
    }
    const FusionTrainResult with_context =
        train_fusion(make_matrix(X, labels, two_features()), 5, 41, 1e-3);
    CHECK(with_context.classifier.weights[0] > 0.0);
    CHECK(with_context.classifier.weights[1] > 0.0);
    // boundary w0*s + w1*lk + b = t in the (score, likelihood) plane
    const double slope = -with_context.classifier.weights[0] / with_context.classifier.weights[1];
    CHECK(slope < 0.0);

    const FusionTrainResult score_only = train_fusion(
        make_matrix(X.col(0), labels, FusionFeatureSet::baseline()), 5, 41, 1e-3);
    CHECK(with_context.cv_accuracy > score_only.cv_accuracy + 0.02);
}

TEST_CASE("association index from hand-built presence") {
    PresenceMatrix presence;
    presence.vocabulary = {"car", "person", "tree"};
    // 20 scenes: car in the first 10; tree everywhere; person in 8 of the
    // car scenes and 2 of the rest
    for (int i = 0; i < 20; ++i) {
        presence.scene_ids.push_back("p" + std::to_string(i));
        const std::uint8_t car = i < 10;
        const std::uint8_t person = (i < 8) || (i >= 10 && i < 12);
        presence.rows.push_back({car, person, 1});
    }

    // p(person | car) = 0.8, p(person) = 0.5
    const AssociationIndex pc = association_index(presence, "person", "car");
    CHECK(pc.value == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(pc.object_label == "person");
    CHECK(pc.anchor_label == "car");

    // an always-present object carries no information
    CHECK(association_index(presence, "tree", "car").value == doctest::Approx(0.0).epsilon(1e-15));

    // perfectly predictive anchor on a balanced object: |1 - 0.5|
    PresenceMatrix tight;
    tight.vocabulary = {"obj", "anchor"};
    for (int i = 0; i < 20; ++i) {
        tight.scene_ids.push_back("q" + std::to_string(i));
        const std::uint8_t a = i < 10;
        tight.rows.push_back({a, a});
    }
    CHECK(association_index(tight, "obj", "anchor").value == doctest::Approx(0.5).epsilon(1e-12));

    // independent counting oracle on a random matrix
    auto rng = make_engine(149);
    std::bernoulli_distribution coin(0.4);
    PresenceMatrix random_presence;
    random_presence.vocabulary = {"a", "b"};
    int n_a = 0, n_b = 0, n_ab = 0;
    for (int i = 0; i < 200; ++i) {
        random_presence.scene_ids.push_back("r" + std::to_string(i));
        const std::uint8_t a = coin(rng), b = coin(rng);
        random_presence.rows.push_back({a, b});
        n_a += a;
        n_b += b;
        n_ab += a && b;
    }
    const double expected = std::abs(static_cast<double>(n_ab) / n_b - n_a / 200.0);
    CHECK(association_index(random_presence, "a", "b").value ==
          doctest::Approx(expected).epsilon(1e-12));

    CHECK(average_association_index(presence, "person", {"car", "tree"}) ==
          doctest::Approx((0.3 + 0.0) / 2.0).epsilon(1e-12));

    try {
        association_index(presence, "person", "bicycle");
        FAIL("expected unknown-label refusal");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidConfig);
    }
    PresenceMatrix empty_anchor = presence;
    for (auto& row : empty_anchor.rows) row[0] = 0;
    try {
        association_index(empty_anchor, "person", "car");
        FAIL("expected EmptyAnchor");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyAnchor);
    }
}

TEST_CASE("transfer analysis endpoints and permutation p-values") {
    const std::vector<double> association = {0.1, 0.5, 0.3, 0.8, 0.2, 0.6};
    const std::vector<double> baseline = {0.7, 0.8, 0.75, 0.9, 0.72, 0.85};

    SUBCASE("identical vectors correlate perfectly with a floor p-value") {
        const TransferReport report = transfer_analysis(association, association, baseline, 500, 3);
        CHECK(report.n_categories == 6);
        REQUIRE(report.r_association.has_value());
        CHECK(*report.r_association == doctest::Approx(1.0).epsilon(1e-12));
        REQUIRE(report.p_association.has_value());
        CHECK(*report.p_association >= 1.0 / 501.0);
        CHECK(*report.p_association < 0.05);
    }

    SUBCASE("constant inputs leave the correlation undefined") {
        const std::vector<double> flat(6, 0.25);
        const TransferReport report = transfer_analysis(association, association, flat, 200, 3);
        CHECK(report.r_association.has_value());
        CHECK(!report.r_baseline.has_value());
        CHECK(!report.p_baseline.has_value());
    }

    SUBCASE("independent noise is not significant") {
        const std::vector<double> benefits = {0.03, 0.01, 0.04, 0.02, 0.05, 0.015};
        const TransferReport report = transfer_analysis(benefits, association, baseline, 999, 5);
        REQUIRE(report.p_association.has_value());
        CHECK(*report.p_association > 0.01);
    }

    SUBCASE("same seed reproduces the same p-values") {
        const std::vector<double> benefits = {0.02, 0.05, 0.03, 0.07, 0.025, 0.055};
        const TransferReport a = transfer_analysis(benefits, association, baseline, 300, 11);
        const TransferReport b = transfer_analysis(benefits, association, baseline, 300, 11);
        CHECK(*a.p_association == *b.p_association);
        CHECK(*a.p_baseline == *b.p_baseline);
    }

    SUBCASE("shape refusals") {
        CHECK_THROWS_AS(transfer_analysis({0.1, 0.2}, {0.1, 0.2}, {0.5, 0.6}, 100, 3), Error);
        CHECK_THROWS_AS(transfer_analysis({0.1, 0.2, 0.3}, {0.1, 0.2}, {0.5, 0.6, 0.7}, 100, 3),
                        Error);
        CHECK_THROWS_AS(transfer_analysis(association, association, baseline, 0, 3), Error);
    }
}

TEST_CASE("fusion classifier survives a save/load round trip") {
    auto rng = make_engine(151);
    std::normal_distribution<double> normal;
    const int n = 80;
    Eigen::MatrixXd X(n, 2);
    std::vector<std::uint8_t> labels(n);
    for (int i = 0; i < n; ++i) {
        labels[static_cast<std::size_t>(i)] = i % 2;
        X(i, 0) = 0.9 * (i % 2) + normal(rng);
        X(i, 1) = normal(rng);
    }
    const FusionMatrix data = make_matrix(X, labels, two_features());
    const FusionClassifier clf = train_fusion(data, 4, 19, 1e-3).classifier;

    const std::string bytes = save_model(clf);
    const FusionClassifier loaded = load_fusion_classifier(bytes);
    CHECK(loaded.features == clf.features);
    CHECK(loaded.loss == clf.loss);
    CHECK(loaded.decision_scores(X) == clf.decision_scores(X));
    CHECK(save_model(loaded) == bytes);

    try {
        load_fusion_classifier("{not json");
        FAIL("expected CorruptPayload");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CorruptPayload);
    }

    nlohmann::json doc = nlohmann::json::parse(bytes);
    doc["version"] = 9;
    try {
        load_fusion_classifier(doc.dump());
        FAIL("expected VersionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::VersionMismatch);
    }
}

}  // TEST_SUITE
