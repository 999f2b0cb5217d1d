#include "ctxprior/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "ctxprior/errors.hpp"
#include "ctxprior/rng.hpp"

namespace ctxprior {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Feature sets
// ---------------------------------------------------------------------------

std::string FusionFeature::name() const {
    if (is_score) return "score";
    return rating_category + ":" + dimension_name(dimension);
}

void FusionFeatureSet::validate() const {
    require(!items.empty(), ErrorCode::InvalidConfig, "fusion feature set is empty");
    require(items.front().is_score, ErrorCode::InvalidConfig,
            "fusion feature set must start with the detector score");
    for (std::size_t i = 1; i < items.size(); ++i)
        require(!items[i].is_score, ErrorCode::InvalidConfig,
                "fusion feature set contains more than one detector score column");
    std::set<std::pair<std::string, int>> seen;
    for (const FusionFeature& f : items) {
        if (f.is_score) continue;
        require(seen.insert({f.rating_category, static_cast<int>(f.dimension)}).second,
                ErrorCode::DuplicateEntry, "duplicate fusion feature " + f.name());
    }
}

FusionFeatureSet FusionFeatureSet::baseline() {
    FusionFeatureSet set;
    set.items.push_back(FusionFeature::score());
    return set;
}

FusionFeatureSet FusionFeatureSet::all_ratings(const std::vector<std::string>& categories) {
    FusionFeatureSet set = baseline();
    for (const std::string& category : categories)
        for (RatingDimension dim : kAllDimensions)
            set.items.push_back(FusionFeature::expectation(category, dim));
    return set;
}

std::string FusionFeatureSet::name() const {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += "+";
        out += items[i].name();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Feature matrix assembly
// ---------------------------------------------------------------------------

FusionMatrix build_fusion_features(
    const std::vector<DetectorScore>& scores, const std::string& detector_id,
    const std::string& target_category,
    const std::map<ExpectationModelKey, const ExpectationModel*>& models,
    const std::vector<const SceneRecord*>& scenes, const FusionFeatureSet& feature_set) {
    feature_set.validate();
    require(!scenes.empty(), ErrorCode::InsufficientScenes, "no evaluation scenes");

    std::map<std::string, double> score_by_scene;
    for (const DetectorScore& s : scores)
        if (s.detector_id == detector_id && s.category == target_category)
            score_by_scene[s.scene_id] = s.confidence;

    FusionMatrix out;
    out.features = feature_set;
    const int n = static_cast<int>(scenes.size());
    const int m = feature_set.size();
    out.X.resize(n, m);
    out.labels.resize(static_cast<std::size_t>(n));
    out.scene_ids.reserve(static_cast<std::size_t>(n));

    for (int i = 0; i < n; ++i) {
        const SceneRecord& scene = *scenes[static_cast<std::size_t>(i)];
        out.scene_ids.push_back(scene.scene_id);
        const std::optional<bool> truth = scene.truth(target_category);
        require(truth.has_value(), ErrorCode::MissingGroundTruth,
                "scene '" + scene.scene_id + "' has no ground truth for category '" +
                    target_category + "'");
        out.labels[static_cast<std::size_t>(i)] = *truth ? 1 : 0;
        auto it = score_by_scene.find(scene.scene_id);
        require(it != score_by_scene.end(), ErrorCode::MissingScore,
                "scene '" + scene.scene_id + "' has no '" + detector_id + "' score for category '" +
                    target_category + "'");
        out.X(i, 0) = it->second;
    }

    for (int c = 1; c < m; ++c) {
        const FusionFeature& feature = feature_set.items[static_cast<std::size_t>(c)];
        auto it = models.find({feature.rating_category, feature.dimension});
        require(it != models.end() && it->second != nullptr, ErrorCode::InvalidConfig,
                "no expectation model supplied for fusion feature " + feature.name());
        const ExpectationModel& model = *it->second;
        for (int i = 0; i < n; ++i)
            out.X(i, c) = model.predict(*scenes[static_cast<std::size_t>(i)]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Linear classifier training
// ---------------------------------------------------------------------------

Eigen::VectorXd FusionClassifier::decision_scores(const Eigen::MatrixXd& X) const {
    return (scaler.apply(X) * weights).array() + bias;
}

namespace {

// L2-regularized logistic regression by Newton iteration (bias unpenalized).
void fit_logistic(const Eigen::MatrixXd& X, const std::vector<std::uint8_t>& labels, double l2,
                  Eigen::VectorXd& weights, double& bias) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);  // [weights; bias]
    Eigen::MatrixXd A(n, p + 1);
    A.leftCols(p) = X;
    A.col(p).setOnes();

    for (int iter = 0; iter < 100; ++iter) {
        Eigen::VectorXd eta = A * beta;
        Eigen::VectorXd mu = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
        Eigen::VectorXd w = (mu.array() * (1.0 - mu.array())).matrix();
        Eigen::VectorXd grad = A.transpose() * (mu - y);
        grad.head(p) += l2 * beta.head(p);
        Eigen::MatrixXd H = A.transpose() * w.asDiagonal() * A;
        H.diagonal().head(p).array() += l2;
        H.diagonal().array() += 1e-10;  // keeps the step defined under saturation
        Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
        require(ldlt.info() == Eigen::Success, ErrorCode::NonConvergence,
                "logistic fit: Hessian factorization failed");
        Eigen::VectorXd step = ldlt.solve(grad);
        require(step.allFinite(), ErrorCode::NonConvergence, "logistic fit: non-finite step");
        beta -= step;
        require(beta.allFinite(), ErrorCode::NonConvergence, "logistic fit: diverged");
        if (step.cwiseAbs().maxCoeff() < 1e-10) break;
    }
    weights = beta.head(p);
    bias = beta[p];
}

// L2-regularized squared-hinge loss by active-set Newton iteration.
void fit_margin(const Eigen::MatrixXd& X, const std::vector<std::uint8_t>& labels, double l2,
                Eigen::VectorXd& weights, double& bias) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = labels[static_cast<std::size_t>(i)] ? 1.0 : -1.0;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
    Eigen::MatrixXd A(n, p + 1);
    A.leftCols(p) = X;
    A.col(p).setOnes();

    for (int iter = 0; iter < 50; ++iter) {
        Eigen::VectorXd margin = y.array() * (A * beta).array();
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(p + 1);
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(p + 1, p + 1);
        for (int i = 0; i < n; ++i) {
            if (margin[i] >= 1.0) continue;
            grad += 2.0 * (margin[i] - 1.0) * y[i] * A.row(i).transpose();
            H += 2.0 * A.row(i).transpose() * A.row(i);
        }
        grad.head(p) += l2 * beta.head(p);
        H.diagonal().head(p).array() += l2;
        H.diagonal().array() += 1e-10;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
        require(ldlt.info() == Eigen::Success, ErrorCode::NonConvergence,
                "margin fit: Hessian factorization failed");
        Eigen::VectorXd step = ldlt.solve(grad);
        require(step.allFinite() && beta.allFinite(), ErrorCode::NonConvergence,
                "margin fit: diverged");
        beta -= step;
        if (step.cwiseAbs().maxCoeff() < 1e-10) break;
    }
    weights = beta.head(p);
    bias = beta[p];
}

FusionClassifier fit_classifier(const Eigen::MatrixXd& X, const std::vector<std::uint8_t>& labels,
                                const FusionFeatureSet& features, double l2, FusionLoss loss) {
    FusionClassifier clf;
    clf.features = features;
    clf.loss = loss;
    clf.scaler = FeatureScaler::fit(X, true);
    const Eigen::MatrixXd Z = clf.scaler.apply(X);
    if (loss == FusionLoss::Logistic)
        fit_logistic(Z, labels, l2, clf.weights, clf.bias);
    else
        fit_margin(Z, labels, l2, clf.weights, clf.bias);
    clf.threshold = 0.0;  // posterior 0.5 for logistic; sign boundary for margin
    require(clf.weights.allFinite() && std::isfinite(clf.bias), ErrorCode::NonConvergence,
            "fusion classifier fit produced non-finite parameters");
    return clf;
}

// Stratified fold labels: each class is partitioned separately so fold class
// ratios stay near the global ratio.
std::vector<int> stratified_folds(const std::vector<std::uint8_t>& labels, int k,
                                  std::uint64_t seed) {
    const int n = static_cast<int>(labels.size());
    std::vector<int> pos, neg;
    for (int i = 0; i < n; ++i) (labels[static_cast<std::size_t>(i)] ? pos : neg).push_back(i);
    std::vector<int> fold(static_cast<std::size_t>(n), 0);
    int cls = 0;
    for (const std::vector<int>* group : {&pos, &neg}) {
        auto rng = make_engine(derive_seed(seed, static_cast<std::uint64_t>(cls++)));
        const int g = static_cast<int>(group->size());
        std::vector<int> assign;
        if (g >= k) {
            assign = kfold_assignment(g, k, rng);
        } else {
            // Too few members of this class to fill every fold; scatter what we
            // have and let the per-fold class check report the degeneracy.
            std::uniform_int_distribution<int> pick(0, k - 1);
            assign.resize(static_cast<std::size_t>(g));
            for (int j = 0; j < g; ++j) assign[static_cast<std::size_t>(j)] = pick(rng);
        }
        for (std::size_t j = 0; j < group->size(); ++j)
            fold[static_cast<std::size_t>((*group)[j])] = assign[j];
    }
    return fold;
}

}  // namespace

FusionTrainResult train_fusion(const FusionMatrix& data, int k_folds, std::uint64_t seed,
                               double l2, FusionLoss loss) {
    const int n = data.n();
    require(k_folds >= 2, ErrorCode::InvalidConfig, "train_fusion: k_folds must be >= 2");
    require(n >= k_folds, ErrorCode::InsufficientScenes,
            "train_fusion: " + std::to_string(n) + " scenes cannot fill " +
                std::to_string(k_folds) + " folds");
    require(l2 >= 0.0, ErrorCode::InvalidConfig, "train_fusion: l2 must be >= 0");
    int n_pos = 0;
    for (std::uint8_t label : data.labels) n_pos += label;
    require(n_pos > 0 && n_pos < n, ErrorCode::SingleClassInput,
            "train_fusion: both classes must be present");

    const std::vector<int> fold = stratified_folds(data.labels, k_folds, seed);

    FusionTrainResult result;
    for (int f = 0; f < k_folds; ++f) {
        std::vector<int> train_rows, test_rows;
        for (int i = 0; i < n; ++i)
            (fold[static_cast<std::size_t>(i)] == f ? test_rows : train_rows).push_back(i);
        require(!test_rows.empty() && !train_rows.empty(), ErrorCode::DegenerateFold,
                "train_fusion: empty fold " + std::to_string(f));

        Eigen::MatrixXd X_train(static_cast<int>(train_rows.size()), data.X.cols());
        std::vector<std::uint8_t> y_train(train_rows.size());
        bool has_pos = false, has_neg = false;
        for (std::size_t j = 0; j < train_rows.size(); ++j) {
            X_train.row(static_cast<int>(j)) = data.X.row(train_rows[j]);
            y_train[j] = data.labels[static_cast<std::size_t>(train_rows[j])];
            (y_train[j] ? has_pos : has_neg) = true;
        }
        require(has_pos && has_neg, ErrorCode::DegenerateFold,
                "train_fusion: training fold " + std::to_string(f) + " is single-class");

        const FusionClassifier clf = fit_classifier(X_train, y_train, data.features, l2, loss);
        int correct = 0;
        for (int row : test_rows) {
            const bool decision = clf.decide(data.X.row(row).transpose());
            if (decision == (data.labels[static_cast<std::size_t>(row)] != 0)) ++correct;
        }
        result.fold_accuracies.push_back(static_cast<double>(correct) /
                                         static_cast<double>(test_rows.size()));
    }
    result.cv_accuracy =
        std::accumulate(result.fold_accuracies.begin(), result.fold_accuracies.end(), 0.0) /
        static_cast<double>(result.fold_accuracies.size());
    result.classifier = fit_classifier(data.X, data.labels, data.features, l2, loss);
    return result;
}

FusionMatrix balance_classes(const FusionMatrix& data, std::uint64_t seed) {
    std::vector<int> pos, neg;
    for (int i = 0; i < data.n(); ++i)
        (data.labels[static_cast<std::size_t>(i)] ? pos : neg).push_back(i);
    require(!pos.empty() && !neg.empty(), ErrorCode::SingleClassInput,
            "balance_classes: both classes must be present");

    std::vector<int>& majority = pos.size() > neg.size() ? pos : neg;
    const std::size_t target = std::min(pos.size(), neg.size());
    if (majority.size() > target) {
        auto rng = make_engine(seed);
        const std::vector<int> perm = random_permutation(static_cast<int>(majority.size()), rng);
        std::vector<int> kept;
        kept.reserve(target);
        for (std::size_t j = 0; j < target; ++j)
            kept.push_back(majority[static_cast<std::size_t>(perm[j])]);
        std::sort(kept.begin(), kept.end());
        majority = std::move(kept);
    }

    std::vector<int> rows;
    rows.reserve(2 * target);
    rows.insert(rows.end(), pos.begin(), pos.end());
    rows.insert(rows.end(), neg.begin(), neg.end());
    std::sort(rows.begin(), rows.end());

    FusionMatrix out;
    out.features = data.features;
    out.X.resize(static_cast<int>(rows.size()), data.X.cols());
    out.labels.reserve(rows.size());
    out.scene_ids.reserve(rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
        out.X.row(static_cast<int>(j)) = data.X.row(rows[j]);
        out.labels.push_back(data.labels[static_cast<std::size_t>(rows[j])]);
        out.scene_ids.push_back(data.scene_ids[static_cast<std::size_t>(rows[j])]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// ROC
// ---------------------------------------------------------------------------

RocCurve roc(const Eigen::VectorXd& scores, const std::vector<std::uint8_t>& labels) {
    const int n = static_cast<int>(scores.size());
    require(n == static_cast<int>(labels.size()), ErrorCode::DimensionMismatch,
            "roc: score and label lengths differ");
    require(scores.allFinite(), ErrorCode::NonFiniteValue, "roc: non-finite scores");
    int n_pos = 0;
    for (std::uint8_t label : labels) n_pos += label;
    const int n_neg = n - n_pos;
    require(n_pos > 0 && n_neg > 0, ErrorCode::SingleClassInput,
            "roc: need at least one positive and one negative");

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    int tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double value = scores[order[i]];
        while (i < order.size() && scores[order[i]] == value) {
            if (labels[static_cast<std::size_t>(order[i])])
                ++tp;
            else
                ++fp;
            ++i;
        }
        const double threshold = i < order.size()
                                     ? (value + scores[order[i]]) / 2.0
                                     : -std::numeric_limits<double>::infinity();
        curve.points.push_back({threshold, static_cast<double>(fp) / n_neg,
                                static_cast<double>(tp) / n_pos});
    }

    double auc = 0.0;
    for (std::size_t j = 1; j < curve.points.size(); ++j) {
        const RocPoint& a = curve.points[j - 1];
        const RocPoint& b = curve.points[j];
        auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    curve.auc = auc;
    return curve;
}

// ---------------------------------------------------------------------------
// Error breakdown
// ---------------------------------------------------------------------------

double ErrorBreakdown::accuracy() const {
    const int total = positives() + negatives();
    return total > 0 ? static_cast<double>(hits + correct_rejections) / total : 0.0;
}

ErrorBreakdown error_breakdown(const FusionClassifier& classifier, const FusionMatrix& data) {
    require(classifier.features == data.features, ErrorCode::DimensionMismatch,
            "error_breakdown: classifier and data use different feature sets");
    ErrorBreakdown out;
    const Eigen::VectorXd scores = classifier.decision_scores(data.X);
    for (int i = 0; i < data.n(); ++i) {
        const bool declared = scores[i] > classifier.threshold;
        const bool truth = data.labels[static_cast<std::size_t>(i)] != 0;
        out.decisions.push_back(declared ? 1 : 0);
        if (truth && declared) ++out.hits;
        if (truth && !declared) ++out.misses;
        if (!truth && declared) ++out.false_alarms;
        if (!truth && !declared) ++out.correct_rejections;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Association and transfer
// ---------------------------------------------------------------------------

AssociationIndex association_index(const PresenceMatrix& presence, const std::string& object_label,
                                   const std::string& anchor_label) {
    const int obj = presence.label_index(object_label);
    const int anchor = presence.label_index(anchor_label);
    require(obj >= 0, ErrorCode::InvalidConfig,
            "association_index: unknown object label '" + object_label + "'");
    require(anchor >= 0, ErrorCode::InvalidConfig,
            "association_index: unknown anchor label '" + anchor_label + "'");
    const std::size_t n = presence.rows.size();
    require(n > 0, ErrorCode::InsufficientScenes, "association_index: empty presence matrix");

    int n_anchor = 0, n_obj = 0, n_both = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool has_anchor = presence.present(i, anchor);
        const bool has_obj = presence.present(i, obj);
        n_anchor += has_anchor;
        n_obj += has_obj;
        n_both += has_anchor && has_obj;
    }
    require(n_anchor > 0, ErrorCode::EmptyAnchor,
            "association_index: anchor '" + anchor_label + "' is present in no scene");

    AssociationIndex out;
    out.object_label = object_label;
    out.anchor_label = anchor_label;
    out.value = std::abs(static_cast<double>(n_both) / n_anchor -
                         static_cast<double>(n_obj) / static_cast<double>(n));
    return out;
}

double average_association_index(const PresenceMatrix& presence, const std::string& object_label,
                                 const std::vector<std::string>& anchors) {
    require(!anchors.empty(), ErrorCode::InvalidConfig, "average_association_index: no anchors");
    double sum = 0.0;
    for (const std::string& anchor : anchors)
        sum += association_index(presence, object_label, anchor).value;
    return sum / static_cast<double>(anchors.size());
}

namespace {

// Two-sided permutation p-value with the add-one convention.
double permutation_p(const std::vector<double>& x, const std::vector<double>& y, double r_obs,
                     int n_permutations, std::uint64_t seed) {
    const int n = static_cast<int>(x.size());
    Eigen::Map<const Eigen::VectorXd> vy(y.data(), n);
    int extreme = 0;
    for (int i = 0; i < n_permutations; ++i) {
        auto rng = make_engine(derive_seed(seed, static_cast<std::uint64_t>(i)));
        const std::vector<int> perm = random_permutation(n, rng);
        Eigen::VectorXd xp(n);
        for (int j = 0; j < n; ++j) xp[j] = x[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
        double r = 0.0;
        try {
            r = pearson(xp, vy);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ConstantInput) throw;
            continue;
        }
        if (std::abs(r) >= std::abs(r_obs) - 1e-15) ++extreme;
    }
    return (extreme + 1.0) / (n_permutations + 1.0);
}

}  // namespace

TransferReport transfer_analysis(const std::vector<double>& benefits,
                                 const std::vector<double>& association,
                                 const std::vector<double>& baseline_accuracy,
                                 int n_permutations, std::uint64_t seed) {
    const int n = static_cast<int>(benefits.size());
    require(n >= 3, ErrorCode::InvalidShape,
            "transfer_analysis: need at least 3 categories, got " + std::to_string(n));
    require(static_cast<int>(association.size()) == n &&
                static_cast<int>(baseline_accuracy.size()) == n,
            ErrorCode::DimensionMismatch, "transfer_analysis: input lengths differ");
    require(n_permutations >= 1, ErrorCode::InvalidConfig,
            "transfer_analysis: n_permutations must be >= 1");

    TransferReport report;
    report.n_categories = n;
    report.n_permutations = n_permutations;

    Eigen::Map<const Eigen::VectorXd> vb(benefits.data(), n);
    Eigen::Map<const Eigen::VectorXd> va(association.data(), n);
    Eigen::Map<const Eigen::VectorXd> vc(baseline_accuracy.data(), n);

    try {
        report.r_association = pearson(vb, va);
        report.p_association = permutation_p(benefits, association, *report.r_association,
                                             n_permutations, derive_seed(seed, 0));
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ConstantInput) throw;
    }
    try {
        report.r_baseline = pearson(vb, vc);
        report.p_baseline = permutation_p(benefits, baseline_accuracy, *report.r_baseline,
                                          n_permutations, derive_seed(seed, 1));
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ConstantInput) throw;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

constexpr int kFusionClassifierVersion = 1;

json vector_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<int>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
    return v;
}

}  // namespace

std::string save_model(const FusionClassifier& classifier) {
    json payload;
    json items = json::array();
    for (const FusionFeature& f : classifier.features.items) {
        items.push_back({{"is_score", f.is_score},
                         {"category", f.rating_category},
                         {"dimension", dimension_name(f.dimension)}});
    }
    payload["features"] = std::move(items);
    payload["scaler"] = {{"mean", vector_json(classifier.scaler.mean)},
                         {"sd", vector_json(classifier.scaler.sd)}};
    payload["weights"] = vector_json(classifier.weights);
    payload["bias"] = classifier.bias;
    payload["threshold"] = classifier.threshold;
    payload["loss"] = classifier.loss == FusionLoss::Logistic ? "logistic" : "margin";

    ModelEnvelope env;
    env.kind = "fusion-classifier";
    env.version = kFusionClassifierVersion;
    env.payload = payload.dump();
    return serialize_envelope(env);
}

FusionClassifier load_fusion_classifier(const std::string& bytes) {
    ModelEnvelope env = parse_envelope(bytes, "fusion-classifier");
    require(env.version == kFusionClassifierVersion, ErrorCode::VersionMismatch,
            "fusion classifier version " + std::to_string(env.version) +
                " is not supported (expected " + std::to_string(kFusionClassifierVersion) + ")");
    FusionClassifier clf;
    try {
        json payload = json::parse(env.payload);
        for (const json& f : payload.at("features")) {
            FusionFeature feature;
            feature.is_score = f.at("is_score").get<bool>();
            feature.rating_category = f.at("category").get<std::string>();
            feature.dimension = parse_dimension(f.at("dimension").get<std::string>());
            clf.features.items.push_back(std::move(feature));
        }
        clf.scaler.mean = vector_from_json(payload.at("scaler").at("mean"));
        clf.scaler.sd = vector_from_json(payload.at("scaler").at("sd"));
        clf.weights = vector_from_json(payload.at("weights"));
        clf.bias = payload.at("bias").get<double>();
        clf.threshold = payload.at("threshold").get<double>();
        const std::string loss = payload.at("loss").get<std::string>();
        require(loss == "logistic" || loss == "margin", ErrorCode::CorruptPayload,
                "unknown fusion loss '" + loss + "'");
        clf.loss = loss == "logistic" ? FusionLoss::Logistic : FusionLoss::Margin;
    } catch (const json::exception& e) {
        fail(ErrorCode::CorruptPayload, std::string("malformed fusion classifier payload: ") + e.what());
    }
    clf.features.validate();
    require(clf.weights.size() == clf.features.size() &&
                clf.scaler.mean.size() == clf.weights.size() &&
                clf.scaler.sd.size() == clf.weights.size(),
            ErrorCode::CorruptPayload, "inconsistent dimensions in fusion classifier payload");
    return clf;
}

}  // namespace ctxprior
