#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctxprior/expectations.hpp"
#include "ctxprior/types.hpp"

namespace ctxprior {

// ---------------------------------------------------------------------------
// Feature sets
// ---------------------------------------------------------------------------

// One column of the fusion feature matrix: either the detector confidence or a
// model-predicted expectation (rating category x dimension). Ratings for any
// category may be attached to any detection target.
struct FusionFeature {
    bool is_score = false;
    std::string rating_category;
    RatingDimension dimension = RatingDimension::Likelihood;

    static FusionFeature score() { return FusionFeature{true, "", RatingDimension::Likelihood}; }
    static FusionFeature expectation(const std::string& category, RatingDimension dim) {
        return FusionFeature{false, category, dim};
    }
    std::string name() const;
    bool operator==(const FusionFeature& o) const {
        return is_score == o.is_score && rating_category == o.rating_category &&
               dimension == o.dimension;
    }
};

struct FusionFeatureSet {
    std::vector<FusionFeature> items;  // detector score always first

    void validate() const;
    int size() const { return static_cast<int>(items.size()); }
    static FusionFeatureSet baseline();
    // All five dimensions for each listed rating category, after the score.
    static FusionFeatureSet all_ratings(const std::vector<std::string>& categories);
    std::string name() const;
    bool operator==(const FusionFeatureSet& o) const { return items == o.items; }
};

using ExpectationModelKey = std::pair<std::string, RatingDimension>;  // (category, dimension)

struct FusionMatrix {
    Eigen::MatrixXd X;                  // scenes x features, columns in feature-set order
    std::vector<std::uint8_t> labels;   // ground truth, 1 = target present
    std::vector<std::string> scene_ids;
    FusionFeatureSet features;

    int n() const { return static_cast<int>(X.rows()); }
};

// Expectation columns come from model predictions only, never from human
// annotations on the evaluation scenes.
FusionMatrix build_fusion_features(
    const std::vector<DetectorScore>& scores, const std::string& detector_id,
    const std::string& target_category,
    const std::map<ExpectationModelKey, const ExpectationModel*>& models,
    const std::vector<const SceneRecord*>& scenes, const FusionFeatureSet& feature_set);

// ---------------------------------------------------------------------------
// Linear classifier
// ---------------------------------------------------------------------------

enum class FusionLoss { Logistic, Margin };

struct FusionClassifier {
    FusionFeatureSet features;
    FeatureScaler scaler;
    Eigen::VectorXd weights;  // over scaled features
    double bias = 0.0;
    double threshold = 0.0;   // on the linear score axis
    FusionLoss loss = FusionLoss::Logistic;

    double decision_score(const Eigen::VectorXd& x) const {
        return weights.dot(scaler.apply(x)) + bias;
    }
    Eigen::VectorXd decision_scores(const Eigen::MatrixXd& X) const;
    // Ties at the threshold resolve to "absent".
    bool decide(const Eigen::VectorXd& x) const { return decision_score(x) > threshold; }
};

struct FusionTrainResult {
    FusionClassifier classifier;       // refit on all data
    double cv_accuracy = 0.0;          // mean over held-out folds
    std::vector<double> fold_accuracies;
};

FusionTrainResult train_fusion(const FusionMatrix& data, int k_folds, std::uint64_t seed,
                               double l2, FusionLoss loss = FusionLoss::Logistic);

// Seeded subsample of the majority class down to the minority count, preserving
// scene order within each class.
FusionMatrix balance_classes(const FusionMatrix& data, std::uint64_t seed);

// ---------------------------------------------------------------------------
// ROC
// ---------------------------------------------------------------------------

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // from (0,0) to (1,1), thresholds decreasing
    double auc = 0.0;              // trapezoidal; ties contribute half
};

RocCurve roc(const Eigen::VectorXd& scores, const std::vector<std::uint8_t>& labels);

// ---------------------------------------------------------------------------
// Error breakdown
// ---------------------------------------------------------------------------

struct ErrorBreakdown {
    int misses = 0;              // target present, declared absent
    int false_alarms = 0;        // target absent, declared present
    int hits = 0;
    int correct_rejections = 0;
    std::vector<std::uint8_t> decisions;  // per scene, 1 = declared present

    int positives() const { return hits + misses; }
    int negatives() const { return false_alarms + correct_rejections; }
    double accuracy() const;
};

ErrorBreakdown error_breakdown(const FusionClassifier& classifier, const FusionMatrix& data);

// ---------------------------------------------------------------------------
// Association and transfer analysis
// ---------------------------------------------------------------------------

struct AssociationIndex {
    std::string object_label;
    std::string anchor_label;
    double value = 0.0;  // |p(object | anchor) - p(object)|
};

AssociationIndex association_index(const PresenceMatrix& presence, const std::string& object_label,
                                   const std::string& anchor_label);

// Mean of the per-anchor association values.
double average_association_index(const PresenceMatrix& presence, const std::string& object_label,
                                 const std::vector<std::string>& anchors);

struct TransferReport {
    int n_categories = 0;
    std::optional<double> r_association;  // undefined on constant input
    std::optional<double> p_association;  // permutation p-value
    std::optional<double> r_baseline;
    std::optional<double> p_baseline;
    int n_permutations = 0;
};

TransferReport transfer_analysis(const std::vector<double>& benefits,
                                 const std::vector<double>& association,
                                 const std::vector<double>& baseline_accuracy,
                                 int n_permutations, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

std::string save_model(const FusionClassifier& classifier);
FusionClassifier load_fusion_classifier(const std::string& bytes);

}  // namespace ctxprior
