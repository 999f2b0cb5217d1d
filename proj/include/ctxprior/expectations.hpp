#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctxprior/dataset.hpp"
#include "ctxprior/numerics.hpp"
#include "ctxprior/types.hpp"

namespace ctxprior {

// ---------------------------------------------------------------------------
// Model specification
// ---------------------------------------------------------------------------

enum class PcaScope { PerFold, Global };

struct ModelSpec {
    ChannelSet channels;       // nonempty subset of {T, N, C}
    int pca_dims = 20;         // per channel, capped at min(n_train - 2, channel dim)
    std::string category;
    RatingDimension dimension = RatingDimension::Likelihood;
    double ridge = 0.0;
    bool standardize = true;   // z-score projected features with training stats

    std::string name() const { return channels.to_string(); }
};

// Per-feature affine scaler (identity when standardization is off).
struct FeatureScaler {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;  // constant columns keep sd = 1

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
        return (x - mean).cwiseQuotient(sd);
    }
    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
    static FeatureScaler fit(const Eigen::MatrixXd& X, bool standardize);
};

struct ChannelPca {
    ChannelId channel;
    PcaBasis basis;
    int k_effective = 0;  // after capping
};

struct ExpectationModel {
    ModelSpec spec;
    std::vector<ChannelPca> channel_bases;  // canonical T, N, C order
    FeatureScaler scaler;
    RegressionModel regression;
    std::vector<std::string> training_scene_ids;

    int input_dim() const { return regression.input_dim; }
    Eigen::VectorXd project_scene(const SceneRecord& scene) const;  // scaled feature row
    double predict(const SceneRecord& scene) const;
    Eigen::VectorXd predict(const std::vector<const SceneRecord*>& scenes) const;
};

// ---------------------------------------------------------------------------
// Training views
// ---------------------------------------------------------------------------

// Scenes with a defined target value for (category, dimension); geometry
// dimensions require n_boxes >= 1. Order follows the input scene order.
struct TrainingView {
    std::vector<const SceneRecord*> scenes;
    Eigen::VectorXd y;
    std::vector<std::string> scene_ids;

    int size() const { return static_cast<int>(scenes.size()); }
};

TrainingView training_view(const std::vector<SceneRecord>& scenes,
                           const std::vector<RatingAggregate>& aggregates,
                           const std::string& category, RatingDimension dimension);

ExpectationModel fit_expectation_model(const ModelSpec& spec,
                                       const std::vector<SceneRecord>& scenes,
                                       const std::vector<RatingAggregate>& aggregates);

// Core fit on an explicit scene/target pairing (used by the CV drivers).
ExpectationModel fit_on_view(const ModelSpec& spec, const std::vector<const SceneRecord*>& scenes,
                             const Eigen::VectorXd& y);

// ---------------------------------------------------------------------------
// Evaluation protocols
// ---------------------------------------------------------------------------

struct CvResult {
    ModelSpec spec;
    double r_cv = 0.0;   // correlation of concatenated out-of-fold predictions
    int fold_count = 0;
    int n_scenes = 0;
};

CvResult kfold_eval(const ModelSpec& spec, const std::vector<SceneRecord>& scenes,
                    const std::vector<RatingAggregate>& aggregates, int k, std::uint64_t seed);

struct SplitProtocol {
    int n_splits = 1000;
    double train_frac = 0.8;
    std::uint64_t seed = 1;
    PcaScope pca_scope = PcaScope::PerFold;
    int jobs = 1;
};

struct SplitDistribution {
    ModelSpec spec;
    std::vector<double> correlations;  // one per split
    double mean = 0.0;
    double sd = 0.0;
    // Pairing identity: two distributions are comparable iff these match.
    std::uint64_t seed = 0;
    double train_frac = 0.8;
    int n_scenes = 0;
};

SplitDistribution repeated_split_eval(const ModelSpec& spec,
                                      const std::vector<SceneRecord>& scenes,
                                      const std::vector<RatingAggregate>& aggregates,
                                      const SplitProtocol& protocol);

// Shares per-split channel PCA across specs; split i of every spec uses the
// identical (seed, i)-derived subsample, so outputs are pairwise comparable.
std::vector<SplitDistribution> repeated_split_eval_multi(
    const std::vector<ModelSpec>& specs, const TrainingView& view, const SplitProtocol& protocol);

struct ModelComparison {
    std::string spec_a;
    std::string spec_b;
    double p_frac = 0.0;  // fraction of paired splits where a strictly beat b
    int n_splits = 0;
};

ModelComparison compare_models(const SplitDistribution& a, const SplitDistribution& b);

// ---------------------------------------------------------------------------
// Channel-subset evaluation table
// ---------------------------------------------------------------------------

struct EvalConfig {
    std::vector<ChannelSet> specs;  // empty = all seven subsets
    int pca_dims = 20;
    PcaScope pca_scope = PcaScope::PerFold;
    double ridge = 0.0;
    bool standardize = true;
    int n_splits = 1000;
    double train_frac = 0.8;
    int ceiling_resamples = 1000;
    std::uint64_t seed = 1;
    int jobs = 1;
};

struct SpecRow {
    std::string spec;      // channel letters
    double mean = 0.0;
    double sd = 0.0;
    double p_frac = 0.0;   // paired fraction of splits beating the best spec
    std::string flag;      // "*" p_frac < 0.001, "#" p_frac > 0.05, "" otherwise
    bool best = false;
    std::map<std::string, int> k_effective;  // channel letter -> effective PCA dims
};

struct SpecTable {
    std::string category;
    RatingDimension dimension = RatingDimension::Likelihood;
    int n_scenes = 0;
    std::optional<ReliabilityEstimate> ceiling;  // absent with < 2 subjects
    std::vector<SpecRow> rows;                   // table order: TNC, T, N, C, TN, TC, NC
    std::string best_spec;
    std::vector<SplitDistribution> distributions;  // aligned with rows
};

SpecTable evaluate_all_specs(const std::vector<SceneRecord>& scenes,
                             const std::vector<RatingAggregate>& aggregates,
                             const std::vector<RawRating>& ratings,
                             const FrameSize& frame, const SliderRange& slider,
                             const std::string& category, RatingDimension dimension,
                             const EvalConfig& config);

// ---------------------------------------------------------------------------
// Nontarget weight analysis
// ---------------------------------------------------------------------------

// Regression weights for one channel mapped back to that channel's raw feature
// space (undoes the z-scoring, then composes with the PCA basis).
// MissingChannel when the model does not use the channel.
Eigen::VectorXd feature_space_weights(const ExpectationModel& model, ChannelId channel);

// feature_space_weights for the Nontarget channel: per-label weights.
Eigen::VectorXd nontarget_label_weights(const ExpectationModel& model);

struct LabelWeight {
    std::string label;
    double weight = 0.0;
};

struct NontargetWeightReport {
    double r = 0.0;  // correlation of per-label weights between the two models
    std::vector<std::string> vocabulary;
    std::vector<double> weights_a;
    std::vector<double> weights_b;
    std::vector<LabelWeight> top_positive_a, top_negative_a;
    std::vector<LabelWeight> top_positive_b, top_negative_b;
};

NontargetWeightReport nontarget_weight_correlation(const ExpectationModel& model_a,
                                                   const ExpectationModel& model_b,
                                                   const std::vector<std::string>& vocabulary);

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

std::string save_model(const ExpectationModel& model);
ExpectationModel load_expectation_model(const std::string& bytes);

}  // namespace ctxprior
