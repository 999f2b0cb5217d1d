#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ctxprior/dataset.hpp"
#include "ctxprior/types.hpp"

namespace ctxprior {

// ---------------------------------------------------------------------------
// Synthetic datasets with planted, fully known structure
// ---------------------------------------------------------------------------

// Features per channel follow a factor model X = Z diag(g) L^T + eta with
// orthonormal loadings L, decaying factor scales g and small residual noise,
// so a rank-`factor_rank` signal is recoverable from the leading principal
// components. The latent rating for each (category, dimension) is a planted
// unit-variance linear function of the generating channels' factors, plus
// scene-level noise of sd `noise_sd`; per-subject noise is calibrated so the
// expected corrected split-half reliability of the subject mean equals
// `reliability`.
struct SynthConfig {
    int n_scenes = 650;
    int n_subjects = 11;
    std::map<ChannelId, int> dims = {{ChannelId::Target, 62},
                                     {ChannelId::Nontarget, 36},
                                     {ChannelId::Coarse, 532}};
    std::map<ChannelId, int> factor_rank = {{ChannelId::Target, 10},
                                            {ChannelId::Nontarget, 10},
                                            {ChannelId::Coarse, 10}};
    ChannelSet generating = ChannelSet::of({ChannelId::Nontarget, ChannelId::Coarse});
    double noise_sd = 0.5;      // scene-level latent noise
    double reliability = 0.9;   // target corrected split-half reliability
    std::vector<std::string> categories = {"car", "person"};

    double factor_scale = 3.0;
    double factor_decay = 0.85;
    double residual_sd = 0.05;
    double likelihood_slope = 10.0;  // latent units -> slider units around midpoint

    // Detection side. When n_detection_scenes > 0, the likelihood signal for
    // every category is concentrated on the first coarse factor, which carries
    // the context evidence `context_signal * truth + N(0,1)` on detection
    // scenes; expectation models trained on the rated scenes then transfer.
    int n_detection_scenes = 0;
    double detector_signal = 1.908;
    double detector_noise = 1.0;
    double context_signal = 0.0;
    std::vector<std::string> detector_ids = {"cnn_a"};

    SliderRange slider;
    FrameSize frame;
    std::uint64_t seed = 1;

    void validate() const;  // InvalidConfig on violation
};

// Closed-form values implied by a config (all correlations are population
// values; measured quantities approach them as n grows).
struct SynthAnalytics {
    double signal_sd = 1.0;            // planted latent signal
    double latent_sd = 0.0;            // signal + scene noise
    double subject_noise_sd = 0.0;     // per-subject rating noise
    double expected_model_r = 0.0;     // perfect model vs observed subject mean
    double expected_ceiling = 0.0;     // corrected split-half of the subject mean
    double bayes_accuracy = 0.0;       // detector + context, equal-covariance optimum
    double baseline_accuracy = 0.0;    // detector alone
};

SynthAnalytics synth_analytics(const SynthConfig& config);

struct PlantedExpectation {
    std::string category;
    RatingDimension dimension = RatingDimension::Likelihood;
    std::vector<double> signal;                       // per rated scene
    std::map<ChannelId, Eigen::VectorXd> feature_weights;  // feature-space planted weights
    std::vector<std::uint8_t> clamped;                // any subject value clamped for scene
};

struct SynthExpectationData {
    std::vector<SceneRecord> scenes;
    std::vector<RawRating> ratings;
    std::vector<RatingAggregate> aggregates;
    std::vector<PlantedExpectation> planted;
    SynthAnalytics analytics;

    const PlantedExpectation& planted_for(const std::string& category,
                                          RatingDimension dimension) const;
};

SynthExpectationData generate_expectation_dataset(const SynthConfig& config);

struct SynthDetectionData {
    std::vector<SceneRecord> scenes;   // ground truth set for every category
    std::vector<DetectorScore> scores;
    std::vector<double> context_evidence;  // first coarse factor per scene
    SynthAnalytics analytics;
};

SynthDetectionData generate_detection_dataset(const SynthConfig& config);

// The object vocabulary used for synthetic nontarget presence matrices.
const std::vector<std::string>& default_nontarget_vocabulary();

// Emits the complete dataset (rated + detection scenes) in the toolkit's CSV
// and JSON formats, plus a planted-truth sidecar, into `out_dir`.
// Returns the schema pointing at the written files.
SchemaConfig write_synth_dataset(const SynthConfig& config, const std::string& out_dir);

}  // namespace ctxprior
