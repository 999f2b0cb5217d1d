#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ctxprior/dataset.hpp"
#include "ctxprior/expectations.hpp"
#include "ctxprior/fusion.hpp"
#include "ctxprior/synth.hpp"
#include "ctxprior/types.hpp"

namespace ctxprior {

// Key-value config file: one `key = value` per line, `#` comments, lists
// comma-separated. Unknown keys are config errors.
struct KeyValueFile {
    std::map<std::string, std::string> values;
    static KeyValueFile parse(const std::string& text);
    static KeyValueFile load(const std::string& path);
};

struct RunConfig {
    // data
    std::map<ChannelId, std::string> feature_files;
    std::string ratings_file;
    std::string scores_file;
    std::string ground_truth_file;
    std::string presence_file;
    std::string scene_meta_file;
    SliderRange slider;
    FrameSize frame;

    // model selection
    std::vector<std::string> categories = {"car", "person"};
    std::vector<RatingDimension> dimensions = {RatingDimension::Likelihood, RatingDimension::XPos,
                                               RatingDimension::YPos, RatingDimension::Scale,
                                               RatingDimension::Aspect};
    std::vector<ChannelSet> specs;  // empty = all seven
    int pca_dims = 20;
    PcaScope pca_scope = PcaScope::PerFold;
    double ridge = 0.0;
    bool standardize = true;

    // protocols
    int n_splits = 1000;
    double train_frac = 0.8;
    int k_folds = 5;
    int ceiling_resamples = 1000;
    std::string weights_spec = "NC";  // spec used for the nontarget weight report

    // fusion
    std::vector<std::string> detectors;             // empty = every id in the scores file
    std::vector<std::string> fusion_feature_sets =  // tokens, see parse_feature_set_token
        {"baseline", "lklhd", "ylocn", "scale", "lklhd+ylocn+scale", "all"};
    std::string fusion_spec = "C";  // expectation model spec used for fusion features
    double fusion_l2 = 1e-3;
    FusionLoss fusion_loss = FusionLoss::Logistic;
    std::vector<std::string> transfer_categories;  // extra categories for transfer analysis
    int transfer_permutations = 10000;

    // synth
    SynthConfig synth;

    // run
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    std::string models_dir;  // defaults to out_dir
    int jobs = 1;

    SchemaConfig schema() const;
    EvalConfig eval_config() const;
    // Deterministic flat key=value view, embedded in every report.
    std::map<std::string, std::string> resolved() const;
};

RunConfig parse_run_config(const KeyValueFile& kv);
RunConfig load_run_config(const std::string& path);

// Token grammar for fusion feature sets, relative to the detection target:
//   baseline | lklhd | xlocn | ylocn | scale | aspect | a+b+c | all
// `all` expands to every dimension of every configured rating category.
FusionFeatureSet parse_feature_set_token(const std::string& token, const std::string& target_category,
                                         const std::vector<std::string>& rating_categories);

}  // namespace ctxprior
