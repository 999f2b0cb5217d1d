#include "ctxprior/expectations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "ctxprior/errors.hpp"
#include "ctxprior/parallel.hpp"
#include "ctxprior/rng.hpp"

namespace ctxprior {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Feature scaling
// ---------------------------------------------------------------------------

Eigen::MatrixXd FeatureScaler::apply(const Eigen::MatrixXd& X) const {
    require(X.cols() == mean.size(), ErrorCode::DimensionMismatch,
            "FeatureScaler: input has " + std::to_string(X.cols()) + " columns, scaler expects " +
                std::to_string(mean.size()));
    return (X.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
}

FeatureScaler FeatureScaler::fit(const Eigen::MatrixXd& X, bool standardize) {
    FeatureScaler s;
    const int p = static_cast<int>(X.cols());
    if (!standardize) {
        s.mean = Eigen::VectorXd::Zero(p);
        s.sd = Eigen::VectorXd::Ones(p);
        return s;
    }
    s.mean = X.colwise().mean();
    s.sd.resize(p);
    const int n = static_cast<int>(X.rows());
    for (int j = 0; j < p; ++j) {
        const double var = (X.col(j).array() - s.mean[j]).square().sum() / std::max(n - 1, 1);
        s.sd[j] = var > 1e-24 ? std::sqrt(var) : 1.0;  // constant columns pass through
    }
    return s;
}

// ---------------------------------------------------------------------------
// Model fitting
// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd channel_matrix(const std::vector<const SceneRecord*>& scenes, ChannelId channel) {
    require(!scenes.empty(), ErrorCode::InsufficientScenes, "no scenes to assemble features from");
    const SceneRecord* first = scenes.front();
    require(first->has_channel(channel), ErrorCode::MissingChannel,
            "scene '" + first->scene_id + "' lacks the " + channel_name(channel) + " channel");
    const int d = static_cast<int>(first->features(channel).size());
    Eigen::MatrixXd X(static_cast<int>(scenes.size()), d);
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const SceneRecord* scene = scenes[i];
        require(scene->has_channel(channel), ErrorCode::MissingChannel,
                "scene '" + scene->scene_id + "' lacks the " + channel_name(channel) + " channel");
        const Eigen::VectorXd& v = scene->features(channel);
        require(static_cast<int>(v.size()) == d, ErrorCode::DimensionMismatch,
                "scene '" + scene->scene_id + "' has " + std::to_string(v.size()) + " " +
                    channel_name(channel) + " features, expected " + std::to_string(d));
        X.row(static_cast<int>(i)) = v.transpose();
    }
    return X;
}

int capped_k(int requested, int n_train, int channel_dim) {
    return std::min(requested, std::min(n_train - 2, channel_dim));
}

}  // namespace

Eigen::VectorXd ExpectationModel::project_scene(const SceneRecord& scene) const {
    Eigen::VectorXd row(regression.input_dim);
    int offset = 0;
    for (const ChannelPca& cp : channel_bases) {
        row.segment(offset, cp.k_effective) = pca_project_row(cp.basis, scene.features(cp.channel));
        offset += cp.k_effective;
    }
    require(offset == regression.input_dim, ErrorCode::InvariantViolation,
            "projected dimension does not match regression input");
    return scaler.apply(row);
}

double ExpectationModel::predict(const SceneRecord& scene) const {
    return regression.predict(project_scene(scene));
}

Eigen::VectorXd ExpectationModel::predict(const std::vector<const SceneRecord*>& scenes) const {
    Eigen::VectorXd out(static_cast<int>(scenes.size()));
    for (std::size_t i = 0; i < scenes.size(); ++i) out[static_cast<int>(i)] = predict(*scenes[i]);
    return out;
}

TrainingView training_view(const std::vector<SceneRecord>& scenes,
                           const std::vector<RatingAggregate>& aggregates,
                           const std::string& category, RatingDimension dimension) {
    std::map<std::pair<std::string, std::string>, const RatingAggregate*> by_key;
    for (const RatingAggregate& agg : aggregates) by_key[{agg.scene_id, agg.category}] = &agg;

    TrainingView view;
    std::vector<double> targets;
    for (const SceneRecord& scene : scenes) {
        auto it = by_key.find({scene.scene_id, category});
        if (it == by_key.end()) continue;
        const std::optional<double> y = it->second->value(dimension);
        if (!y) continue;  // geometry dimension with no boxes
        view.scenes.push_back(&scene);
        view.scene_ids.push_back(scene.scene_id);
        targets.push_back(*y);
    }
    view.y = Eigen::Map<Eigen::VectorXd>(targets.data(), static_cast<int>(targets.size()));
    return view;
}

ExpectationModel fit_on_view(const ModelSpec& spec, const std::vector<const SceneRecord*>& scenes,
                             const Eigen::VectorXd& y) {
    require(!spec.channels.empty(), ErrorCode::InvalidConfig, "model spec has no channels");
    require(spec.pca_dims >= 1, ErrorCode::InvalidConfig, "pca_dims must be >= 1");
    const int n = static_cast<int>(scenes.size());
    require(n == static_cast<int>(y.size()), ErrorCode::DimensionMismatch,
            "fit_on_view: scene count and target length differ");
    require(n >= 4, ErrorCode::InsufficientScenes,
            "fit_on_view: need at least 4 training scenes, got " + std::to_string(n));

    ExpectationModel model;
    model.spec = spec;

    int total_k = 0;
    std::vector<Eigen::MatrixXd> projections;
    for (ChannelId channel : spec.channels.channels()) {
        Eigen::MatrixXd X = channel_matrix(scenes, channel);
        const int k = capped_k(spec.pca_dims, n, static_cast<int>(X.cols()));
        require(k >= 1, ErrorCode::InsufficientScenes,
                "fit_on_view: too few scenes for any principal component");
        ChannelPca cp;
        cp.channel = channel;
        cp.basis = pca_fit(X, k);
        cp.k_effective = k;
        projections.push_back(pca_project(cp.basis, X));
        model.channel_bases.push_back(std::move(cp));
        total_k += k;
    }
    require(n >= total_k + 2, ErrorCode::InsufficientScenes,
            "fit_on_view: " + std::to_string(n) + " scenes cannot support " +
                std::to_string(total_k) + " projected dimensions");

    Eigen::MatrixXd Z(n, total_k);
    int offset = 0;
    for (const Eigen::MatrixXd& P : projections) {
        Z.middleCols(offset, static_cast<int>(P.cols())) = P;
        offset += static_cast<int>(P.cols());
    }
    model.scaler = FeatureScaler::fit(Z, spec.standardize);
    model.regression = ols_fit(model.scaler.apply(Z), y, spec.ridge);
    return model;
}

ExpectationModel fit_expectation_model(const ModelSpec& spec,
                                       const std::vector<SceneRecord>& scenes,
                                       const std::vector<RatingAggregate>& aggregates) {
    TrainingView view = training_view(scenes, aggregates, spec.category, spec.dimension);
    require(view.size() > 0, ErrorCode::InsufficientScenes,
            "no scenes with a defined '" + std::string(dimension_name(spec.dimension)) +
                "' target for category '" + spec.category + "'");
    ExpectationModel model = fit_on_view(spec, view.scenes, view.y);
    model.training_scene_ids = view.scene_ids;
    return model;
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

CvResult kfold_eval(const ModelSpec& spec, const std::vector<SceneRecord>& scenes,
                    const std::vector<RatingAggregate>& aggregates, int k, std::uint64_t seed) {
    TrainingView view = training_view(scenes, aggregates, spec.category, spec.dimension);
    const int n = view.size();
    require(k >= 2, ErrorCode::InvalidConfig, "kfold_eval: k must be >= 2");
    require(n >= k, ErrorCode::InsufficientScenes,
            "kfold_eval: " + std::to_string(n) + " scenes cannot fill " + std::to_string(k) +
                " folds");

    auto rng = make_engine(seed);
    std::vector<int> fold = kfold_assignment(n, k, rng);

    Eigen::VectorXd predictions(n);
    for (int f = 0; f < k; ++f) {
        std::vector<const SceneRecord*> train_scenes;
        std::vector<int> train_rows, test_rows;
        for (int i = 0; i < n; ++i) {
            if (fold[static_cast<std::size_t>(i)] == f) {
                test_rows.push_back(i);
            } else {
                train_scenes.push_back(view.scenes[static_cast<std::size_t>(i)]);
                train_rows.push_back(i);
            }
        }
        require(!test_rows.empty() && !train_rows.empty(), ErrorCode::DegenerateFold,
                "kfold_eval: empty fold");
        Eigen::VectorXd y_train(static_cast<int>(train_rows.size()));
        for (std::size_t i = 0; i < train_rows.size(); ++i)
            y_train[static_cast<int>(i)] = view.y[train_rows[i]];
        ExpectationModel model = fit_on_view(spec, train_scenes, y_train);
        for (int row : test_rows)
            predictions[row] = model.predict(*view.scenes[static_cast<std::size_t>(row)]);
    }

    CvResult result;
    result.spec = spec;
    result.fold_count = k;
    result.n_scenes = n;
    result.r_cv = pearson(predictions, view.y);
    return result;
}

// ---------------------------------------------------------------------------
// Repeated 80-20 splits
// ---------------------------------------------------------------------------

namespace {

void finish_distribution(SplitDistribution& dist) {
    const auto& v = dist.correlations;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    dist.mean = mean;
    dist.sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace

std::vector<SplitDistribution> repeated_split_eval_multi(const std::vector<ModelSpec>& specs,
                                                         const TrainingView& view,
                                                         const SplitProtocol& protocol) {
    require(!specs.empty(), ErrorCode::InvalidConfig, "repeated_split_eval_multi: no specs");
    require(protocol.n_splits >= 1, ErrorCode::InvalidConfig, "n_splits must be >= 1");
    require(protocol.train_frac > 0.0 && protocol.train_frac < 1.0, ErrorCode::InvalidConfig,
            "train_frac must lie in (0, 1)");
    const int n = view.size();
    const int n_train = static_cast<int>(std::llround(protocol.train_frac * n));
    require(n_train >= 4 && n - n_train >= 3, ErrorCode::InsufficientScenes,
            "repeated_split_eval: split of " + std::to_string(n) + " scenes at train_frac " +
                std::to_string(protocol.train_frac) + " leaves too few scenes per side");

    ChannelSet union_set;
    for (const ModelSpec& spec : specs) {
        require(!spec.channels.empty(), ErrorCode::InvalidConfig, "model spec has no channels");
        for (ChannelId c : spec.channels.channels()) union_set.insert(c);
    }
    const std::vector<ChannelId> union_channels = union_set.channels();

    // Per-channel data over the whole view, assembled once.
    std::map<ChannelId, Eigen::MatrixXd> data;
    std::map<ChannelId, int> k_max;
    for (ChannelId c : union_channels) {
        data[c] = channel_matrix(view.scenes, c);
        int want = 0;
        for (const ModelSpec& spec : specs)
            if (spec.channels.contains(c)) want = std::max(want, spec.pca_dims);
        const int k = capped_k(want, n_train, static_cast<int>(data[c].cols()));
        require(k >= 1, ErrorCode::InsufficientScenes,
                "repeated_split_eval: too few training scenes for any principal component");
        k_max[c] = k;
    }

    // Global-scope bases are shared across splits (reproduction variant).
    std::map<ChannelId, PcaBasis> global_basis;
    if (protocol.pca_scope == PcaScope::Global)
        for (ChannelId c : union_channels) global_basis[c] = pca_fit(data[c], k_max[c]);

    std::vector<std::vector<double>> corr(specs.size(),
                                          std::vector<double>(static_cast<std::size_t>(protocol.n_splits)));

    parallel_for(protocol.n_splits, protocol.jobs, [&](int i) {
        auto rng = make_engine(derive_seed(protocol.seed, static_cast<std::uint64_t>(i)));
        const std::vector<int> perm = random_permutation(n, rng);

        Eigen::VectorXd y_train(n_train), y_test(n - n_train);
        for (int j = 0; j < n_train; ++j) y_train[j] = view.y[perm[static_cast<std::size_t>(j)]];
        for (int j = n_train; j < n; ++j)
            y_test[j - n_train] = view.y[perm[static_cast<std::size_t>(j)]];

        std::map<ChannelId, Eigen::MatrixXd> p_train, p_test;
        for (ChannelId c : union_channels) {
            const Eigen::MatrixXd& X = data[c];
            Eigen::MatrixXd X_train(n_train, X.cols()), X_test(n - n_train, X.cols());
            for (int j = 0; j < n_train; ++j)
                X_train.row(j) = X.row(perm[static_cast<std::size_t>(j)]);
            for (int j = n_train; j < n; ++j)
                X_test.row(j - n_train) = X.row(perm[static_cast<std::size_t>(j)]);
            const PcaBasis basis = protocol.pca_scope == PcaScope::Global
                                       ? global_basis.at(c)
                                       : pca_fit(X_train, k_max.at(c));
            p_train[c] = pca_project(basis, X_train);
            p_test[c] = pca_project(basis, X_test);
        }

        for (std::size_t s = 0; s < specs.size(); ++s) {
            const ModelSpec& spec = specs[s];
            int total_k = 0;
            for (ChannelId c : spec.channels.channels())
                total_k += capped_k(spec.pca_dims, n_train, static_cast<int>(data.at(c).cols()));
            require(n_train >= total_k + 2, ErrorCode::InsufficientScenes,
                    "repeated_split_eval: training half cannot support " + std::to_string(total_k) +
                        " projected dimensions");
            Eigen::MatrixXd Z_train(n_train, total_k), Z_test(n - n_train, total_k);
            int offset = 0;
            for (ChannelId c : spec.channels.channels()) {
                const int k = capped_k(spec.pca_dims, n_train, static_cast<int>(data.at(c).cols()));
                Z_train.middleCols(offset, k) = p_train.at(c).leftCols(k);
                Z_test.middleCols(offset, k) = p_test.at(c).leftCols(k);
                offset += k;
            }
            const FeatureScaler scaler = FeatureScaler::fit(Z_train, spec.standardize);
            const RegressionModel model = ols_fit(scaler.apply(Z_train), y_train, spec.ridge);
            corr[s][static_cast<std::size_t>(i)] =
                pearson(model.predict(scaler.apply(Z_test)), y_test);
        }
    });

    std::vector<SplitDistribution> out(specs.size());
    for (std::size_t s = 0; s < specs.size(); ++s) {
        out[s].spec = specs[s];
        out[s].correlations = std::move(corr[s]);
        out[s].seed = protocol.seed;
        out[s].train_frac = protocol.train_frac;
        out[s].n_scenes = n;
        finish_distribution(out[s]);
    }
    return out;
}

SplitDistribution repeated_split_eval(const ModelSpec& spec,
                                      const std::vector<SceneRecord>& scenes,
                                      const std::vector<RatingAggregate>& aggregates,
                                      const SplitProtocol& protocol) {
    TrainingView view = training_view(scenes, aggregates, spec.category, spec.dimension);
    return repeated_split_eval_multi({spec}, view, protocol).front();
}

ModelComparison compare_models(const SplitDistribution& a, const SplitDistribution& b) {
    require(a.correlations.size() == b.correlations.size() && a.seed == b.seed &&
                a.train_frac == b.train_frac && a.n_scenes == b.n_scenes,
            ErrorCode::UnpairedDistributions,
            "compare_models: distributions come from different split streams");
    require(!a.correlations.empty(), ErrorCode::InvalidShape, "compare_models: empty distributions");
    int wins = 0;
    for (std::size_t i = 0; i < a.correlations.size(); ++i)
        if (a.correlations[i] > b.correlations[i]) ++wins;
    ModelComparison cmp;
    cmp.spec_a = a.spec.name();
    cmp.spec_b = b.spec.name();
    cmp.n_splits = static_cast<int>(a.correlations.size());
    cmp.p_frac = static_cast<double>(wins) / static_cast<double>(cmp.n_splits);
    return cmp;
}

// ---------------------------------------------------------------------------
// Full channel-subset table
// ---------------------------------------------------------------------------

namespace {

// Table layout: the full model first, then singles, then pairs.
const std::array<const char*, 7> kTableOrder = {"TNC", "T", "N", "C", "TN", "TC", "NC"};

}  // namespace

SpecTable evaluate_all_specs(const std::vector<SceneRecord>& scenes,
                             const std::vector<RatingAggregate>& aggregates,
                             const std::vector<RawRating>& ratings,
                             const FrameSize& frame, const SliderRange& slider,
                             const std::string& category, RatingDimension dimension,
                             const EvalConfig& config) {
    std::vector<ChannelSet> requested = config.specs;
    if (requested.empty())
        requested.assign(ChannelSet::all_nonempty().begin(), ChannelSet::all_nonempty().end());

    std::vector<ModelSpec> specs;
    for (const char* letters : kTableOrder) {
        const ChannelSet set = ChannelSet::parse(letters);
        if (std::find(requested.begin(), requested.end(), set) == requested.end()) continue;
        ModelSpec spec;
        spec.channels = set;
        spec.pca_dims = config.pca_dims;
        spec.category = category;
        spec.dimension = dimension;
        spec.ridge = config.ridge;
        spec.standardize = config.standardize;
        specs.push_back(spec);
    }
    require(!specs.empty(), ErrorCode::InvalidConfig, "evaluate_all_specs: no specs requested");

    TrainingView view = training_view(scenes, aggregates, category, dimension);
    require(view.size() > 0, ErrorCode::InsufficientScenes,
            "no scenes with a defined '" + std::string(dimension_name(dimension)) +
                "' target for category '" + category + "'");

    SplitProtocol protocol;
    protocol.n_splits = config.n_splits;
    protocol.train_frac = config.train_frac;
    protocol.seed = config.seed;
    protocol.pca_scope = config.pca_scope;
    protocol.jobs = config.jobs;

    SpecTable table;
    table.category = category;
    table.dimension = dimension;
    table.n_scenes = view.size();
    table.distributions = repeated_split_eval_multi(specs, view, protocol);

    // Noise ceiling from the per-subject ratings on the same scenes.
    try {
        SubjectRatings subj =
            subject_matrix(ratings, view.scene_ids, category, dimension, frame, slider);
        table.ceiling = split_half_ceiling(subj, config.ceiling_resamples,
                                           derive_seed(config.seed, 0x6365696cULL));
    } catch (const Error& e) {
        if (e.code() != ErrorCode::TooFewSubjects && e.code() != ErrorCode::EmptyRatingSet) throw;
        table.ceiling.reset();
    }

    std::size_t best = 0;
    for (std::size_t s = 1; s < table.distributions.size(); ++s)
        if (table.distributions[s].mean > table.distributions[best].mean) best = s;
    table.best_spec = table.distributions[best].spec.name();

    const int n_train = static_cast<int>(std::llround(config.train_frac * view.size()));
    for (std::size_t s = 0; s < table.distributions.size(); ++s) {
        const SplitDistribution& dist = table.distributions[s];
        SpecRow row;
        row.spec = dist.spec.name();
        row.mean = dist.mean;
        row.sd = dist.sd;
        row.best = (s == best);
        if (s == best) {
            row.p_frac = 0.0;
        } else {
            row.p_frac = compare_models(dist, table.distributions[best]).p_frac;
            if (row.p_frac < 0.001)
                row.flag = "*";
            else if (row.p_frac > 0.05)
                row.flag = "#";
        }
        for (ChannelId c : dist.spec.channels.channels()) {
            const int d = static_cast<int>(view.scenes.front()->features(c).size());
            row.k_effective[std::string(1, channel_letter(c))] =
                capped_k(config.pca_dims, n_train, d);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

// ---------------------------------------------------------------------------
// Nontarget weight analysis
// ---------------------------------------------------------------------------

Eigen::VectorXd feature_space_weights(const ExpectationModel& model, ChannelId channel) {
    int offset = 0;
    for (const ChannelPca& cp : model.channel_bases) {
        if (cp.channel == channel) {
            const Eigen::VectorXd w_scaled =
                model.regression.weights.segment(offset, cp.k_effective);
            const Eigen::VectorXd w_raw =
                w_scaled.cwiseQuotient(model.scaler.sd.segment(offset, cp.k_effective));
            return cp.basis.components.transpose() * w_raw;
        }
        offset += cp.k_effective;
    }
    fail(ErrorCode::MissingChannel,
         std::string("model '") + model.spec.name() + "' does not use the " +
             channel_name(channel) + " channel");
}

Eigen::VectorXd nontarget_label_weights(const ExpectationModel& model) {
    return feature_space_weights(model, ChannelId::Nontarget);
}

namespace {

std::vector<LabelWeight> top_labels(const Eigen::VectorXd& weights,
                                    const std::vector<std::string>& vocabulary, bool positive,
                                    int count) {
    std::vector<int> order(static_cast<std::size_t>(weights.size()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (weights[a] != weights[b]) return positive ? weights[a] > weights[b] : weights[a] < weights[b];
        return vocabulary[static_cast<std::size_t>(a)] < vocabulary[static_cast<std::size_t>(b)];
    });
    std::vector<LabelWeight> out;
    for (int idx : order) {
        if (static_cast<int>(out.size()) == count) break;
        if (positive && weights[idx] <= 0.0) break;
        if (!positive && weights[idx] >= 0.0) break;
        out.push_back({vocabulary[static_cast<std::size_t>(idx)], weights[idx]});
    }
    return out;
}

}  // namespace

NontargetWeightReport nontarget_weight_correlation(const ExpectationModel& model_a,
                                                   const ExpectationModel& model_b,
                                                   const std::vector<std::string>& vocabulary) {
    NontargetWeightReport report;
    const Eigen::VectorXd wa = nontarget_label_weights(model_a);
    const Eigen::VectorXd wb = nontarget_label_weights(model_b);
    require(wa.size() == wb.size(), ErrorCode::DimensionMismatch,
            "nontarget weight vectors have different lengths");
    require(static_cast<int>(vocabulary.size()) == wa.size(), ErrorCode::DimensionMismatch,
            "vocabulary size " + std::to_string(vocabulary.size()) +
                " does not match weight length " + std::to_string(wa.size()));
    report.r = pearson(wa, wb);
    report.vocabulary = vocabulary;
    report.weights_a.assign(wa.data(), wa.data() + wa.size());
    report.weights_b.assign(wb.data(), wb.data() + wb.size());
    report.top_positive_a = top_labels(wa, vocabulary, true, 5);
    report.top_negative_a = top_labels(wa, vocabulary, false, 5);
    report.top_positive_b = top_labels(wb, vocabulary, true, 5);
    report.top_negative_b = top_labels(wb, vocabulary, false, 5);
    return report;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

constexpr int kExpectationModelVersion = 1;

json vector_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(row);
    }
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<int>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
    return v;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const int rows = static_cast<int>(j.size());
    const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        require(static_cast<int>(j[static_cast<std::size_t>(i)].size()) == cols,
                ErrorCode::CorruptPayload, "ragged matrix in model payload");
        for (int c = 0; c < cols; ++c)
            m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

}  // namespace

std::string save_model(const ExpectationModel& model) {
    json payload;
    payload["spec"] = {{"channels", model.spec.channels.to_string()},
                       {"pca_dims", model.spec.pca_dims},
                       {"category", model.spec.category},
                       {"dimension", dimension_name(model.spec.dimension)},
                       {"ridge", model.spec.ridge},
                       {"standardize", model.spec.standardize}};
    json bases = json::array();
    for (const ChannelPca& cp : model.channel_bases) {
        bases.push_back({{"channel", channel_name(cp.channel)},
                         {"k_effective", cp.k_effective},
                         {"mean", vector_json(cp.basis.mean)},
                         {"components", matrix_json(cp.basis.components)},
                         {"explained_variance", vector_json(cp.basis.explained_variance)}});
    }
    payload["channel_bases"] = std::move(bases);
    payload["scaler"] = {{"mean", vector_json(model.scaler.mean)},
                         {"sd", vector_json(model.scaler.sd)}};
    payload["regression"] = {{"weights", vector_json(model.regression.weights)},
                             {"intercept", model.regression.intercept},
                             {"input_dim", model.regression.input_dim}};
    payload["training_scene_ids"] = model.training_scene_ids;

    ModelEnvelope env;
    env.kind = "expectation-model";
    env.version = kExpectationModelVersion;
    env.payload = payload.dump();
    return serialize_envelope(env);
}

ExpectationModel load_expectation_model(const std::string& bytes) {
    ModelEnvelope env = parse_envelope(bytes, "expectation-model");
    require(env.version == kExpectationModelVersion, ErrorCode::VersionMismatch,
            "expectation model version " + std::to_string(env.version) +
                " is not supported (expected " + std::to_string(kExpectationModelVersion) + ")");
    ExpectationModel model;
    try {
        json payload = json::parse(env.payload);
        const json& spec = payload.at("spec");
        model.spec.channels = ChannelSet::parse(spec.at("channels").get<std::string>());
        model.spec.pca_dims = spec.at("pca_dims").get<int>();
        model.spec.category = spec.at("category").get<std::string>();
        model.spec.dimension = parse_dimension(spec.at("dimension").get<std::string>());
        model.spec.ridge = spec.at("ridge").get<double>();
        model.spec.standardize = spec.at("standardize").get<bool>();
        for (const json& b : payload.at("channel_bases")) {
            ChannelPca cp;
            cp.channel = parse_channel(b.at("channel").get<std::string>());
            cp.k_effective = b.at("k_effective").get<int>();
            cp.basis.mean = vector_from_json(b.at("mean"));
            cp.basis.components = matrix_from_json(b.at("components"));
            cp.basis.explained_variance = vector_from_json(b.at("explained_variance"));
            model.channel_bases.push_back(std::move(cp));
        }
        model.scaler.mean = vector_from_json(payload.at("scaler").at("mean"));
        model.scaler.sd = vector_from_json(payload.at("scaler").at("sd"));
        model.regression.weights = vector_from_json(payload.at("regression").at("weights"));
        model.regression.intercept = payload.at("regression").at("intercept").get<double>();
        model.regression.input_dim = payload.at("regression").at("input_dim").get<int>();
        model.training_scene_ids =
            payload.at("training_scene_ids").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        fail(ErrorCode::CorruptPayload, std::string("malformed expectation model payload: ") + e.what());
    } catch (const Error&) {
        throw;
    }
    int total_k = 0;
    for (const ChannelPca& cp : model.channel_bases) {
        require(cp.k_effective == cp.basis.n_components(), ErrorCode::CorruptPayload,
                "channel basis shape does not match k_effective");
        total_k += cp.k_effective;
    }
    require(total_k == model.regression.input_dim &&
                model.regression.input_dim == static_cast<int>(model.regression.weights.size()) &&
                model.scaler.mean.size() == model.regression.weights.size() &&
                model.scaler.sd.size() == model.regression.weights.size(),
            ErrorCode::CorruptPayload, "inconsistent dimensions in expectation model payload");
    return model;
}

}  // namespace ctxprior
