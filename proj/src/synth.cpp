#include "ctxprior/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "ctxprior/csv.hpp"
#include "ctxprior/errors.hpp"
#include "ctxprior/rng.hpp"

namespace ctxprior {

using nlohmann::json;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Stream tags for independent seeded draws. Values are arbitrary but fixed.
enum : std::uint64_t {
    kStreamLoadings = 0x10,
    kStreamRatedFactors = 0x20,
    kStreamRatedResidual = 0x30,
    kStreamBeta = 0x40,
    kStreamStructNoise = 0x80,
    kStreamSubjectNoise = 0xC0,
    kStreamDetFactors = 0x100,
    kStreamDetResidual = 0x110,
    kStreamTruth = 0x120,
    kStreamDetectorNoise = 0x140,
    kStreamContext = 0x160,
};

int channel_index(ChannelId c) { return static_cast<int>(c); }

int dim_index(RatingDimension d) { return static_cast<int>(d); }

// Geometry latents map into box coordinates through these fixed affine maps;
// small amplitudes keep clamping rare so correlations survive the transform.
struct GeometryMap {
    double center = 0.0;
    double amplitude = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

GeometryMap geometry_map(RatingDimension dim) {
    switch (dim) {
        case RatingDimension::XPos: return {0.5, 0.08, 0.02, 0.98};
        case RatingDimension::YPos: return {0.5, 0.08, 0.02, 0.98};
        case RatingDimension::Scale: return {0.18, 0.04, 0.005, 0.95};
        case RatingDimension::Aspect: return {0.75, 0.12, 0.05, 5.0};
        case RatingDimension::Likelihood: break;
    }
    fail(ErrorCode::InvalidConfig, "likelihood has no geometry map");
}

Eigen::MatrixXd gaussian_matrix(int rows, int cols, std::uint64_t seed) {
    auto rng = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

// Orthonormal d x m loadings, shared by the rated and detection generators.
Eigen::MatrixXd channel_loadings(const SynthConfig& config, ChannelId c) {
    const int d = config.dims.at(c);
    const int m = config.factor_rank.at(c);
    Eigen::MatrixXd raw = gaussian_matrix(
        d, m, derive_seed(config.seed, kStreamLoadings + static_cast<std::uint64_t>(channel_index(c))));
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, m);
    // Fix signs so the loadings do not depend on QR internals.
    for (int j = 0; j < m; ++j) {
        int best = 0;
        for (int i = 1; i < d; ++i)
            if (std::abs(q(i, j)) > std::abs(q(best, j))) best = i;
        if (q(best, j) < 0) q.col(j) = -q.col(j);
    }
    return q;
}

Eigen::VectorXd factor_scales(const SynthConfig& config, ChannelId c) {
    const int m = config.factor_rank.at(c);
    Eigen::VectorXd g(m);
    for (int j = 0; j < m; ++j) g[j] = config.factor_scale * std::pow(config.factor_decay, j);
    return g;
}

// Features for one channel given its factor matrix.
Eigen::MatrixXd assemble_features(const SynthConfig& config, ChannelId c,
                                  const Eigen::MatrixXd& factors, std::uint64_t residual_tag) {
    const Eigen::MatrixXd loadings = channel_loadings(config, c);
    const Eigen::VectorXd g = factor_scales(config, c);
    Eigen::MatrixXd X = factors * g.asDiagonal() * loadings.transpose();
    if (config.residual_sd > 0.0) {
        X += config.residual_sd *
             gaussian_matrix(static_cast<int>(factors.rows()), config.dims.at(c),
                             derive_seed(config.seed,
                                         residual_tag + static_cast<std::uint64_t>(channel_index(c))));
    }
    return X;
}

// Planted factor-space weights for one (category, dimension). In detection
// mode every category's likelihood reads one dedicated coarse factor so the
// signal transfers to detection scenes; everything else gets a fresh random
// unit direction over the generating channels.
std::map<ChannelId, Eigen::VectorXd> planted_beta(const SynthConfig& config, int category_index,
                                                  RatingDimension dim) {
    std::map<ChannelId, Eigen::VectorXd> beta;
    if (config.n_detection_scenes > 0 && dim == RatingDimension::Likelihood) {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(config.factor_rank.at(ChannelId::Coarse));
        b[category_index] = 1.0;
        beta[ChannelId::Coarse] = b;
        return beta;
    }
    double norm_sq = 0.0;
    for (ChannelId c : config.generating.channels()) {
        const int m = config.factor_rank.at(c);
        Eigen::VectorXd b = gaussian_matrix(
            m, 1,
            derive_seed(config.seed, kStreamBeta + static_cast<std::uint64_t>(channel_index(c)),
                        static_cast<std::uint64_t>(category_index * 8 + dim_index(dim))));
        beta[c] = b;
        norm_sq += b.squaredNorm();
    }
    const double norm = std::sqrt(norm_sq);
    for (auto& [c, b] : beta) b /= norm;  // unit-variance planted signal
    return beta;
}

std::map<ChannelId, Eigen::VectorXd> feature_weights_for(const SynthConfig& config,
                                                         const std::map<ChannelId, Eigen::VectorXd>& beta) {
    std::map<ChannelId, Eigen::VectorXd> weights;
    for (const auto& [c, b] : beta) {
        const Eigen::MatrixXd loadings = channel_loadings(config, c);
        const Eigen::VectorXd g = factor_scales(config, c);
        weights[c] = loadings * b.cwiseQuotient(g);
    }
    return weights;
}

std::string rated_scene_id(int i) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "scene_%06d", i + 1);
    return buf;
}

std::string detection_scene_id(int i) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "det_%06d", i + 1);
    return buf;
}

}  // namespace

void SynthConfig::validate() const {
    require(n_scenes >= 1, ErrorCode::InvalidConfig, "synth: n_scenes must be >= 1");
    require(n_subjects >= 1, ErrorCode::InvalidConfig, "synth: n_subjects must be >= 1");
    require(!categories.empty(), ErrorCode::InvalidConfig, "synth: no categories");
    std::set<std::string> unique(categories.begin(), categories.end());
    require(unique.size() == categories.size(), ErrorCode::InvalidConfig,
            "synth: duplicate categories");
    for (ChannelId c : kAllChannels) {
        require(dims.count(c) && factor_rank.count(c), ErrorCode::InvalidConfig,
                std::string("synth: missing dims/factor_rank for channel ") + channel_name(c));
        require(dims.at(c) >= 1, ErrorCode::InvalidConfig,
                std::string("synth: dims must be >= 1 for channel ") + channel_name(c));
        require(factor_rank.at(c) >= 1 && factor_rank.at(c) <= dims.at(c), ErrorCode::InvalidConfig,
                std::string("synth: factor_rank must lie in [1, dims] for channel ") +
                    channel_name(c));
    }
    require(!generating.empty(), ErrorCode::InvalidConfig, "synth: generating subset is empty");
    require(noise_sd >= 0.0, ErrorCode::InvalidConfig, "synth: noise_sd must be >= 0");
    require(reliability > 0.0 && reliability <= 1.0, ErrorCode::InvalidConfig,
            "synth: reliability must lie in (0, 1]");
    require(factor_scale > 0.0 && factor_decay > 0.0 && factor_decay <= 1.0,
            ErrorCode::InvalidConfig, "synth: factor_scale must be > 0, factor_decay in (0, 1]");
    require(residual_sd >= 0.0, ErrorCode::InvalidConfig, "synth: residual_sd must be >= 0");
    require(likelihood_slope > 0.0, ErrorCode::InvalidConfig, "synth: likelihood_slope must be > 0");
    require(slider.max > slider.min, ErrorCode::InvalidConfig, "synth: slider range is empty");
    require(frame.width_px > 0 && frame.height_px > 0, ErrorCode::InvalidConfig,
            "synth: frame dimensions must be positive");
    require(n_detection_scenes >= 0, ErrorCode::InvalidConfig,
            "synth: n_detection_scenes must be >= 0");
    if (n_detection_scenes > 0) {
        require(detector_noise >= 0.0 && context_signal >= 0.0, ErrorCode::InvalidConfig,
                "synth: detector_noise and context_signal must be >= 0");
        require(!detector_ids.empty(), ErrorCode::InvalidConfig, "synth: no detector ids");
        require(factor_rank.at(ChannelId::Coarse) >= static_cast<int>(categories.size()),
                ErrorCode::InvalidConfig,
                "synth: coarse factor_rank must cover one factor per category in detection mode");
    }
}

SynthAnalytics synth_analytics(const SynthConfig& config) {
    config.validate();
    SynthAnalytics a;
    a.signal_sd = 1.0;
    const double latent_var = a.signal_sd * a.signal_sd + config.noise_sd * config.noise_sd;
    a.latent_sd = std::sqrt(latent_var);
    a.subject_noise_sd =
        config.reliability >= 1.0
            ? 0.0
            : std::sqrt(config.n_subjects * latent_var * (1.0 - config.reliability) /
                        config.reliability);
    const double mean_noise_var =
        a.subject_noise_sd * a.subject_noise_sd / config.n_subjects;
    a.expected_model_r = a.signal_sd / std::sqrt(latent_var + mean_noise_var);
    const int n1 = config.n_subjects / 2;
    const int n2 = config.n_subjects - n1;
    if (n1 >= 1) {
        const double v1 = latent_var + a.subject_noise_sd * a.subject_noise_sd / n1;
        const double v2 = latent_var + a.subject_noise_sd * a.subject_noise_sd / n2;
        const double r = latent_var / std::sqrt(v1 * v2);
        a.expected_ceiling = 2.0 * r / (1.0 + r);
    } else {
        a.expected_ceiling = std::numeric_limits<double>::quiet_NaN();
    }
    if (config.detector_noise > 0.0) {
        a.baseline_accuracy = normal_cdf(config.detector_signal / (2.0 * config.detector_noise));
        const double d_det = config.detector_signal / config.detector_noise;
        const double d_total = std::sqrt(d_det * d_det + config.context_signal * config.context_signal);
        a.bayes_accuracy = normal_cdf(d_total / 2.0);
    } else {
        a.baseline_accuracy = 1.0;
        a.bayes_accuracy = 1.0;
    }
    return a;
}

const PlantedExpectation& SynthExpectationData::planted_for(const std::string& category,
                                                            RatingDimension dimension) const {
    for (const PlantedExpectation& p : planted)
        if (p.category == category && p.dimension == dimension) return p;
    fail(ErrorCode::InvalidConfig,
         "no planted truth for category '" + category + "', dimension '" +
             dimension_name(dimension) + "'");
}

SynthExpectationData generate_expectation_dataset(const SynthConfig& config) {
    config.validate();
    const int n = config.n_scenes;
    const int n_subj = config.n_subjects;
    SynthExpectationData data;
    data.analytics = synth_analytics(config);

    // Scene factors and features per channel.
    std::map<ChannelId, Eigen::MatrixXd> factors;
    for (ChannelId c : kAllChannels) {
        factors[c] = gaussian_matrix(
            n, config.factor_rank.at(c),
            derive_seed(config.seed, kStreamRatedFactors + static_cast<std::uint64_t>(channel_index(c))));
    }
    std::map<ChannelId, Eigen::MatrixXd> features;
    for (ChannelId c : kAllChannels)
        features[c] = assemble_features(config, c, factors[c], kStreamRatedResidual);

    data.scenes.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        SceneRecord& scene = data.scenes[static_cast<std::size_t>(i)];
        scene.scene_id = rated_scene_id(i);
        scene.scene_category = "rated";
        for (ChannelId c : kAllChannels)
            scene.channel_features[c] = features[c].row(i).transpose();
    }

    const double slider_mid = (config.slider.min + config.slider.max) / 2.0;
    const double subj_sd = data.analytics.subject_noise_sd;

    // Per (category, dimension): planted signal, scene noise, subject noise.
    struct DimValues {
        std::vector<double> signal;                  // n
        Eigen::MatrixXd subject_values;              // n x n_subj, latent units
        std::vector<std::uint8_t> clamped;           // n
    };
    std::map<std::pair<int, int>, DimValues> values;

    for (std::size_t cat = 0; cat < config.categories.size(); ++cat) {
        for (RatingDimension dim : kAllDimensions) {
            const auto beta = planted_beta(config, static_cast<int>(cat), dim);
            DimValues dv;
            dv.signal.resize(static_cast<std::size_t>(n), 0.0);
            dv.clamped.assign(static_cast<std::size_t>(n), 0);
            for (const auto& [c, b] : beta) {
                const Eigen::VectorXd s = factors[c] * b;
                for (int i = 0; i < n; ++i) dv.signal[static_cast<std::size_t>(i)] += s[i];
            }
            const std::uint64_t pair_tag =
                static_cast<std::uint64_t>(cat * 8 + static_cast<std::size_t>(dim_index(dim)));
            Eigen::MatrixXd struct_noise =
                config.noise_sd *
                gaussian_matrix(n, 1, derive_seed(config.seed, kStreamStructNoise, pair_tag));
            dv.subject_values =
                subj_sd * gaussian_matrix(n, n_subj,
                                          derive_seed(config.seed, kStreamSubjectNoise, pair_tag));
            for (int i = 0; i < n; ++i) {
                const double latent = dv.signal[static_cast<std::size_t>(i)] + struct_noise(i, 0);
                dv.subject_values.row(i).array() += latent;
            }

            PlantedExpectation planted;
            planted.category = config.categories[cat];
            planted.dimension = dim;
            planted.signal = dv.signal;
            planted.feature_weights = feature_weights_for(config, beta);
            planted.clamped = dv.clamped;  // filled below, re-assigned afterwards
            data.planted.push_back(std::move(planted));
            values[{static_cast<int>(cat), dim_index(dim)}] = std::move(dv);
        }
    }

    // Subject ratings: likelihood slider plus a box encoding the geometry.
    for (std::size_t cat = 0; cat < config.categories.size(); ++cat) {
        DimValues& lik = values[{static_cast<int>(cat), dim_index(RatingDimension::Likelihood)}];
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n_subj; ++j) {
                RawRating rating;
                char subj[16];
                std::snprintf(subj, sizeof(subj), "subj_%02d", j + 1);
                rating.subject_id = subj;
                rating.scene_id = rated_scene_id(i);
                rating.category = config.categories[cat];

                double raw = slider_mid + config.likelihood_slope * lik.subject_values(i, j);
                if (raw < config.slider.min || raw > config.slider.max) {
                    raw = std::clamp(raw, config.slider.min, config.slider.max);
                    lik.clamped[static_cast<std::size_t>(i)] = 1;
                }
                rating.likelihood_raw = raw;

                if (raw > config.slider.min) {
                    double geo[4];
                    bool clamped_any = false;
                    const RatingDimension geo_dims[4] = {RatingDimension::XPos,
                                                         RatingDimension::YPos,
                                                         RatingDimension::Scale,
                                                         RatingDimension::Aspect};
                    for (int gix = 0; gix < 4; ++gix) {
                        DimValues& dv = values[{static_cast<int>(cat), dim_index(geo_dims[gix])}];
                        const GeometryMap map = geometry_map(geo_dims[gix]);
                        double v = map.center + map.amplitude * dv.subject_values(i, j);
                        if (v < map.lo || v > map.hi) {
                            v = std::clamp(v, map.lo, map.hi);
                            dv.clamped[static_cast<std::size_t>(i)] = 1;
                            clamped_any = true;
                        }
                        geo[gix] = v;
                    }
                    const double W = config.frame.width_px, H = config.frame.height_px;
                    double w = std::sqrt(geo[2] * W * H / geo[3]);
                    double h = geo[3] * w;
                    if (w > W || h > H) {
                        const double shrink = std::min(W / w, H / h);
                        w *= shrink;
                        h *= shrink;
                        clamped_any = true;
                    }
                    double x = geo[0] * W - w / 2.0;
                    double y = geo[1] * H - h / 2.0;
                    if (x < 0.0 || x + w > W || y < 0.0 || y + h > H) {
                        x = std::clamp(x, 0.0, W - w);
                        y = std::clamp(y, 0.0, H - h);
                        clamped_any = true;
                    }
                    if (clamped_any) {
                        for (RatingDimension gd : {RatingDimension::XPos, RatingDimension::YPos,
                                                   RatingDimension::Scale, RatingDimension::Aspect})
                            values[{static_cast<int>(cat), dim_index(gd)}]
                                .clamped[static_cast<std::size_t>(i)] = 1;
                    }
                    rating.box = BoxPx{x, y, w, h};
                }
                data.ratings.push_back(std::move(rating));
            }
        }
    }

    // Copy the final clamp flags into the planted records.
    for (PlantedExpectation& p : data.planted) {
        const auto cat_it =
            std::find(config.categories.begin(), config.categories.end(), p.category);
        const int cat = static_cast<int>(cat_it - config.categories.begin());
        p.clamped = values[{cat, dim_index(p.dimension)}].clamped;
    }

    data.aggregates = aggregate_ratings(data.ratings, config.frame, config.slider);
    return data;
}

SynthDetectionData generate_detection_dataset(const SynthConfig& config) {
    config.validate();
    require(config.n_detection_scenes >= 1, ErrorCode::InvalidConfig,
            "generate_detection_dataset: n_detection_scenes must be >= 1");
    const int n = config.n_detection_scenes;
    SynthDetectionData data;
    data.analytics = synth_analytics(config);

    // Balanced ground truth per category, independently shuffled.
    std::map<std::string, std::vector<std::uint8_t>> truth;
    for (std::size_t cat = 0; cat < config.categories.size(); ++cat) {
        std::vector<std::uint8_t> t(static_cast<std::size_t>(n), 0);
        for (int i = 0; i < n / 2; ++i) t[static_cast<std::size_t>(i)] = 1;
        auto rng = make_engine(derive_seed(config.seed, kStreamTruth, cat));
        const std::vector<int> perm = random_permutation(n, rng);
        std::vector<std::uint8_t> shuffled(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            shuffled[static_cast<std::size_t>(i)] = t[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        truth[config.categories[cat]] = std::move(shuffled);
    }

    // Factors; coarse factor k carries category k's context evidence.
    std::map<ChannelId, Eigen::MatrixXd> factors;
    for (ChannelId c : kAllChannels) {
        factors[c] = gaussian_matrix(
            n, config.factor_rank.at(c),
            derive_seed(config.seed, kStreamDetFactors + static_cast<std::uint64_t>(channel_index(c))));
    }
    for (std::size_t cat = 0; cat < config.categories.size(); ++cat) {
        const std::vector<std::uint8_t>& t = truth[config.categories[cat]];
        for (int i = 0; i < n; ++i)
            factors[ChannelId::Coarse](i, static_cast<int>(cat)) +=
                config.context_signal * (t[static_cast<std::size_t>(i)] ? 1.0 : 0.0);
    }
    data.context_evidence.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        data.context_evidence[static_cast<std::size_t>(i)] = factors[ChannelId::Coarse](i, 0);

    std::map<ChannelId, Eigen::MatrixXd> features;
    for (ChannelId c : kAllChannels)
        features[c] = assemble_features(config, c, factors[c], kStreamDetResidual);

    data.scenes.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        SceneRecord& scene = data.scenes[static_cast<std::size_t>(i)];
        scene.scene_id = detection_scene_id(i);
        scene.scene_category = "detection";
        for (ChannelId c : kAllChannels)
            scene.channel_features[c] = features[c].row(i).transpose();
        for (const std::string& category : config.categories)
            scene.ground_truth[category] =
                truth[category][static_cast<std::size_t>(i)] != 0;
    }

    for (std::size_t det = 0; det < config.detector_ids.size(); ++det) {
        for (std::size_t cat = 0; cat < config.categories.size(); ++cat) {
            auto rng = make_engine(
                derive_seed(config.seed, kStreamDetectorNoise + det, cat));
            std::normal_distribution<double> normal(0.0, 1.0);
            const std::vector<std::uint8_t>& t = truth[config.categories[cat]];
            for (int i = 0; i < n; ++i) {
                DetectorScore score;
                score.scene_id = detection_scene_id(i);
                score.detector_id = config.detector_ids[det];
                score.category = config.categories[cat];
                score.confidence =
                    config.detector_signal * (t[static_cast<std::size_t>(i)] ? 1.0 : 0.0) +
                    config.detector_noise * normal(rng);
                data.scores.push_back(std::move(score));
            }
        }
    }
    return data;
}

const std::vector<std::string>& default_nontarget_vocabulary() {
    static const std::vector<std::string> vocabulary = {
        "tree",       "building",   "road",      "sidewalk", "sky",        "grass",
        "fence",      "pole",       "sign",      "window",   "door",       "wall",
        "bench",      "lamppost",   "bicycle",   "bus",      "truck",      "motorcycle",
        "dog",        "stroller",   "mailbox",   "hydrant",  "trash_can",  "awning",
        "balcony",    "stairs",     "curb",      "crosswalk","parking_meter", "bush",
        "flower_bed", "storefront", "billboard", "bridge",   "streetlight", "traffic_light"};
    return vocabulary;
}

SchemaConfig write_synth_dataset(const SynthConfig& config, const std::string& out_dir) {
    config.validate();
    std::filesystem::create_directories(out_dir);

    SynthExpectationData rated = generate_expectation_dataset(config);
    std::vector<SceneRecord> all_scenes = rated.scenes;
    std::vector<DetectorScore> scores;
    if (config.n_detection_scenes > 0) {
        SynthDetectionData detection = generate_detection_dataset(config);
        all_scenes.insert(all_scenes.end(), detection.scenes.begin(), detection.scenes.end());
        scores = std::move(detection.scores);
    }

    SchemaConfig schema;
    schema.slider = config.slider;
    schema.frame = config.frame;

    const std::string base = out_dir + "/";
    for (ChannelId c : kAllChannels) {
        const std::string path = base + "features_" + channel_name(c) + ".csv";
        const int d = config.dims.at(c);
        std::vector<std::string> header = {"scene_id"};
        for (int j = 0; j < d; ++j) header.push_back("f" + std::to_string(j));
        std::vector<std::vector<std::string>> rows;
        rows.reserve(all_scenes.size());
        for (const SceneRecord& scene : all_scenes) {
            std::vector<std::string> row = {scene.scene_id};
            const Eigen::VectorXd& v = scene.features(c);
            for (int j = 0; j < d; ++j) row.push_back(format_double(v[j]));
            rows.push_back(std::move(row));
        }
        write_csv(path, header, rows);
        schema.feature_files[c] = path;
    }

    {
        const std::string path = base + "ratings.csv";
        std::vector<std::vector<std::string>> rows;
        rows.reserve(rated.ratings.size());
        for (const RawRating& r : rated.ratings) {
            std::vector<std::string> row = {r.subject_id, r.scene_id, r.category,
                                            format_double(r.likelihood_raw)};
            if (r.box) {
                row.push_back(format_double(r.box->x));
                row.push_back(format_double(r.box->y));
                row.push_back(format_double(r.box->w));
                row.push_back(format_double(r.box->h));
            } else {
                row.insert(row.end(), {"", "", "", ""});
            }
            rows.push_back(std::move(row));
        }
        write_csv(path,
                  {"subject_id", "scene_id", "category", "likelihood_raw", "box_x", "box_y",
                   "box_w", "box_h"},
                  rows);
        schema.ratings_file = path;
    }

    {
        const std::string path = base + "scene_meta.csv";
        std::vector<std::vector<std::string>> rows;
        for (const SceneRecord& scene : all_scenes)
            rows.push_back({scene.scene_id, scene.scene_category});
        write_csv(path, {"scene_id", "scene_category"}, rows);
        schema.scene_meta_file = path;
    }

    if (!scores.empty()) {
        const std::string path = base + "scores.csv";
        std::vector<std::vector<std::string>> rows;
        rows.reserve(scores.size());
        for (const DetectorScore& s : scores)
            rows.push_back({s.scene_id, s.detector_id, s.category, format_double(s.confidence)});
        write_csv(path, {"scene_id", "detector_id", "category", "confidence"}, rows);
        schema.scores_file = path;

        json truth;
        truth["vocabulary"] = config.categories;
        json truth_rows = json::object();
        for (const SceneRecord& scene : all_scenes) {
            if (scene.ground_truth.empty()) continue;
            json row = json::array();
            for (const std::string& category : config.categories)
                row.push_back(scene.ground_truth.at(category) ? 1 : 0);
            truth_rows[scene.scene_id] = std::move(row);
        }
        truth["rows"] = std::move(truth_rows);
        const std::string truth_path = base + "ground_truth.json";
        write_file(truth_path, truth.dump(2) + "\n");
        schema.ground_truth_file = truth_path;
    }

    {
        // Synthetic nontarget presence: sign of each nontarget feature.
        std::vector<std::string> vocabulary;
        const int d = config.dims.at(ChannelId::Nontarget);
        if (d == static_cast<int>(default_nontarget_vocabulary().size())) {
            vocabulary = default_nontarget_vocabulary();
        } else {
            for (int j = 0; j < d; ++j) {
                char buf[24];
                std::snprintf(buf, sizeof(buf), "object_%02d", j);
                vocabulary.emplace_back(buf);
            }
        }
        json presence;
        presence["vocabulary"] = vocabulary;
        json rows = json::object();
        for (const SceneRecord& scene : all_scenes) {
            const Eigen::VectorXd& v = scene.features(ChannelId::Nontarget);
            json row = json::array();
            for (int j = 0; j < d; ++j) row.push_back(v[j] > 0.0 ? 1 : 0);
            rows[scene.scene_id] = std::move(row);
        }
        presence["rows"] = std::move(rows);
        const std::string path = base + "presence.json";
        write_file(path, presence.dump(2) + "\n");
        schema.presence_file = path;
    }

    {
        // Planted-truth sidecar for oracle checks; not part of the schema.
        json sidecar;
        SynthAnalytics a = rated.analytics;
        sidecar["analytics"] = {{"signal_sd", a.signal_sd},
                                {"latent_sd", a.latent_sd},
                                {"subject_noise_sd", a.subject_noise_sd},
                                {"expected_model_r", a.expected_model_r},
                                {"expected_ceiling", a.expected_ceiling},
                                {"bayes_accuracy", a.bayes_accuracy},
                                {"baseline_accuracy", a.baseline_accuracy}};
        json planted = json::array();
        for (const PlantedExpectation& p : rated.planted) {
            json weights = json::object();
            for (const auto& [c, w] : p.feature_weights) {
                json arr = json::array();
                for (int j = 0; j < w.size(); ++j) arr.push_back(w[j]);
                weights[channel_name(c)] = std::move(arr);
            }
            planted.push_back({{"category", p.category},
                               {"dimension", dimension_name(p.dimension)},
                               {"signal", p.signal},
                               {"feature_weights", std::move(weights)},
                               {"clamped", p.clamped}});
        }
        sidecar["planted"] = std::move(planted);
        write_file(base + "planted.json", sidecar.dump(2) + "\n");
    }

    return schema;
}

}  // namespace ctxprior
