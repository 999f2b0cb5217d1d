#include "ctxprior/config.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include "ctxprior/csv.hpp"
#include "ctxprior/errors.hpp"

namespace ctxprior {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(value);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int parse_int(const std::string& value, const std::string& key) {
    int out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    require(ec == std::errc() && ptr == value.data() + value.size(), ErrorCode::InvalidConfig,
            "config key '" + key + "': cannot parse '" + value + "' as an integer");
    return out;
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    require(ec == std::errc() && ptr == value.data() + value.size(), ErrorCode::InvalidConfig,
            "config key '" + key + "': cannot parse '" + value + "' as an unsigned integer");
    return out;
}

double parse_real(const std::string& value, const std::string& key) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    require(ec == std::errc() && ptr == value.data() + value.size(), ErrorCode::InvalidConfig,
            "config key '" + key + "': cannot parse '" + value + "' as a number");
    return out;
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true") return true;
    if (value == "false") return false;
    fail(ErrorCode::InvalidConfig,
         "config key '" + key + "': expected 'true' or 'false', got '" + value + "'");
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ",";
        out += items[i];
    }
    return out;
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text) {
    KeyValueFile kv;
    std::istringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        require(eq != std::string::npos, ErrorCode::InvalidConfig,
                "config line " + std::to_string(line_no) + ": expected 'key = value', got '" +
                    line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        require(!key.empty(), ErrorCode::InvalidConfig,
                "config line " + std::to_string(line_no) + ": empty key");
        require(kv.values.emplace(key, value).second, ErrorCode::InvalidConfig,
                "config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    return kv;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
    return parse(read_file(path));
}

SchemaConfig RunConfig::schema() const {
    SchemaConfig s;
    s.feature_files = feature_files;
    s.ratings_file = ratings_file;
    s.scores_file = scores_file;
    s.ground_truth_file = ground_truth_file;
    s.presence_file = presence_file;
    s.scene_meta_file = scene_meta_file;
    s.slider = slider;
    s.frame = frame;
    return s;
}

EvalConfig RunConfig::eval_config() const {
    EvalConfig e;
    e.specs = specs;
    e.pca_dims = pca_dims;
    e.pca_scope = pca_scope;
    e.ridge = ridge;
    e.standardize = standardize;
    e.n_splits = n_splits;
    e.train_frac = train_frac;
    e.ceiling_resamples = ceiling_resamples;
    e.seed = seed;
    e.jobs = jobs;
    return e;
}

std::map<std::string, std::string> RunConfig::resolved() const {
    std::map<std::string, std::string> out;
    for (ChannelId c : kAllChannels) {
        auto it = feature_files.find(c);
        out[std::string("features_") + channel_name(c)] =
            it == feature_files.end() ? "" : it->second;
    }
    out["ratings"] = ratings_file;
    out["scores"] = scores_file;
    out["ground_truth"] = ground_truth_file;
    out["presence"] = presence_file;
    out["scene_meta"] = scene_meta_file;
    out["slider_min"] = format_double(slider.min);
    out["slider_max"] = format_double(slider.max);
    out["frame_width"] = format_double(frame.width_px);
    out["frame_height"] = format_double(frame.height_px);
    out["categories"] = join(categories);
    {
        std::vector<std::string> names;
        for (RatingDimension d : dimensions) names.emplace_back(dimension_name(d));
        out["dimensions"] = join(names);
    }
    {
        std::vector<std::string> names;
        for (const ChannelSet& s : specs) names.push_back(s.to_string());
        out["specs"] = names.empty() ? "all" : join(names);
    }
    out["pca_dims"] = std::to_string(pca_dims);
    out["pca_scope"] = pca_scope == PcaScope::PerFold ? "per_fold" : "global";
    out["ridge"] = format_double(ridge);
    out["standardize"] = standardize ? "true" : "false";
    out["n_splits"] = std::to_string(n_splits);
    out["train_frac"] = format_double(train_frac);
    out["k_folds"] = std::to_string(k_folds);
    out["ceiling_resamples"] = std::to_string(ceiling_resamples);
    out["weights_spec"] = weights_spec;
    out["detectors"] = join(detectors);
    out["fusion_feature_sets"] = join(fusion_feature_sets);
    out["fusion_spec"] = fusion_spec;
    out["fusion_l2"] = format_double(fusion_l2);
    out["fusion_loss"] = fusion_loss == FusionLoss::Logistic ? "logistic" : "margin";
    out["transfer_categories"] = join(transfer_categories);
    out["transfer_permutations"] = std::to_string(transfer_permutations);
    out["synth_scenes"] = std::to_string(synth.n_scenes);
    out["synth_subjects"] = std::to_string(synth.n_subjects);
    for (ChannelId c : kAllChannels) {
        out[std::string("synth_dims_") + channel_name(c)] = std::to_string(synth.dims.at(c));
        out[std::string("synth_rank_") + channel_name(c)] =
            std::to_string(synth.factor_rank.at(c));
    }
    out["synth_generating"] = synth.generating.to_string();
    out["synth_noise_sd"] = format_double(synth.noise_sd);
    out["synth_reliability"] = format_double(synth.reliability);
    out["synth_factor_scale"] = format_double(synth.factor_scale);
    out["synth_factor_decay"] = format_double(synth.factor_decay);
    out["synth_residual_sd"] = format_double(synth.residual_sd);
    out["synth_likelihood_slope"] = format_double(synth.likelihood_slope);
    out["synth_detection_scenes"] = std::to_string(synth.n_detection_scenes);
    out["synth_detector_signal"] = format_double(synth.detector_signal);
    out["synth_detector_noise"] = format_double(synth.detector_noise);
    out["synth_context_signal"] = format_double(synth.context_signal);
    out["synth_detectors"] = join(synth.detector_ids);
    out["seed"] = std::to_string(seed);
    out["out_dir"] = out_dir;
    out["models_dir"] = models_dir.empty() ? out_dir : models_dir;
    // `jobs` is deliberately not echoed: it never changes results, and leaving
    // it out keeps report bytes identical across parallelism levels.
    return out;
}

RunConfig parse_run_config(const KeyValueFile& kv) {
    RunConfig cfg;
    bool seed_given = false;

    for (const auto& [key, value] : kv.values) {
        if (key == "features_target") {
            cfg.feature_files[ChannelId::Target] = value;
        } else if (key == "features_nontarget") {
            cfg.feature_files[ChannelId::Nontarget] = value;
        } else if (key == "features_coarse") {
            cfg.feature_files[ChannelId::Coarse] = value;
        } else if (key == "ratings") {
            cfg.ratings_file = value;
        } else if (key == "scores") {
            cfg.scores_file = value;
        } else if (key == "ground_truth") {
            cfg.ground_truth_file = value;
        } else if (key == "presence") {
            cfg.presence_file = value;
        } else if (key == "scene_meta") {
            cfg.scene_meta_file = value;
        } else if (key == "slider_min") {
            cfg.slider.min = parse_real(value, key);
        } else if (key == "slider_max") {
            cfg.slider.max = parse_real(value, key);
        } else if (key == "frame_width") {
            cfg.frame.width_px = parse_real(value, key);
        } else if (key == "frame_height") {
            cfg.frame.height_px = parse_real(value, key);
        } else if (key == "categories") {
            cfg.categories = split_list(value);
            require(!cfg.categories.empty(), ErrorCode::InvalidConfig,
                    "config key 'categories' lists no categories");
        } else if (key == "dimensions") {
            cfg.dimensions.clear();
            for (const std::string& name : split_list(value))
                cfg.dimensions.push_back(parse_dimension(name));
            require(!cfg.dimensions.empty(), ErrorCode::InvalidConfig,
                    "config key 'dimensions' lists no dimensions");
        } else if (key == "specs") {
            cfg.specs.clear();
            if (value != "all")
                for (const std::string& letters : split_list(value))
                    cfg.specs.push_back(ChannelSet::parse(letters));
        } else if (key == "pca_dims") {
            cfg.pca_dims = parse_int(value, key);
        } else if (key == "pca_scope") {
            if (value == "per_fold")
                cfg.pca_scope = PcaScope::PerFold;
            else if (value == "global")
                cfg.pca_scope = PcaScope::Global;
            else
                fail(ErrorCode::InvalidConfig,
                     "config key 'pca_scope': expected 'per_fold' or 'global', got '" + value + "'");
        } else if (key == "ridge") {
            cfg.ridge = parse_real(value, key);
        } else if (key == "standardize") {
            cfg.standardize = parse_bool(value, key);
        } else if (key == "n_splits") {
            cfg.n_splits = parse_int(value, key);
        } else if (key == "train_frac") {
            cfg.train_frac = parse_real(value, key);
        } else if (key == "k_folds") {
            cfg.k_folds = parse_int(value, key);
        } else if (key == "ceiling_resamples") {
            cfg.ceiling_resamples = parse_int(value, key);
        } else if (key == "weights_spec") {
            cfg.weights_spec = value;
        } else if (key == "detectors") {
            cfg.detectors = split_list(value);
        } else if (key == "fusion_feature_sets") {
            cfg.fusion_feature_sets = split_list(value);
            require(!cfg.fusion_feature_sets.empty(), ErrorCode::InvalidConfig,
                    "config key 'fusion_feature_sets' lists no sets");
        } else if (key == "fusion_spec") {
            cfg.fusion_spec = value;
        } else if (key == "fusion_l2") {
            cfg.fusion_l2 = parse_real(value, key);
        } else if (key == "fusion_loss") {
            if (value == "logistic")
                cfg.fusion_loss = FusionLoss::Logistic;
            else if (value == "margin")
                cfg.fusion_loss = FusionLoss::Margin;
            else
                fail(ErrorCode::InvalidConfig,
                     "config key 'fusion_loss': expected 'logistic' or 'margin', got '" + value +
                         "'");
        } else if (key == "transfer_categories") {
            cfg.transfer_categories = split_list(value);
        } else if (key == "transfer_permutations") {
            cfg.transfer_permutations = parse_int(value, key);
        } else if (key == "synth_scenes") {
            cfg.synth.n_scenes = parse_int(value, key);
        } else if (key == "synth_subjects") {
            cfg.synth.n_subjects = parse_int(value, key);
        } else if (key == "synth_dims_target") {
            cfg.synth.dims[ChannelId::Target] = parse_int(value, key);
        } else if (key == "synth_dims_nontarget") {
            cfg.synth.dims[ChannelId::Nontarget] = parse_int(value, key);
        } else if (key == "synth_dims_coarse") {
            cfg.synth.dims[ChannelId::Coarse] = parse_int(value, key);
        } else if (key == "synth_rank_target") {
            cfg.synth.factor_rank[ChannelId::Target] = parse_int(value, key);
        } else if (key == "synth_rank_nontarget") {
            cfg.synth.factor_rank[ChannelId::Nontarget] = parse_int(value, key);
        } else if (key == "synth_rank_coarse") {
            cfg.synth.factor_rank[ChannelId::Coarse] = parse_int(value, key);
        } else if (key == "synth_generating") {
            cfg.synth.generating = ChannelSet::parse(value);
        } else if (key == "synth_noise_sd") {
            cfg.synth.noise_sd = parse_real(value, key);
        } else if (key == "synth_reliability") {
            cfg.synth.reliability = parse_real(value, key);
        } else if (key == "synth_factor_scale") {
            cfg.synth.factor_scale = parse_real(value, key);
        } else if (key == "synth_factor_decay") {
            cfg.synth.factor_decay = parse_real(value, key);
        } else if (key == "synth_residual_sd") {
            cfg.synth.residual_sd = parse_real(value, key);
        } else if (key == "synth_likelihood_slope") {
            cfg.synth.likelihood_slope = parse_real(value, key);
        } else if (key == "synth_detection_scenes") {
            cfg.synth.n_detection_scenes = parse_int(value, key);
        } else if (key == "synth_detector_signal") {
            cfg.synth.detector_signal = parse_real(value, key);
        } else if (key == "synth_detector_noise") {
            cfg.synth.detector_noise = parse_real(value, key);
        } else if (key == "synth_context_signal") {
            cfg.synth.context_signal = parse_real(value, key);
        } else if (key == "synth_detectors") {
            cfg.synth.detector_ids = split_list(value);
        } else if (key == "seed") {
            cfg.seed = parse_u64(value, key);
            seed_given = true;
        } else if (key == "out_dir") {
            cfg.out_dir = value;
        } else if (key == "models_dir") {
            cfg.models_dir = value;
        } else if (key == "jobs") {
            cfg.jobs = parse_int(value, key);
        } else {
            fail(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
        }
    }

    require(seed_given, ErrorCode::InvalidConfig,
            "config must set 'seed' (or pass --seed on the command line)");
    require(cfg.pca_dims >= 1, ErrorCode::InvalidConfig, "pca_dims must be >= 1");
    require(cfg.n_splits >= 1, ErrorCode::InvalidConfig, "n_splits must be >= 1");
    require(cfg.train_frac > 0.0 && cfg.train_frac < 1.0, ErrorCode::InvalidConfig,
            "train_frac must lie in (0, 1)");
    require(cfg.k_folds >= 2, ErrorCode::InvalidConfig, "k_folds must be >= 2");
    require(cfg.ceiling_resamples >= 1, ErrorCode::InvalidConfig,
            "ceiling_resamples must be >= 1");
    require(cfg.ridge >= 0.0, ErrorCode::InvalidConfig, "ridge must be >= 0");
    require(cfg.fusion_l2 >= 0.0, ErrorCode::InvalidConfig, "fusion_l2 must be >= 0");
    require(cfg.transfer_permutations >= 1, ErrorCode::InvalidConfig,
            "transfer_permutations must be >= 1");
    require(cfg.jobs >= 1, ErrorCode::InvalidConfig, "jobs must be >= 1");
    require(!cfg.out_dir.empty(), ErrorCode::InvalidConfig, "out_dir must not be empty");
    ChannelSet::parse(cfg.weights_spec);   // validates the letters
    ChannelSet::parse(cfg.fusion_spec);
    cfg.synth.slider = cfg.slider;
    cfg.synth.frame = cfg.frame;
    cfg.synth.categories = cfg.categories;
    cfg.synth.seed = cfg.seed;
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(KeyValueFile::load(path));
}

FusionFeatureSet parse_feature_set_token(const std::string& token,
                                         const std::string& target_category,
                                         const std::vector<std::string>& rating_categories) {
    if (token == "baseline") return FusionFeatureSet::baseline();
    if (token == "all") return FusionFeatureSet::all_ratings(rating_categories);

    FusionFeatureSet set = FusionFeatureSet::baseline();
    std::istringstream ss(token);
    std::string atom;
    while (std::getline(ss, atom, '+')) {
        RatingDimension dim;
        if (atom == "lklhd")
            dim = RatingDimension::Likelihood;
        else if (atom == "xlocn")
            dim = RatingDimension::XPos;
        else if (atom == "ylocn")
            dim = RatingDimension::YPos;
        else if (atom == "scale")
            dim = RatingDimension::Scale;
        else if (atom == "aspect")
            dim = RatingDimension::Aspect;
        else
            fail(ErrorCode::InvalidConfig,
                 "fusion feature token '" + token + "': unknown atom '" + atom +
                     "' (expected lklhd|xlocn|ylocn|scale|aspect)");
        set.items.push_back(FusionFeature::expectation(target_category, dim));
    }
    set.validate();
    require(set.size() > 1, ErrorCode::InvalidConfig,
            "fusion feature token '" + token + "' adds no expectation features");
    return set;
}

}  // namespace ctxprior
