#include "ctxprior/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ctxprior/csv.hpp"
#include "ctxprior/errors.hpp"
#include "ctxprior/report.hpp"
#include "ctxprior/rng.hpp"

namespace ctxprior {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidConfig:
        case ErrorCode::InvalidK:
            return kExitConfig;
        case ErrorCode::SingularSystem:
        case ErrorCode::NonConvergence:
        case ErrorCode::ConstantInput:
        case ErrorCode::DomainError:
        case ErrorCode::InvalidShape:
            return kExitNumeric;
        default:
            return kExitData;
    }
}

namespace {

void ensure_out_dir(const RunConfig& config) {
    fs::create_directories(config.out_dir);
}

std::string models_dir(const RunConfig& config) {
    return config.models_dir.empty() ? config.out_dir : config.models_dir;
}

void check_paths_exist(const std::vector<std::string>& paths) {
    for (const std::string& path : paths) {
        if (path.empty()) continue;
        require(fs::exists(path), ErrorCode::IoError, "input file does not exist: '" + path + "'");
    }
}

std::vector<std::string> data_paths(const RunConfig& config) {
    std::vector<std::string> paths;
    for (const auto& [channel, path] : config.feature_files) paths.push_back(path);
    paths.push_back(config.ratings_file);
    paths.push_back(config.scores_file);
    paths.push_back(config.ground_truth_file);
    paths.push_back(config.presence_file);
    paths.push_back(config.scene_meta_file);
    return paths;
}

void write_report(const std::string& path, const std::string& content) {
    write_file(path, content);
    std::cout << "wrote " << path << "\n";
}

std::string model_filename(const std::string& category, RatingDimension dimension,
                           const std::string& spec) {
    return "model_" + category + "_" + dimension_name(dimension) + "_" + spec + ".json";
}

std::vector<ChannelSet> requested_specs(const RunConfig& config) {
    if (!config.specs.empty()) return config.specs;
    return {ChannelSet::all_nonempty().begin(), ChannelSet::all_nonempty().end()};
}

ModelSpec make_spec(const RunConfig& config, const ChannelSet& channels,
                    const std::string& category, RatingDimension dimension) {
    ModelSpec spec;
    spec.channels = channels;
    spec.pca_dims = config.pca_dims;
    spec.category = category;
    spec.dimension = dimension;
    spec.ridge = config.ridge;
    spec.standardize = config.standardize;
    return spec;
}

// Loads a persisted model when present, otherwise fits it. Both paths give
// bit-identical predictions, so chained commands stay deterministic.
ExpectationModel obtain_model(const RunConfig& config, const Dataset& dataset,
                              const std::vector<RatingAggregate>& aggregates,
                              const std::string& category, RatingDimension dimension,
                              const std::string& spec_letters) {
    const fs::path path =
        fs::path(models_dir(config)) / model_filename(category, dimension, spec_letters);
    if (fs::exists(path)) return load_expectation_model(read_file(path.string()));
    const ModelSpec spec =
        make_spec(config, ChannelSet::parse(spec_letters), category, dimension);
    return fit_expectation_model(spec, dataset.scenes, aggregates);
}

std::vector<std::string> nontarget_vocabulary(const Dataset& dataset) {
    int dim = -1;
    for (const SceneRecord& scene : dataset.scenes) {
        if (scene.has_channel(ChannelId::Nontarget)) {
            dim = static_cast<int>(scene.features(ChannelId::Nontarget).size());
            break;
        }
    }
    require(dim > 0, ErrorCode::MissingChannel, "dataset has no nontarget features");
    if (dataset.presence && static_cast<int>(dataset.presence->vocabulary.size()) == dim)
        return dataset.presence->vocabulary;
    std::vector<std::string> labels;
    for (int j = 0; j < dim; ++j) labels.push_back("f" + std::to_string(j));
    return labels;
}

}  // namespace

void cmd_synth(const RunConfig& config) {
    config.synth.validate();
    ensure_out_dir(config);
    const std::string synth_dir = (fs::path(config.out_dir) / "synth").string();
    const SchemaConfig schema = write_synth_dataset(config.synth, synth_dir);
    for (const auto& [channel, path] : schema.feature_files) std::cout << "wrote " << path << "\n";
    std::cout << "wrote " << schema.ratings_file << "\n";
    if (!schema.scores_file.empty()) std::cout << "wrote " << schema.scores_file << "\n";
    if (!schema.ground_truth_file.empty())
        std::cout << "wrote " << schema.ground_truth_file << "\n";
    std::cout << "wrote " << schema.presence_file << "\n";
    std::cout << "wrote " << schema.scene_meta_file << "\n";

    // Config fragment pointing at the generated files, for chaining commands.
    std::ostringstream fragment;
    for (ChannelId c : kAllChannels)
        fragment << "features_" << channel_name(c) << " = " << schema.feature_files.at(c) << "\n";
    fragment << "ratings = " << schema.ratings_file << "\n";
    if (!schema.scores_file.empty()) fragment << "scores = " << schema.scores_file << "\n";
    if (!schema.ground_truth_file.empty())
        fragment << "ground_truth = " << schema.ground_truth_file << "\n";
    fragment << "presence = " << schema.presence_file << "\n";
    fragment << "scene_meta = " << schema.scene_meta_file << "\n";
    fragment << "slider_min = " << format_double(schema.slider.min) << "\n";
    fragment << "slider_max = " << format_double(schema.slider.max) << "\n";
    fragment << "frame_width = " << format_double(schema.frame.width_px) << "\n";
    fragment << "frame_height = " << format_double(schema.frame.height_px) << "\n";
    write_report((fs::path(synth_dir) / "dataset.conf").string(), fragment.str());
}

void cmd_fit(const RunConfig& config) {
    check_paths_exist(data_paths(config));
    ensure_out_dir(config);
    fs::create_directories(models_dir(config));

    const Dataset dataset = load_dataset(config.schema());
    const std::vector<RatingAggregate> aggregates =
        aggregate_ratings(dataset.ratings, dataset.frame, dataset.slider);

    nlohmann::json summary;
    summary["report"] = "fit-summary";
    nlohmann::json entries = nlohmann::json::array();

    const std::vector<ChannelSet> specs = requested_specs(config);
    for (std::size_t ci = 0; ci < config.categories.size(); ++ci) {
        const std::string& category = config.categories[ci];
        for (std::size_t di = 0; di < config.dimensions.size(); ++di) {
            const RatingDimension dimension = config.dimensions[di];
            for (std::size_t si = 0; si < specs.size(); ++si) {
                const ModelSpec spec = make_spec(config, specs[si], category, dimension);
                const ExpectationModel model =
                    fit_expectation_model(spec, dataset.scenes, aggregates);

                const TrainingView view =
                    training_view(dataset.scenes, aggregates, category, dimension);
                const double r_in_sample = pearson(model.predict(view.scenes), view.y);
                const CvResult cv =
                    kfold_eval(spec, dataset.scenes, aggregates, config.k_folds,
                               derive_seed(config.seed, ci * 64 + di * 8, si));

                const fs::path path = fs::path(models_dir(config)) /
                                      model_filename(category, dimension, spec.name());
                write_report(path.string(), save_model(model));

                entries.push_back({{"category", category},
                                   {"dimension", dimension_name(dimension)},
                                   {"spec", spec.name()},
                                   {"n_scenes", view.size()},
                                   {"r_in_sample", r_in_sample},
                                   {"r_cv", cv.r_cv},
                                   {"k_folds", cv.fold_count},
                                   {"model_file", path.filename().string()}});
            }
        }
    }
    summary["models"] = std::move(entries);
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [key, value] : config.resolved()) cfg[key] = value;
    summary["config"] = std::move(cfg);
    write_report((fs::path(config.out_dir) / "fit_summary.json").string(),
                 summary.dump(2) + "\n");
}

void cmd_evaluate(const RunConfig& config) {
    check_paths_exist(data_paths(config));
    ensure_out_dir(config);

    const Dataset dataset = load_dataset(config.schema());
    const std::vector<RatingAggregate> aggregates =
        aggregate_ratings(dataset.ratings, dataset.frame, dataset.slider);
    const auto resolved = config.resolved();

    for (const std::string& category : config.categories) {
        for (RatingDimension dimension : config.dimensions) {
            const SpecTable table =
                evaluate_all_specs(dataset.scenes, aggregates, dataset.ratings, dataset.frame,
                                   dataset.slider, category, dimension, config.eval_config());
            const std::string stem = "table_" + category + "_" + dimension_name(dimension);
            write_report((fs::path(config.out_dir) / (stem + ".json")).string(),
                         spec_table_json(table, resolved));
            write_report((fs::path(config.out_dir) / (stem + ".csv")).string(),
                         spec_table_csv(table));
        }
    }

    // Nontarget weight comparison between the first two categories.
    const ChannelSet weights_set = ChannelSet::parse(config.weights_spec);
    if (config.categories.size() >= 2 && weights_set.contains(ChannelId::Nontarget)) {
        const ExpectationModel model_a =
            obtain_model(config, dataset, aggregates, config.categories[0],
                         RatingDimension::Likelihood, config.weights_spec);
        const ExpectationModel model_b =
            obtain_model(config, dataset, aggregates, config.categories[1],
                         RatingDimension::Likelihood, config.weights_spec);
        const NontargetWeightReport report =
            nontarget_weight_correlation(model_a, model_b, nontarget_vocabulary(dataset));
        write_report((fs::path(config.out_dir) / "nontarget_weights.json").string(),
                     nontarget_report_json(report, config.categories[0], config.categories[1],
                                           resolved));
    }
}

namespace {

// Seeded subsample of majority-class indices down to the minority count.
std::vector<int> balanced_rows(const std::vector<std::uint8_t>& labels, std::uint64_t seed) {
    std::vector<int> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i)
        (labels[i] ? pos : neg).push_back(static_cast<int>(i));
    require(!pos.empty() && !neg.empty(), ErrorCode::SingleClassInput,
            "scene set contains a single class");
    std::vector<int>& majority = pos.size() > neg.size() ? pos : neg;
    const std::size_t target = std::min(pos.size(), neg.size());
    if (majority.size() > target) {
        auto rng = make_engine(seed);
        const std::vector<int> perm = random_permutation(static_cast<int>(majority.size()), rng);
        std::vector<int> kept;
        for (std::size_t j = 0; j < target; ++j)
            kept.push_back(majority[static_cast<std::size_t>(perm[j])]);
        std::sort(kept.begin(), kept.end());
        majority = std::move(kept);
    }
    std::vector<int> rows;
    rows.insert(rows.end(), pos.begin(), pos.end());
    rows.insert(rows.end(), neg.begin(), neg.end());
    std::sort(rows.begin(), rows.end());
    return rows;
}

std::string sanitize_token(std::string token) {
    for (char& c : token)
        if (c == '+' || c == ':') c = '-';
    return token;
}

}  // namespace

void cmd_augment(const RunConfig& config) {
    check_paths_exist(data_paths(config));
    require(!config.scores_file.empty(), ErrorCode::InvalidConfig,
            "augment requires a detector scores file");
    require(!config.ground_truth_file.empty(), ErrorCode::InvalidConfig,
            "augment requires a ground truth file");
    ensure_out_dir(config);

    const Dataset dataset = load_dataset(config.schema());
    const std::vector<RatingAggregate> aggregates =
        aggregate_ratings(dataset.ratings, dataset.frame, dataset.slider);
    const auto resolved = config.resolved();

    std::vector<std::string> detectors = config.detectors;
    if (detectors.empty()) {
        std::set<std::string> ids;
        for (const DetectorScore& s : dataset.scores) ids.insert(s.detector_id);
        detectors.assign(ids.begin(), ids.end());
    }
    require(!detectors.empty(), ErrorCode::InvalidConfig, "no detectors to evaluate");

    // Expectation models used as fusion features, fit on the rated scenes.
    std::map<ExpectationModelKey, ExpectationModel> model_store;
    auto model_for = [&](const std::string& category, RatingDimension dim) {
        const ExpectationModelKey key{category, dim};
        auto it = model_store.find(key);
        if (it == model_store.end())
            it = model_store
                     .emplace(key, obtain_model(config, dataset, aggregates, category, dim,
                                                config.fusion_spec))
                     .first;
        return &it->second;
    };

    auto scene_set_for = [&](const std::string& detector, const std::string& category) {
        std::set<std::string> scored;
        for (const DetectorScore& s : dataset.scores)
            if (s.detector_id == detector && s.category == category) scored.insert(s.scene_id);
        std::vector<const SceneRecord*> scenes;
        for (const SceneRecord& scene : dataset.scenes)
            if (scene.truth(category).has_value() && scored.count(scene.scene_id))
                scenes.push_back(&scene);
        return scenes;
    };

    std::vector<AccuracyRow> rows;
    std::map<std::string, std::map<std::string, double>> accuracy_by_detector_category;

    for (std::size_t det = 0; det < detectors.size(); ++det) {
        const std::string& detector = detectors[det];
        for (std::size_t ci = 0; ci < config.categories.size(); ++ci) {
            const std::string& category = config.categories[ci];
            std::vector<const SceneRecord*> scenes = scene_set_for(detector, category);
            require(!scenes.empty(), ErrorCode::MissingScore,
                    "no scenes with ground truth and '" + detector + "' scores for category '" +
                        category + "'");

            // Class-balance the evaluation set with a seeded draw.
            std::vector<std::uint8_t> labels;
            for (const SceneRecord* scene : scenes) labels.push_back(*scene->truth(category) ? 1 : 0);
            const std::vector<int> keep =
                balanced_rows(labels, derive_seed(config.seed, 0xBA1A, det * 64 + ci));
            std::vector<const SceneRecord*> balanced;
            for (int idx : keep) balanced.push_back(scenes[static_cast<std::size_t>(idx)]);

            AccuracyRow row;
            row.detector_id = detector;
            row.scene_set = category;
            row.n_scenes = static_cast<int>(balanced.size());

            double baseline_accuracy = 0.0;
            bool first_set = true;
            for (std::size_t ti = 0; ti < config.fusion_feature_sets.size(); ++ti) {
                const std::string& token = config.fusion_feature_sets[ti];
                const FusionFeatureSet feature_set =
                    parse_feature_set_token(token, category, config.categories);
                std::map<ExpectationModelKey, const ExpectationModel*> models;
                for (const FusionFeature& f : feature_set.items)
                    if (!f.is_score)
                        models[{f.rating_category, f.dimension}] =
                            model_for(f.rating_category, f.dimension);
                const FusionMatrix matrix = build_fusion_features(
                    dataset.scores, detector, category, models, balanced, feature_set);
                const FusionTrainResult trained =
                    train_fusion(matrix, config.k_folds,
                                 derive_seed(config.seed, 0xF05E, det * 64 + ci),
                                 config.fusion_l2, config.fusion_loss);

                if (token == "baseline" || first_set) {
                    if (token == "baseline") baseline_accuracy = trained.cv_accuracy;
                    if (first_set) {
                        row.baseline_breakdown = error_breakdown(trained.classifier, matrix);
                        first_set = false;
                    }
                }
                row.cells.push_back({token, trained.cv_accuracy, 0.0});
                row.augmented_breakdown = error_breakdown(trained.classifier, matrix);

                const RocCurve curve =
                    roc(trained.classifier.decision_scores(matrix.X), matrix.labels);
                const std::string roc_name =
                    "roc_" + detector + "_" + category + "_" + sanitize_token(token) + ".csv";
                write_report((fs::path(config.out_dir) / roc_name).string(), roc_csv(curve));

                const std::string clf_name =
                    "fusion_" + detector + "_" + category + "_" + sanitize_token(token) + ".json";
                write_report((fs::path(config.out_dir) / clf_name).string(),
                             save_model(trained.classifier));
            }
            for (AccuracyCell& cell : row.cells)
                cell.delta_vs_baseline = cell.cv_accuracy - baseline_accuracy;
            accuracy_by_detector_category[detector][category] = baseline_accuracy;
            rows.push_back(std::move(row));
        }
    }

    write_report((fs::path(config.out_dir) / "accuracy_table.json").string(),
                 accuracy_table_json(rows, resolved));
    write_report((fs::path(config.out_dir) / "accuracy_table.csv").string(),
                 accuracy_table_csv(rows));

    // Transfer analysis across extra categories, anchored on the rated ones.
    if (!config.transfer_categories.empty()) {
        require(dataset.presence.has_value(), ErrorCode::InvalidConfig,
                "transfer analysis requires a presence matrix");
        const std::string& detector = detectors.front();
        FusionFeatureSet lk_set = FusionFeatureSet::baseline();
        for (const std::string& rating_category : config.categories)
            lk_set.items.push_back(
                FusionFeature::expectation(rating_category, RatingDimension::Likelihood));

        std::vector<TransferRow> transfer_rows;
        std::vector<double> benefits, associations, baselines;
        for (std::size_t ci = 0; ci < config.transfer_categories.size(); ++ci) {
            const std::string& category = config.transfer_categories[ci];
            std::vector<const SceneRecord*> scenes = scene_set_for(detector, category);
            require(!scenes.empty(), ErrorCode::MissingScore,
                    "no scenes with ground truth and '" + detector + "' scores for category '" +
                        category + "'");
            std::vector<std::uint8_t> labels;
            for (const SceneRecord* scene : scenes)
                labels.push_back(*scene->truth(category) ? 1 : 0);
            const std::vector<int> keep =
                balanced_rows(labels, derive_seed(config.seed, 0xBA1B, ci));
            std::vector<const SceneRecord*> balanced;
            for (int idx : keep) balanced.push_back(scenes[static_cast<std::size_t>(idx)]);

            std::map<ExpectationModelKey, const ExpectationModel*> models;
            for (const FusionFeature& f : lk_set.items)
                if (!f.is_score)
                    models[{f.rating_category, f.dimension}] =
                        model_for(f.rating_category, f.dimension);

            const std::uint64_t fold_seed = derive_seed(config.seed, 0xF05F, ci);
            const FusionMatrix base_matrix =
                build_fusion_features(dataset.scores, detector, category, {}, balanced,
                                      FusionFeatureSet::baseline());
            const FusionTrainResult base = train_fusion(base_matrix, config.k_folds, fold_seed,
                                                        config.fusion_l2, config.fusion_loss);
            const FusionMatrix aug_matrix = build_fusion_features(
                dataset.scores, detector, category, models, balanced, lk_set);
            const FusionTrainResult aug = train_fusion(aug_matrix, config.k_folds, fold_seed,
                                                       config.fusion_l2, config.fusion_loss);

            TransferRow row;
            row.category = category;
            row.n_scenes = base_matrix.n();
            row.baseline_accuracy = base.cv_accuracy;
            row.augmented_accuracy = aug.cv_accuracy;
            row.benefit = aug.cv_accuracy - base.cv_accuracy;
            row.association =
                average_association_index(*dataset.presence, category, config.categories);
            transfer_rows.push_back(row);
            benefits.push_back(row.benefit);
            associations.push_back(row.association);
            baselines.push_back(row.baseline_accuracy);
        }
        const TransferReport stats =
            transfer_analysis(benefits, associations, baselines, config.transfer_permutations,
                              derive_seed(config.seed, 0x7AA5));
        write_report((fs::path(config.out_dir) / "transfer.json").string(),
                     transfer_report_json(transfer_rows, stats, resolved));
    }
}

void cmd_report(const RunConfig& config) {
    require(fs::exists(config.out_dir), ErrorCode::IoError,
            "output directory does not exist: '" + config.out_dir + "'");
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(config.out_dir))
        if (entry.is_regular_file()) files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());

    bool rendered = false;
    for (const std::string& path : files) {
        const std::string name = fs::path(path).filename().string();
        if (name.rfind("table_", 0) == 0 && name.size() > 5 &&
            name.substr(name.size() - 5) == ".json") {
            std::cout << render_spec_table_text(read_file(path)) << "\n";
            rendered = true;
        } else if (name == "accuracy_table.json") {
            std::cout << render_accuracy_table_text(read_file(path)) << "\n";
            rendered = true;
        }
    }
    if (!rendered) std::cout << "no renderable reports in '" << config.out_dir << "'\n";
}

int run_command(const std::string& command, const RunConfig& config, std::string& err) {
    try {
        if (command == "synth")
            cmd_synth(config);
        else if (command == "fit")
            cmd_fit(config);
        else if (command == "evaluate")
            cmd_evaluate(config);
        else if (command == "augment")
            cmd_augment(config);
        else if (command == "report")
            cmd_report(config);
        else {
            err = "unknown command '" + command + "'";
            return kExitConfig;
        }
        return kExitOk;
    } catch (const Error& e) {
        err = std::string(error_code_name(e.code())) + ": " + e.what();
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err = e.what();
        return 1;
    }
}

}  // namespace ctxprior
