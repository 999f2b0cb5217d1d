#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ctxprior/cli.hpp"
#include "ctxprior/config.hpp"
#include "tmpdir.hpp"

using namespace ctxprior;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig config_from(std::map<std::string, std::string> values) {
    KeyValueFile kv;
    kv.values = std::move(values);
    return parse_run_config(kv);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("key-value files parse comments, blanks and trimming") {
    const KeyValueFile kv = KeyValueFile::parse(
        "# leading comment\n"
        "\n"
        "seed = 42\n"
        "  out_dir =  runs/a  \n"
        "categories=car,person\n");
    CHECK(kv.values.size() == 3);
    CHECK(kv.values.at("seed") == "42");
    CHECK(kv.values.at("out_dir") == "runs/a");
    CHECK(kv.values.at("categories") == "car,person");

    CHECK_THROWS_AS(KeyValueFile::parse("seed 42\n"), Error);          // no '='
    CHECK_THROWS_AS(KeyValueFile::parse("= 42\n"), Error);             // empty key
    CHECK_THROWS_AS(KeyValueFile::parse("a = 1\na = 2\n"), Error);     // duplicate
    CHECK_THROWS_AS(KeyValueFile::load("/nonexistent/file.conf"), Error);
}

TEST_CASE("run config parsing: defaults, lists and refusals") {
    const RunConfig cfg = config_from({{"seed", "9"}});
    CHECK(cfg.seed == 9);
    CHECK(cfg.pca_dims == 20);
    CHECK(cfg.n_splits == 1000);
    CHECK(cfg.categories == std::vector<std::string>{"car", "person"});
    CHECK(cfg.synth.seed == 9);  // seed flows into the generator config

    const RunConfig lists = config_from({{"seed", "1"},
                                         {"categories", "car , person , dog"},
                                         {"dimensions", "likelihood, scale"},
                                         {"specs", "NC, T"},
                                         {"pca_scope", "global"},
                                         {"fusion_loss", "margin"},
                                         {"standardize", "false"},
                                         {"synth_scenes", "99"},
                                         {"synth_reliability", "0.8"},
                                         {"detectors", "cnn_a,cnn_b"}});
    CHECK(lists.categories == std::vector<std::string>{"car", "person", "dog"});
    REQUIRE(lists.dimensions.size() == 2);
    CHECK(lists.dimensions[1] == RatingDimension::Scale);
    REQUIRE(lists.specs.size() == 2);
    CHECK(lists.specs[0].to_string() == "NC");
    CHECK(lists.pca_scope == PcaScope::Global);
    CHECK(lists.fusion_loss == FusionLoss::Margin);
    CHECK(!lists.standardize);
    CHECK(lists.synth.n_scenes == 99);
    CHECK(lists.synth.reliability == 0.8);
    CHECK(lists.detectors == std::vector<std::string>{"cnn_a", "cnn_b"});

    CHECK_THROWS_AS(config_from({}), Error);  // seed is mandatory
    try {
        config_from({{"seed", "1"}, {"no_such_key", "x"}});
        FAIL("expected unknown-key refusal");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidConfig);
        CHECK(std::string(e.what()).find("no_such_key") != std::string::npos);
    }
    CHECK_THROWS_AS(config_from({{"seed", "nope"}}), Error);
    CHECK_THROWS_AS(config_from({{"seed", "1"}, {"k_folds", "1"}}), Error);
    CHECK_THROWS_AS(config_from({{"seed", "1"}, {"train_frac", "1.5"}}), Error);
    CHECK_THROWS_AS(config_from({{"seed", "1"}, {"specs", "XY"}}), Error);
    CHECK_THROWS_AS(config_from({{"seed", "1"}, {"dimensions", "sideways"}}), Error);
    CHECK_THROWS_AS(config_from({{"seed", "1"}, {"jobs", "0"}}), Error);
}

TEST_CASE("resolved config echo is flat, complete and jobs-free") {
    const RunConfig cfg = config_from({{"seed", "5"}, {"jobs", "4"}});
    const auto resolved = cfg.resolved();
    CHECK(resolved.at("seed") == "5");
    CHECK(resolved.at("pca_dims") == "20");
    CHECK(resolved.count("synth_scenes") == 1);
    // parallelism never changes results, so it is not part of the echo
    CHECK(resolved.count("jobs") == 0);
}

TEST_CASE("fusion feature tokens") {
    const std::vector<std::string> cats = {"car", "person"};

    const FusionFeatureSet baseline = parse_feature_set_token("baseline", "car", cats);
    REQUIRE(baseline.size() == 1);
    CHECK(baseline.items[0].is_score);

    const FusionFeatureSet lklhd = parse_feature_set_token("lklhd", "car", cats);
    REQUIRE(lklhd.size() == 2);
    CHECK(lklhd.items[1].rating_category == "car");
    CHECK(lklhd.items[1].dimension == RatingDimension::Likelihood);

    const FusionFeatureSet triple = parse_feature_set_token("lklhd+ylocn+scale", "person", cats);
    REQUIRE(triple.size() == 4);
    CHECK(triple.items[1].dimension == RatingDimension::Likelihood);
    CHECK(triple.items[2].dimension == RatingDimension::YPos);
    CHECK(triple.items[3].dimension == RatingDimension::Scale);
    CHECK(triple.items[3].rating_category == "person");

    CHECK(parse_feature_set_token("all", "car", cats).size() == 11);
    CHECK(parse_feature_set_token("aspect", "car", cats).size() == 2);

    try {
        parse_feature_set_token("lklhd+sideways", "car", cats);
        FAIL("expected unknown-atom refusal");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidConfig);
        CHECK(std::string(e.what()).find("sideways") != std::string::npos);
    }
    try {
        parse_feature_set_token("lklhd+lklhd", "car", cats);
        FAIL("expected duplicate refusal");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DuplicateEntry);
    }
    CHECK_THROWS_AS(parse_feature_set_token("", "car", cats), Error);
}

TEST_CASE("error codes map to documented exit codes") {
    CHECK(exit_code_for(ErrorCode::InvalidConfig) == kExitConfig);
    CHECK(exit_code_for(ErrorCode::InvalidK) == kExitConfig);
    CHECK(exit_code_for(ErrorCode::IoError) == kExitData);
    CHECK(exit_code_for(ErrorCode::ParseError) == kExitData);
    CHECK(exit_code_for(ErrorCode::UnknownSceneReference) == kExitData);
    CHECK(exit_code_for(ErrorCode::SingularSystem) == kExitNumeric);
    CHECK(exit_code_for(ErrorCode::NonConvergence) == kExitNumeric);
    CHECK(exit_code_for(ErrorCode::ConstantInput) == kExitNumeric);
}

TEST_CASE("synth, fit, evaluate, augment and report chain end to end") {
    TempDir dir("chain");
    const std::string out = (dir.path / "out").string();
    std::string err;

    const std::map<std::string, std::string> synth_keys = {
        {"seed", "77"},          {"out_dir", out},
        {"synth_scenes", "60"},  {"synth_subjects", "3"},
        {"synth_dims_target", "6"},  {"synth_dims_nontarget", "6"},
        {"synth_dims_coarse", "8"},  {"synth_rank_target", "2"},
        {"synth_rank_nontarget", "2"}, {"synth_rank_coarse", "2"},
        {"synth_detection_scenes", "120"}, {"synth_context_signal", "1.2"}};

    REQUIRE(run_command("synth", config_from(synth_keys), err) == kExitOk);
    const fs::path synth_dir = dir.path / "out" / "synth";
    for (const char* name : {"features_target.csv", "features_nontarget.csv",
                             "features_coarse.csv", "ratings.csv", "scores.csv",
                             "ground_truth.json", "presence.json", "scene_meta.csv",
                             "dataset.conf"})
        CHECK(fs::exists(synth_dir / name));

    // chain the emitted fragment into the downstream commands
    auto chained = [&](std::map<std::string, std::string> extra) {
        KeyValueFile kv = KeyValueFile::load((synth_dir / "dataset.conf").string());
        for (auto& [key, value] : extra) kv.values[key] = value;
        return parse_run_config(kv);
    };
    const std::map<std::string, std::string> shared = {
        {"seed", "77"},       {"out_dir", out},        {"specs", "NC"},
        {"pca_dims", "2"},    {"k_folds", "3"},        {"n_splits", "25"},
        {"ceiling_resamples", "25"},                   {"dimensions", "likelihood,scale"},
        {"fusion_feature_sets", "baseline,lklhd"},     {"transfer_permutations", "50"}};

    REQUIRE(run_command("fit", chained(shared), err) == kExitOk);
    const fs::path model_path = dir.path / "out" / "model_car_likelihood_NC.json";
    CHECK(fs::exists(model_path));
    CHECK(fs::exists(dir.path / "out" / "model_person_scale_NC.json"));
    CHECK(fs::exists(dir.path / "out" / "fit_summary.json"));

    // refitting into a fresh directory reproduces the model bytes
    auto refit = shared;
    refit["models_dir"] = (dir.path / "models2").string();
    REQUIRE(run_command("fit", chained(refit), err) == kExitOk);
    CHECK(slurp(dir.path / "models2" / "model_car_likelihood_NC.json") == slurp(model_path));

    std::map<std::string, std::string> eval_keys = shared;
    eval_keys["specs"] = "T,NC";
    REQUIRE(run_command("evaluate", chained(eval_keys), err) == kExitOk);
    CHECK(fs::exists(dir.path / "out" / "table_car_likelihood.json"));
    CHECK(fs::exists(dir.path / "out" / "table_car_likelihood.csv"));
    CHECK(fs::exists(dir.path / "out" / "table_person_scale.json"));
    CHECK(fs::exists(dir.path / "out" / "nontarget_weights.json"));

    REQUIRE(run_command("augment", chained(shared), err) == kExitOk);
    CHECK(fs::exists(dir.path / "out" / "accuracy_table.json"));
    CHECK(fs::exists(dir.path / "out" / "accuracy_table.csv"));
    CHECK(fs::exists(dir.path / "out" / "roc_cnn_a_car_baseline.csv"));
    CHECK(fs::exists(dir.path / "out" / "fusion_cnn_a_person_lklhd.json"));

    // report renders the artifacts to stdout
    std::ostringstream captured;
    std::streambuf* old = std::cout.rdbuf(captured.rdbuf());
    const int report_rc = run_command("report", chained(shared), err);
    std::cout.rdbuf(old);
    REQUIRE(report_rc == kExitOk);
    CHECK(captured.str().find("car") != std::string::npos);
    CHECK(captured.str().find("baseline") != std::string::npos);
}

TEST_CASE("missing data files exit with the data code and name the path") {
    TempDir dir("missing");
    std::string err;
    const RunConfig cfg = config_from({{"seed", "3"},
                                       {"out_dir", (dir.path / "out").string()},
                                       {"features_target", (dir.path / "absent.csv").string()},
                                       {"features_nontarget", (dir.path / "absent.csv").string()},
                                       {"features_coarse", (dir.path / "absent.csv").string()},
                                       {"ratings", (dir.path / "absent.csv").string()}});
    CHECK(run_command("fit", cfg, err) == kExitData);
    CHECK(err.find("absent.csv") != std::string::npos);
}

TEST_CASE("unknown commands are config errors") {
    std::string err;
    CHECK(run_command("frobnicate", config_from({{"seed", "1"}}), err) == kExitConfig);
    CHECK(err.find("frobnicate") != std::string::npos);
}

}  // TEST_SUITE
