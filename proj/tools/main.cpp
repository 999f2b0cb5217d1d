#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "ctxprior/cli.hpp"
#include "ctxprior/config.hpp"
#include "ctxprior/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"context-prior toolkit: expectation models, evaluation tables, detector fusion"};
    app.require_subcommand(1);

    std::string config_path;
    std::string seed_text;
    std::string out_dir;
    std::string models_dir;
    int jobs = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "run configuration file (key = value lines)");
        sub->add_option("--seed", seed_text, "override the run seed");
        sub->add_option("-o,--out", out_dir, "override the output directory");
        sub->add_option("--models", models_dir, "override the model directory");
        sub->add_option("-j,--jobs", jobs, "worker threads for the split protocol");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset with planted structure");
    CLI::App* fit = app.add_subcommand("fit", "fit expectation models and write them to disk");
    CLI::App* evaluate =
        app.add_subcommand("evaluate", "channel-subset tables, ceilings and weight reports");
    CLI::App* augment = app.add_subcommand("augment", "detector fusion, ROC and transfer reports");
    CLI::App* report =
        app.add_subcommand("report", "render the JSON reports in the output directory as text");
    for (CLI::App* sub : {synth, fit, evaluate, augment, report}) add_common(sub);

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        ctxprior::KeyValueFile kv;
        if (!config_path.empty()) kv = ctxprior::KeyValueFile::load(config_path);
        if (!seed_text.empty()) kv.values["seed"] = seed_text;
        if (!out_dir.empty()) kv.values["out_dir"] = out_dir;
        if (!models_dir.empty()) kv.values["models_dir"] = models_dir;
        if (jobs > 0) kv.values["jobs"] = std::to_string(jobs);
        // Rendering existing reports does not consume randomness.
        if (command == "report" && !kv.values.count("seed")) kv.values["seed"] = "0";

        const ctxprior::RunConfig config = ctxprior::parse_run_config(kv);
        std::string err;
        const int code = ctxprior::run_command(command, config, err);
        if (code != ctxprior::kExitOk) std::cerr << "error: " << err << "\n";
        return code;
    } catch (const ctxprior::Error& e) {
        std::cerr << "error: " << ctxprior::error_code_name(e.code()) << ": " << e.what() << "\n";
        return ctxprior::exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
