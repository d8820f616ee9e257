// medspec: medical specialty classification from keywords or transcriptions.
//
//   medspec inspect     --config cfg
//   medspec cv          --config cfg [--input-field transcription] [--seed 7] [--<key> value ...]
//   medspec train-final --config cfg
//   medspec predict     --model out/model.json "chest pain, dyspnea" [--top-k 3]
//   medspec serve       --model out/model.json [--port 8080]

#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "medspec/commands.hpp"
#include "medspec/config.hpp"

namespace {

struct PipelineOptions {
    std::string config_file;
    std::map<std::string, std::string> overrides;
};

void add_pipeline_options(CLI::App& cmd, PipelineOptions& opts) {
    cmd.add_option("--config", opts.config_file, "key = value configuration file")->check(CLI::ExistingFile);
    for (const auto& key : medspec::config_keys()) {
        std::string names = "--" + key.name;
        if (key.name == "input_field") {
            names += ",--input-field";
        }
        cmd.add_option_function<std::string>(
            names, [&opts, name = key.name](const std::string& v) { opts.overrides[name] = v; }, key.help);
    }
}

medspec::PipelineConfig resolve(const PipelineOptions& opts) {
    std::optional<std::filesystem::path> file;
    if (!opts.config_file.empty()) {
        file = opts.config_file;
    }
    // Overrides apply in key order; the map is keyed by name so that is deterministic.
    return medspec::resolve_config(file, {opts.overrides.begin(), opts.overrides.end()});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Medical specialty classification with an embedding + MLP network"};
    app.require_subcommand(1);

    PipelineOptions inspect_opts, cv_opts, final_opts;
    auto* inspect = app.add_subcommand("inspect", "class histogram of the dataset");
    add_pipeline_options(*inspect, inspect_opts);
    auto* cv = app.add_subcommand("cv", "stratified k-fold cross-validation with reports");
    add_pipeline_options(*cv, cv_opts);
    auto* final_fit = app.add_subcommand("train-final", "fit one model on the whole corpus and save it");
    add_pipeline_options(*final_fit, final_opts);

    std::string model_path;
    std::string text;
    std::size_t top_k = 3;
    auto* predict = app.add_subcommand("predict", "rank specialties for a keyword string");
    predict->add_option("--model,--model_path", model_path, "model file")->required();
    predict->add_option("text", text, "keywords or transcription text")->required();
    predict->add_option("--top-k,--top_k", top_k, "number of ranked specialties")->check(CLI::PositiveNumber);

    std::string host = "127.0.0.1";
    int port = 8080;
    auto* serve = app.add_subcommand("serve", "HTTP prediction service");
    serve->add_option("--model,--model_path", model_path, "model file")->required();
    serve->add_option("--host", host, "bind address");
    serve->add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? medspec::kExitOk : medspec::kExitConfig;
    }

    try {
        if (*inspect) {
            medspec::cmd_inspect(resolve(inspect_opts), std::cout);
        } else if (*cv) {
            medspec::cmd_cv(resolve(cv_opts), std::cerr);
        } else if (*final_fit) {
            medspec::cmd_train_final(resolve(final_opts), std::cerr);
        } else if (*predict) {
            medspec::cmd_predict(model_path, text, top_k, std::cout);
        } else if (*serve) {
            medspec::cmd_serve(model_path, host, port, std::cerr);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return medspec::exit_code_for(e);
    }
    return medspec::kExitOk;
}
