#include "medspec/commands.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>

#include <json.hpp>

#include "medspec/error.hpp"
#include "medspec/model_io.hpp"
#include "medspec/predictor.hpp"
#include "medspec/report.hpp"
#include "medspec/service.hpp"

namespace medspec {

namespace {

struct LoadedData {
    std::vector<Record> records;
    LabelCatalog catalog;
    StopwordList stopwords;
};

LoadedData load_inputs(const PipelineConfig& config) {
    LoadedData d;
    d.stopwords = StopwordList::load(config.stopwords_path);
    d.records = load_corpus(config.dataset_path);
    if (d.records.empty()) {
        throw DataError("dataset '" + config.dataset_path.string() + "' has no records");
    }
    d.catalog = build_catalog(d.records);
    return d;
}

std::vector<Record> filtered(const LoadedData& d, InputField field) {
    auto kept = drop_missing(d.records, field);
    if (kept.empty()) {
        throw DataError("no records have a non-empty '" + std::string(to_string(field)) + "' field");
    }
    return kept;
}

/// Removes every file written so far unless release() is called.
class OutputGuard {
public:
    explicit OutputGuard(std::filesystem::path dir) : dir_(std::move(dir)) {}
    OutputGuard(const OutputGuard&) = delete;
    OutputGuard& operator=(const OutputGuard&) = delete;
    ~OutputGuard() {
        if (released_) {
            return;
        }
        std::error_code ec;
        for (const auto& f : files_) {
            std::filesystem::remove(f, ec);
        }
    }

    void write(const std::string& name, const std::string& content) {
        const auto path = dir_ / name;
        const auto tmp = dir_ / (name + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << content;
            if (!out) {
                throw DataError("failed writing '" + path.string() + "'");
            }
        }
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec);
        if (ec) {
            std::filesystem::remove(tmp, ec);
            throw DataError("failed writing '" + path.string() + "'");
        }
        files_.push_back(path);
    }

    std::vector<std::filesystem::path> release() {
        released_ = true;
        return files_;
    }

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> files_;
    bool released_ = false;
};

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) != nullptr) {
        return kExitConfig;
    }
    if (dynamic_cast<const DataError*>(&e) != nullptr) {
        return kExitData;
    }
    return kExitRuntime;
}

InspectSummary inspect_corpus(const std::vector<Record>& records) {
    InspectSummary s;
    s.total = records.size();
    const auto hist = class_histogram(records);
    s.counts.assign(hist.begin(), hist.end());
    std::stable_sort(s.counts.begin(), s.counts.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (std::size_t i = 0; i < std::min<std::size_t>(10, s.counts.size()); ++i) {
        s.top10 += s.counts[i].second;
    }
    return s;
}

InspectSummary cmd_inspect(const PipelineConfig& config, std::ostream& out) {
    const auto records = load_corpus(config.dataset_path);
    if (records.empty()) {
        throw DataError("dataset '" + config.dataset_path.string() + "' has no records");
    }
    const auto s = inspect_corpus(records);
    std::size_t width = 0;
    for (const auto& [label, n] : s.counts) {
        width = std::max(width, label.size());
    }
    out << "records: " << s.total << "\n"
        << "classes: " << s.counts.size() << "\n\n";
    for (const auto& [label, n] : s.counts) {
        out << std::left << std::setw(static_cast<int>(width)) << label << ' ' << std::right
            << std::setw(6) << n << '\n';
    }
    const double total = static_cast<double>(s.total);
    out << '\n' << std::fixed << std::setprecision(4)
        << "top-10 classes: " << s.top10 << " (" << static_cast<double>(s.top10) / total << ")\n"
        << "Other: " << s.total - s.top10 << " (" << static_cast<double>(s.total - s.top10) / total << ")\n";
    out.unsetf(std::ios::fixed);
    return s;
}

CvOutputs cmd_cv(const PipelineConfig& config, std::ostream& log) {
    config.validate();
    const auto tcfg = config.resolved_train();
    const LoadedData data = load_inputs(config);
    // Folds come from the unfiltered corpus so keyword and transcription runs
    // with one seed share partitions.
    const FoldPlan plan = stratified_kfold(data.records, data.catalog, config.folds, tcfg.seed);
    const auto corpus = filtered(data, tcfg.input_field);
    log << "cv: " << corpus.size() << " records with " << to_string(tcfg.input_field) << ", "
        << data.catalog.size() << " classes, L=" << tcfg.seq_len << ", " << config.folds << " folds\n";

    CvOutputs outputs;
    outputs.result = train::run_cv(corpus, tcfg, data.catalog, data.stopwords, config.folds, plan);

    std::filesystem::create_directories(config.output_dir);
    OutputGuard guard(config.output_dir);
    for (std::size_t f = 0; f < outputs.result.folds.size(); ++f) {
        guard.write("metrics_fold_" + std::to_string(f) + ".csv",
                    report::fold_csv(f, outputs.result.folds[f].metrics, data.catalog));
    }
    guard.write("metrics_aggregate.csv", report::aggregate_csv(outputs.result));
    const std::string hash = data.stopwords.content_hash();
    guard.write("report.md", report::markdown_report(config, hash, corpus.size(), data.catalog, outputs.result));

    nlohmann::json meta;
    meta["command"] = "cv";
    meta["finished_at"] = utc_timestamp();
    meta["stopwords_sha256"] = hash;
    for (const auto& [k, v] : config_entries(config)) {
        meta["config"][k] = v;
    }
    guard.write("run_meta.json", meta.dump(2) + "\n");
    outputs.files = guard.release();

    log << report::metrics_table(outputs.result.aggregate);
    return outputs;
}

void cmd_train_final(const PipelineConfig& config, std::ostream& log) {
    config.validate();
    const auto tcfg = config.resolved_train();
    const LoadedData data = load_inputs(config);
    const auto corpus = filtered(data, tcfg.input_field);

    ModelBundle bundle;
    bundle.vocab = build_vocab(train::tokenize(corpus, tcfg.input_field, data.stopwords), tcfg.min_count);
    bundle.catalog = data.catalog;
    bundle.stopwords = data.stopwords;
    bundle.input_field = tcfg.input_field;
    // Fold id `folds` keeps this RNG stream apart from the cv folds 0..k-1.
    auto model = train::train_fold(corpus, tcfg, bundle.vocab, bundle.catalog, data.stopwords, config.folds);
    bundle.params = std::move(model.params);

    if (config.model_path.has_parent_path()) {
        std::filesystem::create_directories(config.model_path.parent_path());
    }
    save_model(bundle, config.model_path);
    log << "train-final: " << corpus.size() << " records, vocab " << bundle.vocab.size() << ", best epoch "
        << model.history.best_epoch << " of " << model.history.stopped_epoch << ", saved "
        << config.model_path.string() << '\n';
}

void cmd_predict(const std::filesystem::path& model_path, const std::string& text, std::size_t top_k,
                 std::ostream& out) {
    const auto predictor = Predictor::from_file(model_path);
    out << to_json(predictor.predict(text, top_k)).dump() << '\n';
}

void cmd_serve(const std::filesystem::path& model_path, const std::string& host, int port,
               std::ostream& log) {
    auto predictor = std::make_shared<const Predictor>(Predictor::from_file(model_path));
    httplib::Server server;
    PredictionService service(predictor);
    service.mount(server);
    log << "serving " << predictor->classes() << " classes on " << host << ':' << port << '\n';
    log.flush();
    if (!server.listen(host, port)) {
        throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
    }
}

}  // namespace medspec
