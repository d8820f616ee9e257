#pragma once

#include <exception>
#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "medspec/config.hpp"
#include "medspec/train.hpp"

namespace medspec {

/// Stable CLI exit codes.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitData = 2, kExitRuntime = 3 };

/// Maps an in-flight exception onto an exit code.
int exit_code_for(const std::exception& e);

struct InspectSummary {
    std::size_t total = 0;
    /// Descending by count, ties by label.
    std::vector<std::pair<std::string, std::size_t>> counts;
    std::size_t top10 = 0;  // records in the ten most frequent classes
};

InspectSummary inspect_corpus(const std::vector<Record>& records);

/// Class histogram plus the top-10 vs. Other split. Throws DataError on an
/// empty corpus.
InspectSummary cmd_inspect(const PipelineConfig& config, std::ostream& out);

struct CvOutputs {
    train::CvResult result;
    std::vector<std::filesystem::path> files;
};

/// Runs cross-validation and writes metrics_fold_<i>.csv, metrics_aggregate.csv,
/// report.md and run_meta.json into config.output_dir. Files written before a
/// failure are removed.
CvOutputs cmd_cv(const PipelineConfig& config, std::ostream& log);

/// Fits one model on the whole filtered corpus and saves it to config.model_path.
void cmd_train_final(const PipelineConfig& config, std::ostream& log);

/// Prints the prediction document (same bytes as the HTTP /predict body).
void cmd_predict(const std::filesystem::path& model_path, const std::string& text, std::size_t top_k,
                 std::ostream& out);

/// Blocks serving /predict and /health until the process ends.
void cmd_serve(const std::filesystem::path& model_path, const std::string& host, int port,
               std::ostream& log);

}  // namespace medspec
