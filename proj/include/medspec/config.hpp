#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "medspec/train.hpp"

namespace medspec {

struct PipelineConfig {
    std::filesystem::path dataset_path = "data/mtsamples.csv";
    std::filesystem::path stopwords_path = "data/stopwords.txt";
    std::filesystem::path output_dir = "out";
    std::filesystem::path model_path = "out/model.json";
    std::size_t folds = 5;
    /// Unset means the length bound to the input field (15 / 120).
    std::optional<std::size_t> seq_len;
    train::TrainConfig train;

    /// TrainConfig with seq_len resolved from the input field.
    train::TrainConfig resolved_train() const;
    void validate() const;
};

/// A documented configuration key. Every key is accepted both in the config
/// file and as a `--<name>` command-line override.
struct ConfigKey {
    std::string name;
    std::string help;
};

const std::vector<ConfigKey>& config_keys();

/// Applies one key. Throws ConfigError for unknown keys or unparsable values.
void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value);

/// Parses `key = value` lines; blank lines and `#` comments are ignored.
void apply_config_file(PipelineConfig& config, const std::filesystem::path& path);

/// Defaults, then the file (if any), then overrides in order.
PipelineConfig resolve_config(const std::optional<std::filesystem::path>& file,
                              const std::vector<std::pair<std::string, std::string>>& overrides);

/// Every key with its resolved value, in config_keys() order.
std::vector<std::pair<std::string, std::string>> config_entries(const PipelineConfig& config);

std::string render_config(const PipelineConfig& config);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

}  // namespace medspec
