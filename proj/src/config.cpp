#include "medspec/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>

#include "medspec/error.hpp"

namespace medspec {

namespace {

std::size_t parse_size(const std::string& key, const std::string& text) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + text + "'");
    }
    return value;
}

double parse_double(const std::string& key, const std::string& text) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
    }
    return value;
}

struct KeySpec {
    ConfigKey key;
    std::function<void(PipelineConfig&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
KeySpec size_key(std::string name, std::string help, T train::TrainConfig::*member) {
    return {{name, std::move(help)},
            [name, member](PipelineConfig& c, const std::string& v) {
                c.train.*member = static_cast<T>(parse_size(name, v));
            },
            [member](const PipelineConfig& c) { return std::to_string(c.train.*member); }};
}

KeySpec double_key(std::string name, std::string help, double train::TrainConfig::*member) {
    return {{name, std::move(help)},
            [name, member](PipelineConfig& c, const std::string& v) { c.train.*member = parse_double(name, v); },
            [member](const PipelineConfig& c) { return format_double(c.train.*member); }};
}

KeySpec path_key(std::string name, std::string help, std::filesystem::path PipelineConfig::*member) {
    return {{name, std::move(help)},
            [member](PipelineConfig& c, const std::string& v) { c.*member = v; },
            [member](const PipelineConfig& c) { return (c.*member).string(); }};
}

const std::vector<KeySpec>& key_specs() {
    static const std::vector<KeySpec> specs = [] {
        std::vector<KeySpec> s;
        s.push_back(path_key("dataset_path", "mtsamples-format CSV file", &PipelineConfig::dataset_path));
        s.push_back(path_key("stopwords_path", "stopword list, one word per line", &PipelineConfig::stopwords_path));
        s.push_back(path_key("output_dir", "directory for cv reports", &PipelineConfig::output_dir));
        s.push_back(path_key("model_path", "model file written by train-final", &PipelineConfig::model_path));
        s.push_back({{"input_field", "keywords | transcription"},
                     [](PipelineConfig& c, const std::string& v) { c.train.input_field = parse_input_field(v); },
                     [](const PipelineConfig& c) { return std::string(to_string(c.train.input_field)); }});
        s.push_back({{"folds", "number of cross-validation folds"},
                     [](PipelineConfig& c, const std::string& v) { c.folds = parse_size("folds", v); },
                     [](const PipelineConfig& c) { return std::to_string(c.folds); }});
        s.push_back({{"seed", "seed for folds, initialization and shuffling"},
                     [](PipelineConfig& c, const std::string& v) { c.train.seed = parse_size("seed", v); },
                     [](const PipelineConfig& c) { return std::to_string(c.train.seed); }});
        s.push_back({{"seq_len", "tokens per example; 'auto' = 15 for keywords, 120 for transcription"},
                     [](PipelineConfig& c, const std::string& v) {
                         if (v == "auto") {
                             c.seq_len.reset();
                         } else {
                             c.seq_len = parse_size("seq_len", v);
                         }
                     },
                     [](const PipelineConfig& c) {
                         return c.seq_len ? std::to_string(*c.seq_len) : std::string("auto");
                     }});
        s.push_back(size_key("max_epochs", "epoch cap", &train::TrainConfig::max_epochs));
        s.push_back(size_key("patience", "epochs without validation improvement before stopping",
                             &train::TrainConfig::patience));
        s.push_back(size_key("batch_size", "mini-batch size (>= 2)", &train::TrainConfig::batch_size));
        s.push_back(double_key("learning_rate", "Adam step size", &train::TrainConfig::learning_rate));
        s.push_back(double_key("adam_beta1", "Adam first-moment decay", &train::TrainConfig::adam_beta1));
        s.push_back(double_key("adam_beta2", "Adam second-moment decay", &train::TrainConfig::adam_beta2));
        s.push_back(double_key("adam_epsilon", "Adam denominator epsilon", &train::TrainConfig::adam_epsilon));
        s.push_back(double_key("validation_fraction", "stratified share of the training split held out for early stopping",
                               &train::TrainConfig::validation_fraction));
        s.push_back(double_key("min_delta", "validation-loss decrease that counts as improvement",
                               &train::TrainConfig::min_delta));
        s.push_back(size_key("embed_dim", "embedding dimension", &train::TrainConfig::embed_dim));
        s.push_back(size_key("hidden1", "width of the batch-normalized dense layer", &train::TrainConfig::hidden1));
        s.push_back(size_key("min_count", "minimum training-token frequency kept in the vocabulary",
                             &train::TrainConfig::min_count));
        s.push_back({{"bn_epsilon", "batchnorm variance epsilon"},
                     [](PipelineConfig& c, const std::string& v) { c.train.batchnorm.epsilon = parse_double("bn_epsilon", v); },
                     [](const PipelineConfig& c) { return format_double(c.train.batchnorm.epsilon); }});
        s.push_back({{"bn_momentum", "batchnorm running-statistic momentum"},
                     [](PipelineConfig& c, const std::string& v) { c.train.batchnorm.momentum = parse_double("bn_momentum", v); },
                     [](const PipelineConfig& c) { return format_double(c.train.batchnorm.momentum); }});
        s.push_back(size_key("jobs", "folds trained in parallel", &train::TrainConfig::jobs));
        return s;
    }();
    return specs;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

train::TrainConfig PipelineConfig::resolved_train() const {
    train::TrainConfig t = train;
    t.seq_len = seq_len.value_or(default_sequence_length(train.input_field == InputField::keywords));
    return t;
}

void PipelineConfig::validate() const {
    if (folds < 2) {
        throw ConfigError("folds must be >= 2");
    }
    resolved_train().validate();
}

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> k;
        for (const auto& s : key_specs()) {
            k.push_back(s.key);
        }
        return k;
    }();
    return keys;
}

void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value) {
    for (const auto& s : key_specs()) {
        if (s.key.name == key) {
            s.set(config, value);
            return;
        }
    }
    throw ConfigError("unknown configuration key '" + key + "'");
}

void apply_config_file(PipelineConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path.string() + "'");
    }
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string text = trim(line);
        if (text.empty() || text.front() == '#') {
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(number) + ": expected 'key = value'");
        }
        try {
            set_config_value(config, trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(number) + ": " + e.what());
        }
    }
}

PipelineConfig resolve_config(const std::optional<std::filesystem::path>& file,
                              const std::vector<std::pair<std::string, std::string>>& overrides) {
    PipelineConfig config;
    if (file) {
        apply_config_file(config, *file);
    }
    for (const auto& [key, value] : overrides) {
        set_config_value(config, key, value);
    }
    config.validate();
    return config;
}

std::vector<std::pair<std::string, std::string>> config_entries(const PipelineConfig& config) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& s : key_specs()) {
        out.emplace_back(s.key.name, s.get(config));
    }
    return out;
}

std::string render_config(const PipelineConfig& config) {
    std::string out;
    for (const auto& [k, v] : config_entries(config)) {
        out += k + " = " + v + "\n";
    }
    return out;
}

}  // namespace medspec
