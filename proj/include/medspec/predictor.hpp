#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "medspec/error.hpp"
#include "medspec/model_io.hpp"

namespace medspec {

/// Input text has no tokens left after normalization.
class NoUsableTokens : public DataError {
public:
    NoUsableTokens() : DataError("no usable tokens") {}
};

struct RankedLabel {
    std::string specialty;
    double probability = 0.0;
};

struct Prediction {
    std::vector<RankedLabel> ranked;  // descending probability, ties by class id
};

/// Immutable after construction; safe to share across threads.
class Predictor {
public:
    explicit Predictor(ModelBundle model) : model_(std::move(model)) {}
    static Predictor from_file(const std::filesystem::path& path) { return Predictor(load_model(path)); }

    /// Full distribution over all classes, in class-id order.
    std::vector<double> distribution(std::string_view text) const;

    /// Top `top_k` classes (clamped to the class count). top_k must be >= 1.
    Prediction predict(std::string_view text, std::size_t top_k = 3) const;

    std::size_t classes() const { return model_.catalog.size(); }
    const ModelBundle& model() const { return model_; }

private:
    ModelBundle model_;
};

/// {"predictions": [{"specialty": ..., "probability": ...}, ...]}
nlohmann::json to_json(const Prediction& prediction);

}  // namespace medspec
