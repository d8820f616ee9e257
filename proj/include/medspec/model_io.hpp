#pragma once

#include <filesystem>

#include "medspec/corpus.hpp"
#include "medspec/nn.hpp"
#include "medspec/textprep.hpp"

namespace medspec {

inline constexpr int kModelFormatVersion = 1;

/// Everything needed to run inference on raw text.
struct ModelBundle {
    nn::ModelParams params;
    Vocabulary vocab;
    LabelCatalog catalog;
    StopwordList stopwords;
    InputField input_field = InputField::keywords;
};

/// Writes a self-describing JSON document. Doubles are emitted in shortest
/// round-trip form, so load_model(save_model(m)) is bit-exact.
void save_model(const ModelBundle& model, const std::filesystem::path& path);

/// Throws ModelFormatError on parse failure, version mismatch, or tensor shapes
/// inconsistent with the declared dimensions.
ModelBundle load_model(const std::filesystem::path& path);

}  // namespace medspec
