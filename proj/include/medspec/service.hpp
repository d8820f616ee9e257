#pragma once

#include <memory>

// Eigen must precede httplib: <resolv.h> defines a `_res` macro that breaks
// Eigen's product kernels.
#include "medspec/predictor.hpp"

#include <httplib.h>

namespace medspec {

/// Read-only prediction endpoints over one immutable model:
///   POST /predict  {"keywords": str, "top_k": int = 3} -> {"predictions": [...]}
///   GET  /health   -> {"status": "ok", "classes": C}
/// Malformed bodies get 400, text without usable tokens 422, anything else 500.
class PredictionService {
public:
    explicit PredictionService(std::shared_ptr<const Predictor> predictor)
        : predictor_(std::move(predictor)) {}

    void mount(httplib::Server& server) const;

    /// Status and body for a /predict request; exposed for direct testing.
    std::pair<int, std::string> handle_predict(const std::string& body) const;
    std::string health_body() const;

private:
    std::shared_ptr<const Predictor> predictor_;
};

}  // namespace medspec
