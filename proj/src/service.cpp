#include "medspec/service.hpp"

namespace medspec {

namespace {

constexpr const char* kJson = "application/json";

std::string error_body(const std::string& message) {
    return nlohmann::json{{"error", message}}.dump();
}

}  // namespace

std::pair<int, std::string> PredictionService::handle_predict(const std::string& body) const {
    nlohmann::json request;
    try {
        request = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        return {400, error_body(std::string("malformed JSON: ") + e.what())};
    }
    if (!request.is_object()) {
        return {400, error_body("request body must be a JSON object")};
    }
    const auto keywords = request.find("keywords");
    if (keywords == request.end() || !keywords->is_string()) {
        return {400, error_body("field 'keywords' must be a string")};
    }
    std::size_t top_k = 3;
    if (const auto k = request.find("top_k"); k != request.end()) {
        if (!k->is_number_integer() || k->get<long long>() < 1) {
            return {400, error_body("field 'top_k' must be a positive integer")};
        }
        top_k = k->get<std::size_t>();
    }
    try {
        return {200, to_json(predictor_->predict(keywords->get<std::string>(), top_k)).dump()};
    } catch (const NoUsableTokens& e) {
        return {422, error_body(e.what())};
    } catch (const std::exception& e) {
        return {500, error_body(e.what())};
    }
}

std::string PredictionService::health_body() const {
    return nlohmann::json{{"status", "ok"}, {"classes", predictor_->classes()}}.dump();
}

void PredictionService::mount(httplib::Server& server) const {
    server.Post("/predict", [this](const httplib::Request& req, httplib::Response& res) {
        auto [status, body] = handle_predict(req.body);
        res.status = status;
        res.set_content(body, kJson);
    });
    server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
        res.status = 200;
        res.set_content(health_body(), kJson);
    });
}

}  // namespace medspec
