#include "medspec/predictor.hpp"

#include <algorithm>
#include <numeric>

namespace medspec {

std::vector<double> Predictor::distribution(std::string_view text) const {
    const Tokens tokens = normalize(text, model_.stopwords);
    if (tokens.empty()) {
        throw NoUsableTokens();
    }
    const std::vector<std::vector<TokenId>> seq{encode(tokens, model_.vocab, model_.params.dims.seq_len)};
    const nn::Matrix probs = nn::predict_proba(model_.params, nn::make_batch(seq));
    return {probs.data(), probs.data() + probs.cols()};
}

Prediction Predictor::predict(std::string_view text, std::size_t top_k) const {
    if (top_k < 1) {
        throw DataError("top_k must be >= 1");
    }
    const auto probs = distribution(text);
    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
    Prediction out;
    for (std::size_t i = 0; i < std::min(top_k, order.size()); ++i) {
        out.ranked.push_back({model_.catalog.name(order[i]), probs[order[i]]});
    }
    return out;
}

nlohmann::json to_json(const Prediction& prediction) {
    auto list = nlohmann::json::array();
    for (const auto& r : prediction.ranked) {
        list.push_back({{"specialty", r.specialty}, {"probability", r.probability}});
    }
    return {{"predictions", std::move(list)}};
}

}  // namespace medspec
