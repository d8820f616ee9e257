#include <algorithm>
#include <cmath>
#include <random>

#include "medspec/train.hpp"

namespace medspec::train {

namespace {

struct Probe {
    double loss = 0.0;
    std::vector<bool> active;  // sign pattern of every ReLU input
};

Probe probe(const nn::ModelParams& params, const nn::IdBatch& batch,
            std::span<const std::size_t> labels) {
    const auto cache = nn::forward_pass(params, batch, nn::Mode::train);
    Probe p;
    p.loss = cross_entropy(cache.log_probs, labels);
    for (const nn::Matrix* pre : {&cache.bn_out, &cache.dense2, &cache.dense3}) {
        for (Eigen::Index i = 0; i < pre->size(); ++i) {
            p.active.push_back(pre->data()[i] > 0.0);
        }
    }
    return p;
}

}  // namespace

GradCheckReport grad_check(const GradCheckDims& dims, std::uint64_t seed,
                           const GradCheckOptions& options) {
    nn::ModelParams params = nn::init_params(seed, dims.dims);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);

    // Check at a generic point: with zero biases a row whose batchnorm outputs
    // are all negative puts every downstream unit exactly on the ReLU kink.
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);
    for (const auto p : {nn::Param::dense1_b, nn::Param::bn_beta, nn::Param::dense2_b,
                         nn::Param::dense3_b, nn::Param::output_b}) {
        for (Eigen::Index j = 0; j < params.learn[p].size(); ++j) {
            params.learn[p].data()[j] = jitter(rng);
        }
    }
    for (Eigen::Index j = 0; j < params.learn[nn::Param::bn_gamma].size(); ++j) {
        params.learn[nn::Param::bn_gamma].data()[j] = 1.0 + jitter(rng);
    }

    nn::IdBatch batch;
    batch.rows = dims.batch;
    batch.seq_len = dims.dims.seq_len;
    std::uniform_int_distribution<TokenId> token(0, static_cast<TokenId>(dims.dims.vocab - 1));
    for (std::size_t i = 0; i < batch.rows * batch.seq_len; ++i) {
        batch.ids.push_back(options.all_pad ? Vocabulary::kPad : token(rng));
    }
    std::uniform_int_distribution<std::size_t> label(0, dims.dims.classes - 1);
    std::vector<std::size_t> labels(dims.batch);
    for (auto& l : labels) {
        l = label(rng);
    }

    const auto base = probe(params, batch, labels);
    const auto cache = nn::forward_pass(params, batch, nn::Mode::train);
    nn::Gradients analytic = nn::backward(params, cache, labels);
    if (options.corrupt) {
        options.corrupt(analytic);
    }

    GradCheckReport report;
    report.passed = true;
    for (std::size_t i = 0; i < nn::kParamCount; ++i) {
        GroupCheck group;
        group.name = std::string(nn::param_name(nn::param_at(i)));
        nn::Matrix& tensor = params.learn.tensors[i];
        for (Eigen::Index j = 0; j < tensor.size(); ++j) {
            double& value = tensor.data()[j];
            const double saved = value;
            value = saved + options.step;
            const auto plus = probe(params, batch, labels);
            value = saved - options.step;
            const auto minus = probe(params, batch, labels);
            value = saved;

            // The loss is not differentiable across a ReLU kink; a central
            // difference straddling one says nothing about backward().
            if (plus.active != base.active || minus.active != base.active) {
                ++group.kinks_skipped;
                continue;
            }
            const double numeric = (plus.loss - minus.loss) / (2.0 * options.step);
            const double a = analytic.tensors[i].data()[j];
            const double scale = std::max({std::abs(a), std::abs(numeric), 1e-6});
            group.max_rel_error = std::max(group.max_rel_error, std::abs(a - numeric) / scale);
            ++group.components;
        }
        group.passed = group.components > 0 && group.max_rel_error < options.tolerance;
        report.passed = report.passed && group.passed;
        report.groups.push_back(std::move(group));
    }
    return report;
}

}  // namespace medspec::train
