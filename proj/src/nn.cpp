#include "medspec/nn.hpp"

#include <cmath>
#include <random>
#include <string>

#include "medspec/error.hpp"

namespace medspec::nn {

namespace {

constexpr std::array<std::string_view, kParamCount> kParamNames = {
    "embedding", "dense1.weight", "dense1.bias", "batchnorm.gamma", "batchnorm.beta",
    "dense2.weight", "dense2.bias", "dense3.weight", "dense3.bias", "output.weight",
    "output.bias",
};

Matrix uniform(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = dist(rng);
    }
    return m;
}

Matrix glorot(std::mt19937_64& rng, std::size_t fan_in, std::size_t fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return uniform(rng, fan_in, fan_out, bound);
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

/// Zeroes the gradient where the pre-activation was not positive.
Matrix relu_backward(const Matrix& grad, const Matrix& pre) {
    return (pre.array() > 0.0).select(grad, 0.0);
}

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
    Matrix out(x.rows(), w.cols());
    out.noalias() = x * w;
    out.rowwise() += b.row(0);
    return out;
}

}  // namespace

std::string_view param_name(Param p) { return kParamNames[static_cast<std::size_t>(p)]; }

ParamTensors ParamTensors::zeros_like(const ParamTensors& like) {
    ParamTensors out;
    for (std::size_t i = 0; i < kParamCount; ++i) {
        out.tensors[i] = Matrix::Zero(like.tensors[i].rows(), like.tensors[i].cols());
    }
    return out;
}

bool ParamTensors::all_finite() const {
    for (const auto& t : tensors) {
        if (!t.allFinite()) {
            return false;
        }
    }
    return true;
}

IdBatch make_batch(std::span<const std::vector<TokenId>> sequences,
                   std::span<const std::size_t> rows) {
    IdBatch batch;
    batch.rows = rows.empty() ? sequences.size() : rows.size();
    batch.seq_len = sequences.empty() ? 0 : sequences.front().size();
    batch.ids.reserve(batch.rows * batch.seq_len);
    for (std::size_t i = 0; i < batch.rows; ++i) {
        const auto& seq = sequences[rows.empty() ? i : rows[i]];
        if (seq.size() != batch.seq_len) {
            throw DataError("batch sequences must share one length");
        }
        batch.ids.insert(batch.ids.end(), seq.begin(), seq.end());
    }
    return batch;
}

ModelParams init_params(std::uint64_t seed, const ModelDims& dims, const BatchNormConfig& bn) {
    if (dims.vocab < 1 || dims.embed < 1 || dims.seq_len < 1 || dims.hidden1 < 1 ||
        dims.hidden2 < 1 || dims.hidden3 < 1 || dims.classes < 1) {
        throw ConfigError("all model dimensions must be >= 1");
    }
    std::mt19937_64 rng(seed);
    ModelParams p;
    p.dims = dims;
    p.bn = bn;
    p.learn[Param::embedding] = uniform(rng, dims.vocab, dims.embed, 0.05);
    p.learn[Param::dense1_w] = glorot(rng, dims.seq_len * dims.embed, dims.hidden1);
    p.learn[Param::dense1_b] = Matrix::Zero(1, dims.hidden1);
    p.learn[Param::bn_gamma] = Matrix::Ones(1, dims.hidden1);
    p.learn[Param::bn_beta] = Matrix::Zero(1, dims.hidden1);
    p.learn[Param::dense2_w] = glorot(rng, dims.hidden1, dims.hidden2);
    p.learn[Param::dense2_b] = Matrix::Zero(1, dims.hidden2);
    p.learn[Param::dense3_w] = glorot(rng, dims.hidden2, dims.hidden3);
    p.learn[Param::dense3_b] = Matrix::Zero(1, dims.hidden3);
    p.learn[Param::output_w] = glorot(rng, dims.hidden3, dims.classes);
    p.learn[Param::output_b] = Matrix::Zero(1, dims.classes);
    p.running_mean = RowVector::Zero(dims.hidden1);
    p.running_var = RowVector::Ones(dims.hidden1);
    return p;
}

RowVector softmax(const RowVector& logits) {
    const RowVector shifted = logits.array() - logits.maxCoeff();
    const RowVector e = shifted.array().exp();
    return e / e.sum();
}

Matrix log_softmax(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
        out.row(i) = logits.row(i).array() - lse;
    }
    return out;
}

BatchNormResult batchnorm_forward(const Matrix& x, const RowVector& gamma, const RowVector& beta,
                                  const RowVector& running_mean, const RowVector& running_var,
                                  double epsilon, Mode mode) {
    BatchNormResult r;
    if (mode == Mode::train) {
        if (x.rows() < 2) {
            throw NumericError("batchnorm in train mode needs a batch of at least 2 rows");
        }
        const double n = static_cast<double>(x.rows());
        r.mean = x.colwise().sum() / n;
        const Matrix centered = x.rowwise() - r.mean;
        r.var = centered.array().square().colwise().sum() / n;
    } else {
        r.mean = running_mean;
        r.var = running_var;
    }
    r.inv_std = (r.var.array() + epsilon).rsqrt();
    r.hat = (x.rowwise() - r.mean).array().rowwise() * r.inv_std.array();
    r.out = (r.hat.array().rowwise() * gamma.array()).rowwise() + beta.array();
    return r;
}

ForwardCache forward_pass(const ModelParams& params, const IdBatch& batch, Mode mode) {
    const auto& dims = params.dims;
    if (batch.seq_len != dims.seq_len) {
        throw DataError("batch sequence length " + std::to_string(batch.seq_len) +
                        " does not match model length " + std::to_string(dims.seq_len));
    }
    if (mode == Mode::train && batch.rows < 2) {
        throw NumericError("train-mode forward needs a batch of at least 2 rows");
    }
    ForwardCache c;
    c.mode = mode;
    c.batch = batch;

    const auto d = static_cast<Eigen::Index>(dims.embed);
    const Matrix& emb = params.learn[Param::embedding];
    c.embedded.resize(static_cast<Eigen::Index>(batch.rows),
                      static_cast<Eigen::Index>(dims.seq_len) * d);
    for (std::size_t i = 0; i < batch.rows; ++i) {
        for (std::size_t j = 0; j < batch.seq_len; ++j) {
            const TokenId id = batch.at(i, j);
            if (id < 0 || static_cast<std::size_t>(id) >= dims.vocab) {
                throw DataError("token id " + std::to_string(id) + " out of range for vocabulary of " +
                                std::to_string(dims.vocab));
            }
            c.embedded.block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j) * d, 1, d) =
                emb.row(id);
        }
    }

    c.dense1 = affine(c.embedded, params.learn[Param::dense1_w], params.learn[Param::dense1_b]);
    auto bn = batchnorm_forward(c.dense1, params.learn[Param::bn_gamma].row(0),
                                params.learn[Param::bn_beta].row(0), params.running_mean,
                                params.running_var, params.bn.epsilon, mode);
    c.bn_mean = std::move(bn.mean);
    c.bn_var = std::move(bn.var);
    c.bn_inv_std = std::move(bn.inv_std);
    c.bn_hat = std::move(bn.hat);
    c.bn_out = std::move(bn.out);
    c.act1 = relu(c.bn_out);
    c.dense2 = affine(c.act1, params.learn[Param::dense2_w], params.learn[Param::dense2_b]);
    c.act2 = relu(c.dense2);
    c.dense3 = affine(c.act2, params.learn[Param::dense3_w], params.learn[Param::dense3_b]);
    c.act3 = relu(c.dense3);
    c.logits = affine(c.act3, params.learn[Param::output_w], params.learn[Param::output_b]);
    c.log_probs = log_softmax(c.logits);
    c.probs = c.log_probs.array().exp();
    return c;
}

void update_running_stats(ModelParams& params, const ForwardCache& cache) {
    const double m = params.bn.momentum;
    params.running_mean = (1.0 - m) * params.running_mean + m * cache.bn_mean;
    params.running_var = (1.0 - m) * params.running_var + m * cache.bn_var;
}

ForwardCache forward(ModelParams& params, const IdBatch& batch, Mode mode) {
    ForwardCache cache = forward_pass(params, batch, mode);
    if (mode == Mode::train) {
        update_running_stats(params, cache);
    }
    return cache;
}

Matrix predict_proba(const ModelParams& params, const IdBatch& batch) {
    return forward_pass(params, batch, Mode::infer).probs;
}

Gradients backward(const ModelParams& params, const ForwardCache& cache,
                   std::span<const std::size_t> labels) {
    const auto rows = static_cast<Eigen::Index>(cache.batch.rows);
    if (static_cast<Eigen::Index>(labels.size()) != rows) {
        throw DataError("label count does not match batch size");
    }
    const double n = static_cast<double>(rows);
    Gradients g = ParamTensors::zeros_like(params.learn);

    Matrix d_logits = cache.probs;
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto label = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]);
        if (label >= d_logits.cols()) {
            throw DataError("label id out of range");
        }
        d_logits(i, label) -= 1.0;
    }
    d_logits /= n;

    g[Param::output_w].noalias() = cache.act3.transpose() * d_logits;
    g[Param::output_b] = d_logits.colwise().sum();
    const Matrix d_dense3 =
        relu_backward(d_logits * params.learn[Param::output_w].transpose(), cache.dense3);

    g[Param::dense3_w].noalias() = cache.act2.transpose() * d_dense3;
    g[Param::dense3_b] = d_dense3.colwise().sum();
    const Matrix d_dense2 =
        relu_backward(d_dense3 * params.learn[Param::dense3_w].transpose(), cache.dense2);

    g[Param::dense2_w].noalias() = cache.act1.transpose() * d_dense2;
    g[Param::dense2_b] = d_dense2.colwise().sum();
    const Matrix d_bn_out =
        relu_backward(d_dense2 * params.learn[Param::dense2_w].transpose(), cache.bn_out);

    g[Param::bn_gamma] = (d_bn_out.array() * cache.bn_hat.array()).colwise().sum();
    g[Param::bn_beta] = d_bn_out.colwise().sum();

    const Matrix d_hat = d_bn_out.array().rowwise() * params.learn[Param::bn_gamma].row(0).array();
    Matrix d_dense1;
    if (cache.mode == Mode::train) {
        // Batch statistics depend on every row:
        // dx = inv_std/B · (B·dxhat − Σdxhat − xhat·Σ(dxhat·xhat))
        const RowVector sum_d_hat = d_hat.colwise().sum();
        const RowVector sum_d_hat_x = (d_hat.array() * cache.bn_hat.array()).colwise().sum();
        Matrix t = n * d_hat;
        t.rowwise() -= sum_d_hat;
        t -= (cache.bn_hat.array().rowwise() * sum_d_hat_x.array()).matrix();
        d_dense1 = (t.array().rowwise() * (cache.bn_inv_std.array() / n)).matrix();
    } else {
        d_dense1 = d_hat.array().rowwise() * cache.bn_inv_std.array();
    }

    g[Param::dense1_w].noalias() = cache.embedded.transpose() * d_dense1;
    g[Param::dense1_b] = d_dense1.colwise().sum();
    Matrix d_embedded(rows, cache.embedded.cols());
    d_embedded.noalias() = d_dense1 * params.learn[Param::dense1_w].transpose();

    const auto d = static_cast<Eigen::Index>(params.dims.embed);
    Matrix& d_emb = g[Param::embedding];
    for (std::size_t i = 0; i < cache.batch.rows; ++i) {
        for (std::size_t j = 0; j < cache.batch.seq_len; ++j) {
            d_emb.row(cache.batch.at(i, j)) +=
                d_embedded.block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j) * d, 1, d);
        }
    }
    return g;
}

}  // namespace medspec::nn
