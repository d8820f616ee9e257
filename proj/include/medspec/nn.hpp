#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "medspec/textprep.hpp"

namespace medspec::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

/// Layer sizes of the embedding + MLP classifier.
struct ModelDims {
    std::size_t vocab = 0;        // V
    std::size_t embed = 64;       // d
    std::size_t seq_len = 15;     // L
    std::size_t hidden1 = 128;    // dense1 width, batch-normalized
    std::size_t hidden2 = 100;
    std::size_t hidden3 = 100;
    std::size_t classes = 0;      // C

    bool operator==(const ModelDims&) const = default;
};

struct BatchNormConfig {
    double epsilon = 1e-5;
    double momentum = 0.01;

    bool operator==(const BatchNormConfig&) const = default;
};

/// Learnable tensors, in a fixed order shared by gradients, Adam state and
/// the model file.
enum class Param : std::size_t {
    embedding,
    dense1_w,
    dense1_b,
    bn_gamma,
    bn_beta,
    dense2_w,
    dense2_b,
    dense3_w,
    dense3_b,
    output_w,
    output_b,
};
inline constexpr std::size_t kParamCount = 11;

std::string_view param_name(Param p);
constexpr Param param_at(std::size_t i) { return static_cast<Param>(i); }

/// One matrix per learnable tensor; biases and batchnorm vectors are 1×n.
struct ParamTensors {
    std::array<Matrix, kParamCount> tensors;

    Matrix& operator[](Param p) { return tensors[static_cast<std::size_t>(p)]; }
    const Matrix& operator[](Param p) const { return tensors[static_cast<std::size_t>(p)]; }

    /// Same shapes as `like`, all zeros.
    static ParamTensors zeros_like(const ParamTensors& like);
    bool all_finite() const;
};

using Gradients = ParamTensors;

struct ModelParams {
    ModelDims dims;
    BatchNormConfig bn;
    ParamTensors learn;
    RowVector running_mean;
    RowVector running_var;
};

enum class Mode { train, infer };

/// Row-major B×L token ids.
struct IdBatch {
    std::size_t rows = 0;
    std::size_t seq_len = 0;
    std::vector<TokenId> ids;

    TokenId at(std::size_t row, std::size_t pos) const { return ids[row * seq_len + pos]; }
};

/// Builds a batch from the sequences selected by `rows` (all rows if empty).
IdBatch make_batch(std::span<const std::vector<TokenId>> sequences,
                   std::span<const std::size_t> rows = {});

struct ForwardCache {
    Mode mode = Mode::infer;
    IdBatch batch;
    Matrix embedded;   // B × L·d
    Matrix dense1;     // B × h1, pre-normalization
    RowVector bn_mean;
    RowVector bn_var;
    RowVector bn_inv_std;
    Matrix bn_hat;     // normalized, pre-affine
    Matrix bn_out;     // after affine, pre-ReLU
    Matrix act1;
    Matrix dense2;     // pre-ReLU
    Matrix act2;
    Matrix dense3;     // pre-ReLU
    Matrix act3;
    Matrix logits;
    Matrix log_probs;
    Matrix probs;
};

ModelParams init_params(std::uint64_t seed, const ModelDims& dims, const BatchNormConfig& bn = {});

/// Pure forward pass; never touches running statistics.
ForwardCache forward_pass(const ModelParams& params, const IdBatch& batch, Mode mode);

/// Forward pass; in train mode also folds the batch statistics into the
/// running statistics.
ForwardCache forward(ModelParams& params, const IdBatch& batch, Mode mode);

/// Inference only, for shared immutable models.
Matrix predict_proba(const ModelParams& params, const IdBatch& batch);

void update_running_stats(ModelParams& params, const ForwardCache& cache);

/// Gradients of the mean cross-entropy loss w.r.t. every learnable tensor.
Gradients backward(const ModelParams& params, const ForwardCache& cache,
                   std::span<const std::size_t> labels);

/// Max-subtracted softmax of one row.
RowVector softmax(const RowVector& logits);

/// Row-wise log-softmax via log-sum-exp.
Matrix log_softmax(const Matrix& logits);

struct BatchNormResult {
    Matrix out;
    Matrix hat;
    RowVector mean;
    RowVector var;
    RowVector inv_std;
};

/// y = gamma·(x − mean)/sqrt(var + eps) + beta, with batch statistics
/// (population variance) in train mode and running statistics in infer mode.
BatchNormResult batchnorm_forward(const Matrix& x, const RowVector& gamma, const RowVector& beta,
                                  const RowVector& running_mean, const RowVector& running_var,
                                  double epsilon, Mode mode);

}  // namespace medspec::nn
