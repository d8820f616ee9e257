#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "medspec/corpus.hpp"
#include "medspec/eval.hpp"
#include "medspec/nn.hpp"
#include "medspec/textprep.hpp"

namespace medspec::train {

struct TrainConfig {
    std::size_t max_epochs = 200;
    std::size_t patience = 10;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double validation_fraction = 0.1;
    double min_delta = 1e-6;
    std::uint64_t seed = 42;
    InputField input_field = InputField::keywords;
    std::size_t seq_len = 15;
    std::size_t embed_dim = 64;
    std::size_t hidden1 = 128;
    std::size_t min_count = 1;
    nn::BatchNormConfig batchnorm;
    std::size_t jobs = 1;  // folds trained concurrently by run_cv

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

double cross_entropy(const nn::Matrix& log_probs, std::span<const std::size_t> labels);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    nn::ParamTensors m;
    nn::ParamTensors v;
    std::uint64_t t = 0;

    static AdamState for_params(const nn::ParamTensors& params);
};

/// Bias-corrected Adam update of every learnable tensor.
void adam_step(nn::ParamTensors& params, const nn::Gradients& grads, AdamState& state,
               const AdamConfig& config);

/// Validation-loss monitor. An epoch improves when its loss is strictly below
/// best − min_delta; `patience` consecutive non-improving epochs trigger a stop.
class EarlyStopping {
public:
    EarlyStopping(std::size_t patience, double min_delta)
        : patience_(patience), min_delta_(min_delta) {}

    enum class Verdict { improved, waiting, stop };

    Verdict observe(std::size_t epoch, double loss);

    std::size_t best_epoch() const { return best_epoch_; }
    double best_loss() const { return best_loss_; }

private:
    std::size_t patience_;
    double min_delta_;
    double best_loss_ = std::numeric_limits<double>::infinity();
    std::size_t best_epoch_ = 0;
    std::size_t stale_ = 0;
};

struct EpochResult {
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> val_accuracy;
    std::size_t best_epoch = 0;     // 1-based
    std::size_t stopped_epoch = 0;  // last epoch run, 1-based
    bool early_stopped = false;
};

/// Runs epochs 1..max_epochs through `run_epoch`, calling `on_improve` after
/// every improving epoch (used to snapshot weights).
TrainHistory run_epochs(std::size_t max_epochs, std::size_t patience, double min_delta,
                        const std::function<EpochResult(std::size_t epoch)>& run_epoch,
                        const std::function<void(std::size_t epoch)>& on_improve = {});

struct EncodedSet {
    std::vector<std::vector<TokenId>> sequences;
    std::vector<std::size_t> labels;

    std::size_t size() const { return labels.size(); }
};

std::vector<Tokens> tokenize(const std::vector<Record>& records, InputField field,
                             const StopwordList& stopwords);

EncodedSet encode_records(const std::vector<Tokens>& tokens, const std::vector<Record>& records,
                          const Vocabulary& vocab, const LabelCatalog& catalog, std::size_t length);

/// Per class: seeded shuffle, then the first round(fraction·n) members (at
/// most n − 1) go to validation. Returns (train, validation) positions.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    std::span<const std::size_t> labels, double fraction, std::uint64_t seed);

struct FoldModel {
    nn::ModelParams params;
    TrainHistory history;
};

/// Trains on `training` with a stratified validation carve-out for early
/// stopping and returns the best-epoch weights. `fold` only feeds the RNG streams.
FoldModel train_fold(const std::vector<Record>& training, const TrainConfig& config,
                     const Vocabulary& vocab, const LabelCatalog& catalog,
                     const StopwordList& stopwords, std::size_t fold = 0);

/// Arg-max class per row (lowest id on ties).
std::vector<std::size_t> predict_labels(const nn::ModelParams& params, const EncodedSet& data);

struct FoldOutcome {
    eval::MetricsReport metrics;
    TrainHistory history;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::size_t vocab_size = 0;
};

struct CvResult {
    FoldPlan plan;
    std::vector<FoldOutcome> folds;
    eval::FoldAggregate aggregate;
};

/// k-fold cross-validation. `corpus` must already be filtered for the input
/// field. `plan` may come from a superset of the corpus (e.g. the unfiltered
/// dataset) so that runs on different fields share partitions; if absent it is
/// computed from `corpus` with config.seed.
CvResult run_cv(const std::vector<Record>& corpus, const TrainConfig& config,
                const LabelCatalog& catalog, const StopwordList& stopwords, std::size_t k = 5,
                std::optional<FoldPlan> plan = std::nullopt);

struct GradCheckDims {
    nn::ModelDims dims{.vocab = 7, .embed = 3, .seq_len = 4, .hidden1 = 5, .hidden2 = 100,
                       .hidden3 = 100, .classes = 3};
    std::size_t batch = 4;
};

struct GroupCheck {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t components = 0;     // compared against finite differences
    std::size_t kinks_skipped = 0;  // perturbation crossed a ReLU kink
    bool passed = false;
};

struct GradCheckReport {
    std::vector<GroupCheck> groups;
    bool passed = false;
};

struct GradCheckOptions {
    double tolerance = 1e-4;
    double step = 1e-5;
    bool all_pad = false;  // every input position is the PAD token
    /// Applied to the analytic gradients before comparison.
    std::function<void(nn::Gradients&)> corrupt;
};

/// Central finite differences of the train-mode mean cross-entropy against
/// backward(). Relative error is |a − n| / max(|a|, |n|, 1e-6). Components whose
/// ±step perturbation flips any ReLU input sign are counted in kinks_skipped
/// instead of compared.
GradCheckReport grad_check(const GradCheckDims& dims, std::uint64_t seed,
                           const GradCheckOptions& options = {});

}  // namespace medspec::train
