#include "medspec/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "medspec/error.hpp"

namespace medspec::train {

using nn::Matrix;

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t purpose, std::uint32_t fold,
                       std::uint32_t epoch = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      purpose, fold, epoch};
    return std::mt19937_64(seq);
}

enum Purpose : std::uint32_t { kInit = 1, kHoldout = 2, kShuffle = 3 };

constexpr std::size_t kEvalChunk = 256;

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
};

Evaluation evaluate_loss(const nn::ModelParams& params, const EncodedSet& data,
                         std::span<const std::size_t> rows) {
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < rows.size(); start += kEvalChunk) {
        const auto chunk = rows.subspan(start, std::min(kEvalChunk, rows.size() - start));
        const auto cache = nn::forward_pass(params, nn::make_batch(data.sequences, chunk), nn::Mode::infer);
        std::vector<std::size_t> labels;
        labels.reserve(chunk.size());
        for (const auto r : chunk) {
            labels.push_back(data.labels[r]);
        }
        loss_sum += cross_entropy(cache.log_probs, labels) * static_cast<double>(chunk.size());
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            Eigen::Index best = 0;
            cache.log_probs.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
            correct += static_cast<std::size_t>(best) == labels[i] ? 1 : 0;
        }
    }
    const auto n = static_cast<double>(rows.size());
    return {loss_sum / n, static_cast<double>(correct) / n};
}

}  // namespace

void TrainConfig::validate() const {
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2 (batchnorm needs batch statistics)");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam_beta1 must be in [0,1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2 must be in [0,1)");
    if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be > 0");
    if (!(validation_fraction > 0.0 && validation_fraction < 0.5)) {
        throw ConfigError("validation_fraction must be in (0, 0.5)");
    }
    if (!(min_delta >= 0.0)) throw ConfigError("min_delta must be >= 0");
    if (seq_len < 1) throw ConfigError("seq_len must be >= 1");
    if (embed_dim < 1 || hidden1 < 1) throw ConfigError("embed_dim and hidden1 must be >= 1");
    if (min_count < 1) throw ConfigError("min_count must be >= 1");
    if (!(batchnorm.epsilon > 0.0)) throw ConfigError("bn_epsilon must be > 0");
    if (!(batchnorm.momentum > 0.0 && batchnorm.momentum <= 1.0)) {
        throw ConfigError("bn_momentum must be in (0, 1]");
    }
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

double cross_entropy(const Matrix& log_probs, std::span<const std::size_t> labels) {
    if (static_cast<std::size_t>(log_probs.rows()) != labels.size() || labels.empty()) {
        throw DataError("cross_entropy: label count does not match rows");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= static_cast<std::size_t>(log_probs.cols())) {
            throw DataError("cross_entropy: label id out of range");
        }
        sum -= log_probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i]));
    }
    return sum / static_cast<double>(labels.size());
}

AdamState AdamState::for_params(const nn::ParamTensors& params) {
    return {nn::ParamTensors::zeros_like(params), nn::ParamTensors::zeros_like(params), 0};
}

void adam_step(nn::ParamTensors& params, const nn::Gradients& grads, AdamState& state,
               const AdamConfig& config) {
    ++state.t;
    const double t = static_cast<double>(state.t);
    const double correct1 = 1.0 - std::pow(config.beta1, t);
    const double correct2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t i = 0; i < nn::kParamCount; ++i) {
        auto& m = state.m.tensors[i];
        auto& v = state.v.tensors[i];
        const auto& g = grads.tensors[i];
        m = config.beta1 * m + (1.0 - config.beta1) * g;
        v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
        params.tensors[i].array() -=
            config.learning_rate * (m.array() / correct1) / ((v.array() / correct2).sqrt() + config.epsilon);
    }
}

EarlyStopping::Verdict EarlyStopping::observe(std::size_t epoch, double loss) {
    if (loss < best_loss_ - min_delta_) {
        best_loss_ = loss;
        best_epoch_ = epoch;
        stale_ = 0;
        return Verdict::improved;
    }
    ++stale_;
    return stale_ >= patience_ ? Verdict::stop : Verdict::waiting;
}

TrainHistory run_epochs(std::size_t max_epochs, std::size_t patience, double min_delta,
                        const std::function<EpochResult(std::size_t)>& run_epoch,
                        const std::function<void(std::size_t)>& on_improve) {
    TrainHistory history;
    EarlyStopping monitor(patience, min_delta);
    for (std::size_t epoch = 1; epoch <= max_epochs; ++epoch) {
        const EpochResult r = run_epoch(epoch);
        if (!std::isfinite(r.val_loss) || !std::isfinite(r.train_loss)) {
            throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
        }
        history.train_loss.push_back(r.train_loss);
        history.val_loss.push_back(r.val_loss);
        history.val_accuracy.push_back(r.val_accuracy);
        history.stopped_epoch = epoch;

        const auto verdict = monitor.observe(epoch, r.val_loss);
        if (verdict == EarlyStopping::Verdict::improved && on_improve) {
            on_improve(epoch);
        }
        if (verdict == EarlyStopping::Verdict::stop) {
            history.early_stopped = true;
            break;
        }
    }
    history.best_epoch = monitor.best_epoch();
    return history;
}

std::vector<Tokens> tokenize(const std::vector<Record>& records, InputField field,
                             const StopwordList& stopwords) {
    std::vector<Tokens> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        out.push_back(normalize(field_text(r, field), stopwords));
    }
    return out;
}

EncodedSet encode_records(const std::vector<Tokens>& tokens, const std::vector<Record>& records,
                          const Vocabulary& vocab, const LabelCatalog& catalog, std::size_t length) {
    EncodedSet set;
    set.sequences.reserve(records.size());
    set.labels.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        set.sequences.push_back(encode(tokens[i], vocab, length));
        set.labels.push_back(catalog.id(records[i].specialty));
    }
    return set;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    std::span<const std::size_t> labels, double fraction, std::uint64_t seed) {
    std::size_t classes = 0;
    for (const auto l : labels) {
        classes = std::max(classes, l + 1);
    }
    std::vector<std::vector<std::size_t>> members(classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        members[labels[i]].push_back(i);
    }
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> val_rows;
    for (std::size_t c = 0; c < classes; ++c) {
        auto& ids = members[c];
        if (ids.empty()) {
            continue;
        }
        auto rng = stream(seed, kHoldout, static_cast<std::uint32_t>(c));
        std::shuffle(ids.begin(), ids.end(), rng);
        const auto n = ids.size();
        const auto take = std::min(static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))), n - 1);
        val_rows.insert(val_rows.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take));
        train_rows.insert(train_rows.end(), ids.begin() + static_cast<std::ptrdiff_t>(take), ids.end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(val_rows.begin(), val_rows.end());
    return {std::move(train_rows), std::move(val_rows)};
}

FoldModel train_fold(const std::vector<Record>& training, const TrainConfig& config,
                     const Vocabulary& vocab, const LabelCatalog& catalog,
                     const StopwordList& stopwords, std::size_t fold) {
    config.validate();
    if (training.empty()) {
        throw DataError("train_fold: empty training set");
    }
    const auto fold_id = static_cast<std::uint32_t>(fold);
    const EncodedSet data = encode_records(tokenize(training, config.input_field, stopwords),
                                           training, vocab, catalog, config.seq_len);

    // Mix the fold into the holdout seed so folds draw independent carve-outs.
    const auto [train_rows, val_rows] =
        stratified_holdout(data.labels, config.validation_fraction, config.seed ^ (std::uint64_t{fold_id} << 32));
    if (val_rows.empty()) {
        throw DataError("validation split is empty; every class has fewer than " +
                        std::to_string(static_cast<int>(std::ceil(0.5 / config.validation_fraction))) +
                        " training records");
    }
    if (train_rows.size() < 2) {
        throw DataError("training split has fewer than 2 records");
    }

    nn::ModelDims dims;
    dims.vocab = vocab.size();
    dims.embed = config.embed_dim;
    dims.seq_len = config.seq_len;
    dims.hidden1 = config.hidden1;
    dims.classes = catalog.size();
    const std::uint64_t init_seed = stream(config.seed, kInit, fold_id)();
    nn::ModelParams params = nn::init_params(init_seed, dims, config.batchnorm);
    nn::ModelParams best = params;

    const AdamConfig adam{config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_epsilon};
    AdamState state = AdamState::for_params(params.learn);
    std::vector<std::size_t> order(train_rows.begin(), train_rows.end());
    std::vector<std::size_t> batch_labels;

    const auto run_epoch = [&](std::size_t epoch) {
        std::sort(order.begin(), order.end());
        auto rng = stream(config.seed, kShuffle, fold_id, static_cast<std::uint32_t>(epoch));
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t count = std::min(config.batch_size, order.size() - start);
            if (count < 2) {
                break;  // a lone trailing row cannot form batch statistics
            }
            const std::span<const std::size_t> rows(order.data() + start, count);
            batch_labels.clear();
            for (const auto r : rows) {
                batch_labels.push_back(data.labels[r]);
            }
            const auto cache = nn::forward(params, nn::make_batch(data.sequences, rows), nn::Mode::train);
            loss_sum += cross_entropy(cache.log_probs, batch_labels) * static_cast<double>(count);
            seen += count;
            adam_step(params.learn, nn::backward(params, cache, batch_labels), state, adam);
        }
        if (!params.learn.all_finite() || !params.running_mean.allFinite() ||
            !params.running_var.allFinite()) {
            throw NumericError("non-finite parameters after epoch " + std::to_string(epoch));
        }
        const auto val = evaluate_loss(params, data, val_rows);
        return EpochResult{loss_sum / static_cast<double>(seen), val.loss, val.accuracy};
    };

    FoldModel out;
    out.history = run_epochs(config.max_epochs, config.patience, config.min_delta, run_epoch,
                             [&](std::size_t) { best = params; });
    out.params = std::move(best);
    return out;
}

std::vector<std::size_t> predict_labels(const nn::ModelParams& params, const EncodedSet& data) {
    std::vector<std::size_t> out;
    out.reserve(data.size());
    std::vector<std::size_t> rows(std::min(kEvalChunk, data.size()));
    for (std::size_t start = 0; start < data.size(); start += kEvalChunk) {
        const std::size_t count = std::min(kEvalChunk, data.size() - start);
        rows.resize(count);
        std::iota(rows.begin(), rows.end(), start);
        const Matrix probs = nn::predict_proba(params, nn::make_batch(data.sequences, rows));
        for (Eigen::Index i = 0; i < probs.rows(); ++i) {
            Eigen::Index best = 0;
            probs.row(i).maxCoeff(&best);
            out.push_back(static_cast<std::size_t>(best));
        }
    }
    return out;
}

CvResult run_cv(const std::vector<Record>& corpus, const TrainConfig& config,
                const LabelCatalog& catalog, const StopwordList& stopwords, std::size_t k,
                std::optional<FoldPlan> plan) {
    config.validate();
    CvResult result;
    result.plan = plan ? std::move(*plan) : stratified_kfold(corpus, catalog, k, config.seed);
    if (result.plan.k != k) {
        throw ConfigError("fold plan has k=" + std::to_string(result.plan.k) + ", expected " +
                          std::to_string(k));
    }
    result.folds.resize(k);

    const auto run_fold = [&](std::size_t fold) {
        const auto [train_records, test_records] = split_fold(corpus, result.plan, fold);
        if (test_records.empty()) {
            throw DataError("fold " + std::to_string(fold) + " has no test records");
        }
        const Vocabulary vocab =
            build_vocab(tokenize(train_records, config.input_field, stopwords), config.min_count);
        const FoldModel model = train_fold(train_records, config, vocab, catalog, stopwords, fold);
        const EncodedSet test = encode_records(tokenize(test_records, config.input_field, stopwords),
                                               test_records, vocab, catalog, config.seq_len);
        auto& out = result.folds[fold];
        out.metrics = eval::evaluate(predict_labels(model.params, test), test.labels, catalog.size());
        out.history = model.history;
        out.train_size = train_records.size();
        out.test_size = test_records.size();
        out.vocab_size = vocab.size();
    };

    if (config.jobs <= 1) {
        for (std::size_t f = 0; f < k; ++f) {
            run_fold(f);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> workers;
        for (std::size_t w = 0; w < std::min(config.jobs, k); ++w) {
            workers.emplace_back([&] {
                for (std::size_t f = next++; f < k; f = next++) {
                    try {
                        run_fold(f);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : workers) {
            t.join();
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
    }

    std::vector<eval::MetricsReport> reports;
    for (const auto& f : result.folds) {
        reports.push_back(f.metrics);
    }
    result.aggregate = eval::fold_aggregate(reports);
    return result;
}

}  // namespace medspec::train
