#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace medspec::eval {

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t classes)
        : classes_(classes), counts_(classes * classes, 0) {}

    std::size_t classes() const { return classes_; }
    std::size_t at(std::size_t truth, std::size_t predicted) const {
        return counts_[truth * classes_ + predicted];
    }
    void add(std::size_t truth, std::size_t predicted) { ++counts_[truth * classes_ + predicted]; }
    std::size_t total() const;
    std::size_t row_sum(std::size_t truth) const;
    std::size_t column_sum(std::size_t predicted) const;

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::size_t classes_;
    std::vector<std::size_t> counts_;
};

/// Throws DataError when lengths differ or an id is >= classes.
ConfusionMatrix confusion(std::span<const std::size_t> predicted,
                          std::span<const std::size_t> truth, std::size_t classes);

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

/// Any 0/0 is taken as 0.
std::vector<ClassScores> per_class_prf(const ConfusionMatrix& matrix);

struct Averages {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricsReport {
    std::vector<ClassScores> per_class;
    double micro_accuracy = 0.0;
    Averages macro;     // unweighted over all C classes, zero-support ones included
    Averages weighted;  // support-weighted
};

/// Throws DataError when the matrix is empty.
MetricsReport aggregate(std::vector<ClassScores> per_class, const ConfusionMatrix& matrix);

MetricsReport evaluate(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                       std::size_t classes);

/// Named scalar summaries in table order: accuracy, macro P/R/F1, weighted P/R/F1.
std::vector<std::pair<std::string, double>> summary_metrics(const MetricsReport& report);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population, divisor k
};

struct FoldAggregate {
    std::size_t k = 0;
    std::vector<std::pair<std::string, MeanStd>> metrics;

    const MeanStd& get(const std::string& name) const;
};

FoldAggregate fold_aggregate(std::span<const MetricsReport> reports);

/// Two-decimal "mean ± std".
std::string format_mean_std(const MeanStd& value);
std::string format_mean_std(double mean, double std);

}  // namespace medspec::eval
