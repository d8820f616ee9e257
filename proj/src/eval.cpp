#include "medspec/eval.hpp"

#include <cmath>
#include <cstdio>

#include "medspec/error.hpp"

namespace medspec::eval {

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

std::size_t ConfusionMatrix::total() const {
    std::size_t sum = 0;
    for (const auto c : counts_) {
        sum += c;
    }
    return sum;
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
    std::size_t sum = 0;
    for (std::size_t p = 0; p < classes_; ++p) {
        sum += at(truth, p);
    }
    return sum;
}

std::size_t ConfusionMatrix::column_sum(std::size_t predicted) const {
    std::size_t sum = 0;
    for (std::size_t t = 0; t < classes_; ++t) {
        sum += at(t, predicted);
    }
    return sum;
}

ConfusionMatrix confusion(std::span<const std::size_t> predicted,
                          std::span<const std::size_t> truth, std::size_t classes) {
    if (predicted.size() != truth.size()) {
        throw DataError("confusion: " + std::to_string(predicted.size()) + " predictions vs " +
                        std::to_string(truth.size()) + " labels");
    }
    ConfusionMatrix m(classes);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= classes || predicted[i] >= classes) {
            throw DataError("confusion: class id out of range");
        }
        m.add(truth[i], predicted[i]);
    }
    return m;
}

std::vector<ClassScores> per_class_prf(const ConfusionMatrix& matrix) {
    std::vector<ClassScores> out(matrix.classes());
    for (std::size_t c = 0; c < matrix.classes(); ++c) {
        const auto tp = static_cast<double>(matrix.at(c, c));
        auto& s = out[c];
        s.support = matrix.row_sum(c);
        s.precision = ratio(tp, static_cast<double>(matrix.column_sum(c)));
        s.recall = ratio(tp, static_cast<double>(s.support));
        s.f1 = ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
    }
    return out;
}

MetricsReport aggregate(std::vector<ClassScores> per_class, const ConfusionMatrix& matrix) {
    const std::size_t total = matrix.total();
    if (total == 0) {
        throw DataError("cannot aggregate metrics over zero examples");
    }
    MetricsReport r;
    std::size_t trace = 0;
    for (std::size_t c = 0; c < matrix.classes(); ++c) {
        trace += matrix.at(c, c);
    }
    r.micro_accuracy = static_cast<double>(trace) / static_cast<double>(total);

    const auto classes = static_cast<double>(per_class.size());
    for (const auto& s : per_class) {
        r.macro.precision += s.precision;
        r.macro.recall += s.recall;
        r.macro.f1 += s.f1;
        const auto w = static_cast<double>(s.support);
        r.weighted.precision += w * s.precision;
        r.weighted.recall += w * s.recall;
        r.weighted.f1 += w * s.f1;
    }
    r.macro.precision /= classes;
    r.macro.recall /= classes;
    r.macro.f1 /= classes;
    r.weighted.precision /= static_cast<double>(total);
    r.weighted.recall /= static_cast<double>(total);
    r.weighted.f1 /= static_cast<double>(total);
    r.per_class = std::move(per_class);
    return r;
}

MetricsReport evaluate(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                       std::size_t classes) {
    const auto m = confusion(predicted, truth, classes);
    return aggregate(per_class_prf(m), m);
}

std::vector<std::pair<std::string, double>> summary_metrics(const MetricsReport& r) {
    return {
        {"accuracy", r.micro_accuracy},
        {"macro_precision", r.macro.precision},
        {"macro_recall", r.macro.recall},
        {"macro_f1", r.macro.f1},
        {"weighted_precision", r.weighted.precision},
        {"weighted_recall", r.weighted.recall},
        {"weighted_f1", r.weighted.f1},
    };
}

const MeanStd& FoldAggregate::get(const std::string& name) const {
    for (const auto& [n, v] : metrics) {
        if (n == name) {
            return v;
        }
    }
    throw DataError("no aggregate metric named '" + name + "'");
}

FoldAggregate fold_aggregate(std::span<const MetricsReport> reports) {
    FoldAggregate agg;
    agg.k = reports.size();
    if (reports.empty()) {
        return agg;
    }
    const double k = static_cast<double>(reports.size());
    std::vector<std::vector<std::pair<std::string, double>>> rows;
    rows.reserve(reports.size());
    for (const auto& r : reports) {
        rows.push_back(summary_metrics(r));
    }
    for (std::size_t m = 0; m < rows.front().size(); ++m) {
        double sum = 0.0;
        for (const auto& row : rows) {
            sum += row[m].second;
        }
        const double mean = sum / k;
        double sq = 0.0;
        for (const auto& row : rows) {
            sq += (row[m].second - mean) * (row[m].second - mean);
        }
        agg.metrics.emplace_back(rows.front()[m].first, MeanStd{mean, std::sqrt(sq / k)});
    }
    return agg;
}

std::string format_mean_std(double mean, double std) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f ± %.2f", mean, std);
    return buf;
}

std::string format_mean_std(const MeanStd& value) { return format_mean_std(value.mean, value.std); }

}  // namespace medspec::eval
