#include "medspec/report.hpp"

#include <sstream>

namespace medspec::report {

namespace {

std::string csv_cell(const std::string& text) {
    if (text.find_first_of(",\"\n\r") == std::string::npos) {
        return text;
    }
    std::string out = "\"";
    for (const char c : text) {
        out += c;
        if (c == '"') {
            out += '"';
        }
    }
    return out + "\"";
}

std::string two_dp(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string fold_csv(std::size_t fold, const eval::MetricsReport& metrics, const LabelCatalog& catalog) {
    std::ostringstream out;
    out << "fold,scope,label,metric,value\n";
    for (std::size_t c = 0; c < metrics.per_class.size(); ++c) {
        const auto& s = metrics.per_class[c];
        const std::string prefix = std::to_string(fold) + ",class," + csv_cell(catalog.name(c)) + ",";
        out << prefix << "precision," << format_double(s.precision) << '\n';
        out << prefix << "recall," << format_double(s.recall) << '\n';
        out << prefix << "f1," << format_double(s.f1) << '\n';
        out << prefix << "support," << s.support << '\n';
    }
    for (const auto& [name, value] : eval::summary_metrics(metrics)) {
        out << fold << ",summary,," << name << ',' << format_double(value) << '\n';
    }
    return out.str();
}

std::string aggregate_csv(const train::CvResult& result) {
    std::ostringstream out;
    out << "metric";
    for (std::size_t f = 0; f < result.folds.size(); ++f) {
        out << ",fold_" << f;
    }
    out << ",mean,std,k\n";
    std::vector<std::vector<std::pair<std::string, double>>> per_fold;
    for (const auto& f : result.folds) {
        per_fold.push_back(eval::summary_metrics(f.metrics));
    }
    for (std::size_t m = 0; m < result.aggregate.metrics.size(); ++m) {
        const auto& [name, ms] = result.aggregate.metrics[m];
        out << name;
        for (const auto& row : per_fold) {
            out << ',' << format_double(row[m].second);
        }
        out << ',' << format_double(ms.mean) << ',' << format_double(ms.std) << ',' << result.aggregate.k << '\n';
    }
    return out.str();
}

std::string metrics_table(const eval::FoldAggregate& a) {
    const auto cell = [&](const char* name) { return eval::format_mean_std(a.get(name)); };
    std::ostringstream out;
    out << "| Metric | Precision | Recall | F1-score |\n"
        << "|---|---|---|---|\n"
        << "| Accuracy (micro avg) | | | " << cell("accuracy") << " |\n"
        << "| Macro avg | " << cell("macro_precision") << " | " << cell("macro_recall") << " | "
        << cell("macro_f1") << " |\n"
        << "| Weighted avg | " << cell("weighted_precision") << " | " << cell("weighted_recall") << " | "
        << cell("weighted_f1") << " |\n";
    return out.str();
}

const std::vector<ReferenceRow>& reference_rows() {
    static const std::vector<ReferenceRow> rows = {
        {"PubMedBERT", "keywords", "0.54 ± 0.31", "0.38 ± 0.45", "0.40 ± 0.45", "0.39 ± 0.45",
         "0.45 ± 0.39", "0.54 ± 0.31", "0.46 ± 0.37"},
        {"PubMedBERT", "transcription", "0.30 ± 0.07", "0.02 ± 0.02", "0.05 ± 0.02", "0.03 ± 0.02",
         "0.11 ± 0.06", "0.30 ± 0.07", "0.15 ± 0.06"},
        {"RoBERTa", "keywords", "0.56 ± 0.30", "0.40 ± 0.46", "0.41 ± 0.44", "0.40 ± 0.46",
         "0.47 ± 0.34", "0.56 ± 0.30", "0.49 ± 0.34"},
        {"RoBERTa", "transcription", "0.25 ± 0.06", "0.01 ± 0.02", "0.04 ± 0.02", "0.02 ± 0.02",
         "0.08 ± 0.06", "0.25 ± 0.05", "0.11 ± 0.06"},
        {"DNN", "keywords", "0.81 ± 0.01", "0.84 ± 0.02", "0.66 ± 0.02", "0.72 ± 0.01",
         "0.90 ± 0.00", "0.81 ± 0.01", "0.83 ± 0.01"},
        {"DNN", "transcription", "0.18 ± 0.01", "0.08 ± 0.01", "0.07 ± 0.00", "0.07 ± 0.00",
         "0.16 ± 0.06", "0.18 ± 0.01", "0.17 ± 0.01"},
    };
    return rows;
}

std::string markdown_report(const PipelineConfig& config, const std::string& stopwords_hash,
                            std::size_t corpus_size, const LabelCatalog& catalog,
                            const train::CvResult& result) {
    const auto t = config.resolved_train();
    std::ostringstream out;
    out << "# Medical specialty classification: " << result.folds.size() << "-fold cross-validation\n\n"
        << "- input_field: " << to_string(t.input_field) << "\n"
        << "- L: " << t.seq_len << "\n"
        << "- records after dropping missing " << to_string(t.input_field) << ": " << corpus_size << "\n"
        << "- classes: " << catalog.size() << "\n"
        << "- seed: " << t.seed << "\n\n";

    out << "## Aggregate (mean ± std over " << result.aggregate.k << " folds)\n\n"
        << metrics_table(result.aggregate) << '\n';

    out << "## Per fold\n\n"
        << "| Fold | Train | Test | Vocab | Best epoch | Stopped epoch | Accuracy | Macro F1 | Weighted F1 |\n"
        << "|---|---|---|---|---|---|---|---|---|\n";
    for (std::size_t f = 0; f < result.folds.size(); ++f) {
        const auto& r = result.folds[f];
        out << "| " << f << " | " << r.train_size << " | " << r.test_size << " | " << r.vocab_size << " | "
            << r.history.best_epoch << " | " << r.history.stopped_epoch << " | "
            << two_dp(r.metrics.micro_accuracy) << " | " << two_dp(r.metrics.macro.f1) << " | "
            << two_dp(r.metrics.weighted.f1) << " |\n";
    }

    out << "\n## Reference rows (paper-reported)\n\n"
        << "Published aggregates quoted for comparison. The PubMedBERT and RoBERTa rows are not\n"
        << "reproduced by this tool; language-model fine-tuning is outside its scope.\n\n"
        << "| Source | Model | Input | Accuracy | Macro P | Macro R | Macro F1 | Weighted P | Weighted R | Weighted F1 |\n"
        << "|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : reference_rows()) {
        out << "| paper-reported | " << r.model << " | " << r.input << " | " << r.accuracy << " | "
            << r.macro_precision << " | " << r.macro_recall << " | " << r.macro_f1 << " | "
            << r.weighted_precision << " | " << r.weighted_recall << " | " << r.weighted_f1 << " |\n";
    }

    out << "\n## Configuration\n\n```\n" << render_config(config) << "```\n\n"
        << "stopwords sha256: " << stopwords_hash << "\n\n"
        << "---\n"
        << "Std is the population standard deviation (divisor k). Macro averages include classes\n"
        << "with zero test support; any 0/0 precision, recall or F1 is taken as 0.\n";
    return out.str();
}

}  // namespace medspec::report
