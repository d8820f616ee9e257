#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "medspec/config.hpp"
#include "medspec/corpus.hpp"
#include "medspec/eval.hpp"
#include "medspec/train.hpp"

namespace medspec::report {

/// Long format: fold,scope,label,metric,value. One row per class metric
/// (precision, recall, f1, support) followed by the summary metrics.
std::string fold_csv(std::size_t fold, const eval::MetricsReport& metrics, const LabelCatalog& catalog);

/// Columns: metric,<one column per fold>,mean,std,k.
std::string aggregate_csv(const train::CvResult& result);

/// Accuracy / Macro avg / Weighted avg rows with "mean ± std" cells.
std::string metrics_table(const eval::FoldAggregate& aggregate);

/// Published aggregates, quoted verbatim as static reference rows.
struct ReferenceRow {
    std::string model;
    std::string input;
    std::string accuracy;
    std::string macro_precision, macro_recall, macro_f1;
    std::string weighted_precision, weighted_recall, weighted_f1;
};
const std::vector<ReferenceRow>& reference_rows();

std::string markdown_report(const PipelineConfig& config, const std::string& stopwords_hash,
                            std::size_t corpus_size, const LabelCatalog& catalog,
                            const train::CvResult& result);

}  // namespace medspec::report
