#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace medspec {

/// One dataset row. All six source columns are kept.
struct Record {
    std::int64_t row_id = 0;
    std::string description;
    std::string specialty;  // whitespace-trimmed, never empty
    std::string sample_name;
    std::string transcription;
    std::string keywords;
};

enum class InputField { keywords, transcription };

std::string_view to_string(InputField field);
InputField parse_input_field(std::string_view name);  // throws ConfigError

/// The text of `record` selected by `field`.
const std::string& field_text(const Record& record, InputField field);

/// Reads an mtsamples-format CSV. A leading unnamed column becomes row_id;
/// otherwise row_id is the 0-based data row position.
std::vector<Record> load_corpus(const std::filesystem::path& path);

std::map<std::string, std::size_t> class_histogram(const std::vector<Record>& records);

/// Removes records whose selected field is empty or whitespace-only.
std::vector<Record> drop_missing(const std::vector<Record>& records, InputField field);

/// Bijection between specialty names and class ids, lexicographically ordered.
class LabelCatalog {
public:
    LabelCatalog() = default;
    explicit LabelCatalog(std::vector<std::string> labels);

    std::size_t size() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& name(std::size_t id) const { return labels_.at(id); }

    /// Throws DataError for an unknown label.
    std::size_t id(const std::string& label) const;
    bool contains(const std::string& label) const { return index_.count(label) != 0; }

    bool operator==(const LabelCatalog& other) const { return labels_ == other.labels_; }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, std::size_t> index_;
};

LabelCatalog build_catalog(const std::vector<Record>& records);

/// Fold assignment keyed by row_id.
struct FoldPlan {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::map<std::int64_t, std::size_t> assignment;

    std::size_t fold_of(std::int64_t row_id) const;
    bool operator==(const FoldPlan&) const = default;
};

/// Per class: seeded shuffle of the class members, then round-robin across
/// folds. The round-robin start offset rotates with the running total so that
/// small classes do not all pile into fold 0.
FoldPlan stratified_kfold(const std::vector<Record>& records, const LabelCatalog& catalog,
                          std::size_t k, std::uint64_t seed);

/// Splits `records` into (train, test) for fold `fold`. Records absent from
/// the plan are an error.
std::pair<std::vector<Record>, std::vector<Record>> split_fold(const std::vector<Record>& records,
                                                               const FoldPlan& plan,
                                                               std::size_t fold);

std::string trim(std::string_view text);

}  // namespace medspec
