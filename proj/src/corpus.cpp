#include "medspec/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <set>

#include "medspec/csv.hpp"
#include "medspec/error.hpp"

namespace medspec {

namespace {

constexpr std::string_view kWhitespace = " \t\r\n\v\f";

bool is_blank(std::string_view text) {
    return text.find_first_not_of(kWhitespace) == std::string_view::npos;
}

std::int64_t parse_row_id(const std::string& cell, std::size_t line) {
    const std::string text = trim(cell);
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || value < 0) {
        throw DataError("line " + std::to_string(line) + ": index column value '" + cell +
                        "' is not a non-negative integer");
    }
    return value;
}

}  // namespace

std::string trim(std::string_view text) {
    const auto first = text.find_first_not_of(kWhitespace);
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = text.find_last_not_of(kWhitespace);
    return std::string(text.substr(first, last - first + 1));
}

std::string_view to_string(InputField field) {
    return field == InputField::keywords ? "keywords" : "transcription";
}

InputField parse_input_field(std::string_view name) {
    if (name == "keywords") {
        return InputField::keywords;
    }
    if (name == "transcription") {
        return InputField::transcription;
    }
    throw ConfigError("input_field must be 'keywords' or 'transcription', got '" +
                      std::string(name) + "'");
}

const std::string& field_text(const Record& record, InputField field) {
    return field == InputField::keywords ? record.keywords : record.transcription;
}

std::vector<Record> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open dataset '" + path.string() + "'");
    }
    csv::Reader reader(in);
    const auto header = reader.next();
    if (!header) {
        throw DataError("dataset '" + path.string() + "' has no header row");
    }

    const auto column = [&](std::string_view name) -> std::size_t {
        const auto it = std::find_if(header->begin(), header->end(),
                                     [&](const std::string& h) { return trim(h) == name; });
        if (it == header->end()) {
            throw DataError("dataset '" + path.string() + "' is missing required column '" +
                            std::string(name) + "'");
        }
        return static_cast<std::size_t>(it - header->begin());
    };
    const std::size_t col_description = column("description");
    const std::size_t col_specialty = column("medical_specialty");
    const std::size_t col_sample = column("sample_name");
    const std::size_t col_transcription = column("transcription");
    const std::size_t col_keywords = column("keywords");
    const bool has_index = trim(header->front()).empty();

    std::vector<Record> records;
    std::set<std::int64_t> seen_ids;
    while (auto row = reader.next()) {
        const std::size_t line = reader.record_line();
        if (row->size() == 1 && row->front().empty()) {
            continue;  // blank line
        }
        if (row->size() != header->size()) {
            throw DataError("malformed CSV row at line " + std::to_string(line) + ": expected " +
                            std::to_string(header->size()) + " fields, found " +
                            std::to_string(row->size()));
        }
        Record record;
        record.row_id = has_index ? parse_row_id(row->front(), line)
                                  : static_cast<std::int64_t>(records.size());
        if (!seen_ids.insert(record.row_id).second) {
            throw DataError("line " + std::to_string(line) + ": duplicate row id " +
                            std::to_string(record.row_id));
        }
        record.description = std::move((*row)[col_description]);
        record.specialty = trim((*row)[col_specialty]);
        record.sample_name = std::move((*row)[col_sample]);
        record.transcription = std::move((*row)[col_transcription]);
        record.keywords = std::move((*row)[col_keywords]);
        if (record.specialty.empty()) {
            throw DataError("line " + std::to_string(line) + ": empty medical_specialty");
        }
        records.push_back(std::move(record));
    }
    return records;
}

std::map<std::string, std::size_t> class_histogram(const std::vector<Record>& records) {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : records) {
        ++counts[trim(r.specialty)];
    }
    return counts;
}

std::vector<Record> drop_missing(const std::vector<Record>& records, InputField field) {
    std::vector<Record> kept;
    kept.reserve(records.size());
    std::copy_if(records.begin(), records.end(), std::back_inserter(kept),
                 [field](const Record& r) { return !is_blank(field_text(r, field)); });
    return kept;
}

LabelCatalog::LabelCatalog(std::vector<std::string> labels) : labels_(std::move(labels)) {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (!index_.emplace(labels_[i], i).second) {
            throw DataError("duplicate label '" + labels_[i] + "' in catalog");
        }
    }
}

std::size_t LabelCatalog::id(const std::string& label) const {
    const auto it = index_.find(label);
    if (it == index_.end()) {
        throw DataError("label '" + label + "' is not in the catalog");
    }
    return it->second;
}

LabelCatalog build_catalog(const std::vector<Record>& records) {
    if (records.empty()) {
        throw DataError("cannot build a label catalog from an empty corpus");
    }
    std::set<std::string> distinct;
    for (const auto& r : records) {
        distinct.insert(trim(r.specialty));
    }
    return LabelCatalog({distinct.begin(), distinct.end()});
}

std::size_t FoldPlan::fold_of(std::int64_t row_id) const {
    const auto it = assignment.find(row_id);
    if (it == assignment.end()) {
        throw DataError("row " + std::to_string(row_id) + " has no fold assignment");
    }
    return it->second;
}

FoldPlan stratified_kfold(const std::vector<Record>& records, const LabelCatalog& catalog,
                          std::size_t k, std::uint64_t seed) {
    if (k < 2) {
        throw ConfigError("stratified_kfold requires k >= 2, got " + std::to_string(k));
    }
    std::vector<std::vector<std::int64_t>> members(catalog.size());
    for (const auto& r : records) {
        members[catalog.id(r.specialty)].push_back(r.row_id);
    }

    FoldPlan plan{k, seed, {}};
    std::size_t offset = 0;
    for (std::size_t c = 0; c < members.size(); ++c) {
        auto& ids = members[c];
        std::sort(ids.begin(), ids.end());
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(c)};
        std::mt19937_64 rng(seq);
        std::shuffle(ids.begin(), ids.end(), rng);
        for (std::size_t j = 0; j < ids.size(); ++j) {
            plan.assignment[ids[j]] = (offset + j) % k;
        }
        offset = (offset + ids.size()) % k;
    }
    return plan;
}

std::pair<std::vector<Record>, std::vector<Record>> split_fold(const std::vector<Record>& records,
                                                               const FoldPlan& plan,
                                                               std::size_t fold) {
    std::pair<std::vector<Record>, std::vector<Record>> out;
    for (const auto& r : records) {
        (plan.fold_of(r.row_id) == fold ? out.second : out.first).push_back(r);
    }
    return out;
}

}  // namespace medspec
