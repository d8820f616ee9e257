#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace medspec::csv {

/// Streaming reader for comma-delimited, double-quote-quoted CSV.
/// Quoted cells may contain commas, doubled quotes and line breaks.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    /// Next record, or nullopt at end of input. Throws DataError on an
    /// unterminated quoted cell.
    std::optional<std::vector<std::string>> next();

    /// 1-based physical line on which the most recently returned record began.
    std::size_t record_line() const { return record_line_; }

private:
    std::istream& in_;
    std::size_t line_ = 1;
    std::size_t record_line_ = 0;
};

}  // namespace medspec::csv
