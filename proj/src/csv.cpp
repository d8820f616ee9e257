#include "medspec/csv.hpp"

#include "medspec/error.hpp"

namespace medspec::csv {

std::optional<std::vector<std::string>> Reader::next() {
    int c = in_.get();
    if (c == std::char_traits<char>::eof()) {
        return std::nullopt;
    }
    record_line_ = line_;

    std::vector<std::string> fields;
    std::string cell;
    bool quoted = false;
    bool after_quote = false;  // closing quote seen, expecting delimiter

    for (;; c = in_.get()) {
        if (c == std::char_traits<char>::eof()) {
            if (quoted) {
                throw DataError("unterminated quoted cell starting on line " +
                                std::to_string(record_line_));
            }
            fields.push_back(std::move(cell));
            return fields;
        }
        const char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    cell.push_back('"');
                } else {
                    quoted = false;
                    after_quote = true;
                }
            } else {
                if (ch == '\n') {
                    ++line_;
                }
                cell.push_back(ch);
            }
            continue;
        }
        switch (ch) {
            case ',':
                fields.push_back(std::move(cell));
                cell.clear();
                after_quote = false;
                break;
            case '\r':
                if (in_.peek() == '\n') {
                    break;
                }
                [[fallthrough]];
            case '\n':
                ++line_;
                fields.push_back(std::move(cell));
                return fields;
            case '"':
                if (cell.empty() && !after_quote) {
                    quoted = true;
                } else {
                    // Stray quote inside an unquoted cell is kept verbatim.
                    cell.push_back(ch);
                }
                break;
            default:
                cell.push_back(ch);
        }
    }
}

}  // namespace medspec::csv
