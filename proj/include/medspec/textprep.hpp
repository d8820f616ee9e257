#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace medspec {

using Tokens = std::vector<std::string>;
using TokenId = std::int32_t;

/// Fixed stopword list, one lowercase word per line; `#` lines are comments.
class StopwordList {
public:
    StopwordList() = default;
    explicit StopwordList(std::vector<std::string> words);

    static StopwordList load(const std::filesystem::path& path);

    bool contains(std::string_view token) const;
    std::size_t size() const { return words_.size(); }
    /// Sorted, deduplicated words.
    const std::vector<std::string>& words() const { return words_; }
    /// Hex SHA-256 of the sorted word list joined by '\n'.
    std::string content_hash() const;

private:
    std::vector<std::string> words_;
    std::unordered_set<std::string> lookup_;
};

/// Lowercases ASCII, turns every byte that is not an ASCII letter or digit
/// into a separator, splits, and drops stopwords.
Tokens normalize(std::string_view text, const StopwordList& stopwords);

class Vocabulary {
public:
    static constexpr TokenId kPad = 0;
    static constexpr TokenId kUnk = 1;
    static constexpr std::string_view kPadToken = "<pad>";
    static constexpr std::string_view kUnkToken = "<unk>";

    Vocabulary();

    /// Rebuilds from an id-ordered token list whose first two entries are the
    /// reserved tokens.
    static Vocabulary from_tokens(std::vector<std::string> tokens, std::size_t min_count);

    std::size_t size() const { return tokens_.size(); }
    std::size_t min_count() const { return min_count_; }
    TokenId lookup(const std::string& token) const;
    const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    bool operator==(const Vocabulary& other) const {
        return tokens_ == other.tokens_ && min_count_ == other.min_count_;
    }

private:
    friend Vocabulary build_vocab(const std::vector<Tokens>&, std::size_t);
    void add(std::string token);

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
    std::size_t min_count_ = 1;
};

/// Tokens with count >= min_count get ids 2.. by descending count, ties broken
/// lexicographically.
Vocabulary build_vocab(const std::vector<Tokens>& sequences, std::size_t min_count = 1);

/// First min(|tokens|, length) tokens mapped through `vocab` (unknown -> UNK),
/// padded with PAD to exactly `length`.
std::vector<TokenId> encode(const Tokens& tokens, const Vocabulary& vocab, std::size_t length);

/// Truncation length bound to each input field.
constexpr std::size_t default_sequence_length(bool keywords) { return keywords ? 15 : 120; }

}  // namespace medspec
