#include "medspec/textprep.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <map>

#include "medspec/corpus.hpp"
#include "medspec/error.hpp"

namespace medspec {

namespace {

bool is_alnum(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

char lower(unsigned char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

}  // namespace

StopwordList::StopwordList(std::vector<std::string> words) : words_(std::move(words)) {
    std::sort(words_.begin(), words_.end());
    words_.erase(std::unique(words_.begin(), words_.end()), words_.end());
    lookup_.insert(words_.begin(), words_.end());
}

StopwordList StopwordList::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open stopword list '" + path.string() + "'");
    }
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        std::string word = trim(line);
        if (word.empty() || word.front() == '#') {
            continue;
        }
        std::transform(word.begin(), word.end(), word.begin(),
                       [](unsigned char c) { return lower(c); });
        words.push_back(std::move(word));
    }
    return StopwordList(std::move(words));
}

bool StopwordList::contains(std::string_view token) const {
    return lookup_.count(std::string(token)) != 0;
}

std::string StopwordList::content_hash() const {
    std::string joined;
    for (const auto& w : words_) {
        joined += w;
        joined += '\n';
    }
    return sha256_hex(joined);
}

Tokens normalize(std::string_view text, const StopwordList& stopwords) {
    Tokens tokens;
    std::string current;
    const auto flush = [&] {
        if (!current.empty() && !stopwords.contains(current)) {
            tokens.push_back(current);
        }
        current.clear();
    };
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_alnum(c)) {
            current.push_back(lower(c));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

Vocabulary::Vocabulary() {
    add(std::string(kPadToken));
    add(std::string(kUnkToken));
}

void Vocabulary::add(std::string token) {
    const auto id = static_cast<TokenId>(tokens_.size());
    index_.emplace(token, id);
    tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, std::size_t min_count) {
    if (tokens.size() < 2 || tokens[0] != kPadToken || tokens[1] != kUnkToken) {
        throw DataError("vocabulary must start with the reserved <pad> and <unk> tokens");
    }
    Vocabulary vocab;
    vocab.min_count_ = min_count;
    for (std::size_t i = 2; i < tokens.size(); ++i) {
        if (vocab.index_.count(tokens[i]) != 0) {
            throw DataError("duplicate vocabulary token '" + tokens[i] + "'");
        }
        vocab.add(std::move(tokens[i]));
    }
    return vocab;
}

TokenId Vocabulary::lookup(const std::string& token) const {
    const auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

Vocabulary build_vocab(const std::vector<Tokens>& sequences, std::size_t min_count) {
    if (min_count < 1) {
        throw ConfigError("min_count must be >= 1");
    }
    std::map<std::string, std::size_t> counts;
    for (const auto& seq : sequences) {
        for (const auto& tok : seq) {
            ++counts[tok];
        }
    }
    // Reserved spellings cannot be produced by normalize(), but guard anyway.
    counts.erase(std::string(Vocabulary::kPadToken));
    counts.erase(std::string(Vocabulary::kUnkToken));

    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [tok, n] : counts) {
        if (n >= min_count) {
            kept.emplace_back(tok, n);
        }
    }
    // counts is already lexicographic, so a stable sort on count keeps the tie order.
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    Vocabulary vocab;
    vocab.min_count_ = min_count;
    for (auto& [tok, n] : kept) {
        vocab.add(std::move(tok));
    }
    return vocab;
}

std::vector<TokenId> encode(const Tokens& tokens, const Vocabulary& vocab, std::size_t length) {
    if (length < 1) {
        throw ConfigError("sequence length must be >= 1");
    }
    std::vector<TokenId> ids(length, Vocabulary::kPad);
    const std::size_t n = std::min(tokens.size(), length);
    for (std::size_t i = 0; i < n; ++i) {
        ids[i] = vocab.lookup(tokens[i]);
    }
    return ids;
}

}  // namespace medspec
