#include "opspam/textproc.hpp"

#include <algorithm>
#include <cctype>

#include "opspam/io.hpp"

namespace opspam {

namespace {

bool is_space_byte(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct_byte(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

}  // namespace

TokenSeq tokenize(std::string_view text, std::string source_id) {
    TokenSeq seq;
    seq.source_id = std::move(source_id);
    std::string word;
    auto flush_word = [&] {
        if (!word.empty()) {
            seq.tokens.push_back(std::move(word));
            word.clear();
        }
    };

    std::size_t i = 0;
    while (i < text.size()) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (is_space_byte(c)) {
            flush_word();
            ++i;
        } else if (is_punct_byte(c)) {
            flush_word();
            std::size_t run = 1;
            while (i + run < text.size() &&
                   static_cast<unsigned char>(text[i + run]) == c)
                ++run;
            if (c == '.' && run >= 2) {
                seq.tokens.emplace_back(text.substr(i, run));
            } else {
                for (std::size_t k = 0; k < run; ++k)
                    seq.tokens.emplace_back(1, static_cast<char>(c));
            }
            i += run;
        } else {
            word += c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
            ++i;
        }
    }
    flush_word();
    return seq;
}

std::string join_ngram(std::span<const std::string> window) {
    std::string out;
    for (std::size_t i = 0; i < window.size(); ++i) {
        if (i > 0) out += '_';
        out += window[i];
    }
    return out;
}

std::vector<std::string> ngrams(const TokenSeq& seq, int n, bool with_markers) {
    if (n < 1) throw Error("ngrams: order must be >= 1");
    std::vector<std::string> padded;
    const std::vector<std::string>* tokens = &seq.tokens;
    if (with_markers) {
        padded.reserve(seq.tokens.size() + static_cast<std::size_t>(n));
        for (int i = 0; i < n - 1; ++i) padded.emplace_back(kSeqStart);
        padded.insert(padded.end(), seq.tokens.begin(), seq.tokens.end());
        padded.emplace_back(kSeqEnd);
        tokens = &padded;
    }
    std::vector<std::string> out;
    if (tokens->size() < static_cast<std::size_t>(n)) return out;
    std::size_t count = tokens->size() - static_cast<std::size_t>(n) + 1;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(join_ngram(std::span(tokens->data() + i, static_cast<std::size_t>(n))));
    return out;
}

Vocabulary Vocabulary::build(const std::vector<TokenSeq>& docs, std::uint64_t min_count) {
    if (min_count < 1) throw Error("build_vocab: min_count must be >= 1");
    std::unordered_map<std::string, std::uint64_t> freq;
    for (const TokenSeq& d : docs)
        for (const std::string& t : d.tokens) ++freq[t];

    std::vector<std::pair<std::string, std::uint64_t>> kept;
    kept.reserve(freq.size());
    for (auto& [tok, n] : freq)
        if (n >= min_count) kept.emplace_back(tok, n);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary v;
    v.tokens_.emplace_back(kSeqStart);
    v.tokens_.emplace_back(kSeqEnd);
    v.tokens_.emplace_back(kUnknown);
    for (auto& [tok, n] : kept) v.tokens_.push_back(tok);
    for (std::uint32_t i = 0; i < v.tokens_.size(); ++i) v.index_[v.tokens_[i]] = i;
    if (v.index_.size() != v.tokens_.size())
        throw Error("build_vocab: corpus contains a reserved token");
    return v;
}

std::uint32_t Vocabulary::index_of(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
    return index_.find(std::string(token)) != index_.end();
}

std::vector<std::uint32_t> Vocabulary::map(const TokenSeq& seq) const {
    std::vector<std::uint32_t> ids;
    ids.reserve(seq.tokens.size());
    for (const std::string& t : seq.tokens) ids.push_back(index_of(t));
    return ids;
}

std::uint64_t Vocabulary::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const std::string& t : tokens_) {
        h = fnv1a(t, h);
        h = fnv1a("\n", h);
    }
    return h;
}

std::string Vocabulary::dump() const {
    std::string out;
    for (const std::string& t : tokens_) {
        out += t;
        out += '\n';
    }
    return out;
}

}  // namespace opspam
