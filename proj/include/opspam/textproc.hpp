#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace opspam {

inline constexpr std::string_view kSeqStart = "<s>";
inline constexpr std::string_view kSeqEnd = "</s>";
inline constexpr std::string_view kUnknown = "<unk>";

struct TokenSeq {
    std::vector<std::string> tokens;
    std::string source_id;
};

// Lowercased, unstemmed, whitespace-split tokens with punctuation separated
// out. Canonical punctuation rules: a run of two or more '.' stays one token
// ("...", ".."); every other punctuation character becomes its own
// single-character token ("!!" -> "!", "!"). Currency symbols and hyphens
// therefore survive as standalone tokens. Non-ASCII bytes are treated as
// word characters and left unchanged.
TokenSeq tokenize(std::string_view text, std::string source_id = "");

// Contiguous n-token windows, each joined with '_' ("my_husband"). With
// markers, the sequence is padded with n-1 start tokens and one end token
// first. Marker padding is the language-model convention; bag-of-n-gram
// features use with_markers=false.
std::vector<std::string> ngrams(const TokenSeq& seq, int n, bool with_markers);

std::string join_ngram(std::span<const std::string> window);

class Vocabulary {
public:
    static constexpr std::uint32_t kStartId = 0;
    static constexpr std::uint32_t kEndId = 1;
    static constexpr std::uint32_t kUnkId = 2;

    // Tokens with corpus frequency >= min_count, indexed after the reserved
    // triple in frequency-descending then lexicographic order.
    static Vocabulary build(const std::vector<TokenSeq>& docs, std::uint64_t min_count = 1);

    std::uint32_t size() const { return static_cast<std::uint32_t>(tokens_.size()); }
    const std::string& token(std::uint32_t id) const { return tokens_.at(id); }

    // Unknown tokens map to kUnkId.
    std::uint32_t index_of(std::string_view token) const;
    bool contains(std::string_view token) const;

    std::vector<std::uint32_t> map(const TokenSeq& seq) const;

    std::uint64_t hash() const;

    // One token per line (index order), for debugging and oracle comparison.
    std::string dump() const;

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

}  // namespace opspam
