#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "opspam/textproc.hpp"

namespace opspam {

// Named, block-structured index space for sparse feature vectors.
class FeatureSpace {
public:
    struct Block {
        std::string name;
        std::uint32_t begin = 0;
        std::uint32_t end = 0;  // half-open
    };

    static FeatureSpace from_names(const std::string& block_name,
                                   std::vector<std::string> names);
    static FeatureSpace concat(const std::vector<const FeatureSpace*>& parts);
    // inverse of dump()
    static FeatureSpace from_dump(std::string_view text, std::string_view source_name);

    std::uint32_t size() const { return static_cast<std::uint32_t>(names_.size()); }
    const std::string& name(std::uint32_t i) const { return names_.at(i); }
    // -1 when the name is not in the space
    std::int64_t index_of(std::string_view name) const;
    const std::vector<Block>& blocks() const { return blocks_; }
    const Block& block(std::string_view name) const;

    std::uint64_t hash() const;

    // "index<TAB>block<TAB>name" per line
    std::string dump() const;

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<Block> blocks_;
};

struct SparseVector {
    std::vector<std::uint32_t> idx;  // strictly increasing
    std::vector<double> val;         // nonzero
    std::uint64_t space_hash = 0;
    bool unit_normalized = false;

    std::size_t nnz() const { return idx.size(); }
    double l2_norm() const;
    // scales to unit length; a zero vector is left as-is and reported
    bool normalize();
    void set(std::uint32_t i, double v);  // build helper; keeps idx sorted
    double dot(const SparseVector& other) const;
};

// Bag of in-space n-grams of orders 1..max_order (no sequence markers), raw
// counts then L2-normalized. Out-of-space n-grams are dropped, so test
// documents never mint indices. normalize=false leaves raw counts (for
// per-block normalization in combine_blocks).
SparseVector ngram_vector(const TokenSeq& seq, const FeatureSpace& space, int max_order,
                          bool normalize = true);

// n-gram feature space from training documents only; block name "ngram".
FeatureSpace build_ngram_space(const std::vector<TokenSeq>& train_docs, int max_order,
                               std::uint64_t min_count = 1);

// ---- POS genre features ----

struct TaggedSeq {
    std::vector<std::pair<std::string, std::string>> pairs;  // (token, TAG)
    std::string source_id;
};

// The Penn Treebank tagset (word tags + punctuation tags), fixed order.
const std::vector<std::string>& penn_treebank_tags();

// "token<TAB>TAG" lines, blank line between documents. Document order must
// match the corpus the tags annotate.
std::vector<TaggedSeq> load_tagged_file(const std::filesystem::path& path,
                                        const std::vector<std::string>& tagset);

// Relative frequency of each tag; sums to 1.
std::vector<double> pos_frequencies(const TaggedSeq& tagged,
                                    const std::vector<std::string>& tagset);

// Unit-normalized tag-frequency vector over the "pos" space.
SparseVector pos_vector(const TaggedSeq& tagged, const FeatureSpace& pos_space,
                        const std::vector<std::string>& tagset);

FeatureSpace build_pos_space(const std::vector<std::string>& tagset);

// ---- Lexicon (psycholinguistic dictionary) features ----

// Dictionary format: a header section delimited by lines containing only
// "%", rows "id<TAB>name" (optional third field "punct:<chars>" declares a
// punctuation-class category); body rows "pattern<TAB>id[<TAB>id...]" where
// a trailing '*' makes the pattern a prefix wildcard.
class Lexicon {
public:
    static Lexicon load(const std::filesystem::path& path);
    static Lexicon parse(std::string_view text, std::string_view source_name);

    std::size_t category_count() const { return categories_.size(); }
    const std::vector<std::string>& categories() const { return categories_; }

    // category ids hit by a token: exact literal match wins, else the
    // longest wildcard prefix. Punctuation-class categories are handled
    // separately (per character) by lexicon_vector.
    std::span<const std::uint32_t> match(std::string_view token) const;

    const std::string& punct_class(std::uint32_t category) const {
        return punct_classes_.at(category);
    }

    std::size_t entry_count() const { return entries_.size(); }

    // canonical text form; parse(dump()) == dump-identical
    std::string dump() const;

private:
    struct Entry {
        std::string pattern;  // without the trailing '*'
        bool wildcard = false;
        std::vector<std::uint32_t> category_ids;
    };
    struct TrieNode {
        std::map<char, std::uint32_t> children;
        std::int32_t wildcard_entry = -1;  // entry whose prefix ends here
        std::int32_t literal_entry = -1;
    };

    void build_trie();

    std::vector<std::string> categories_;
    std::vector<std::string> punct_classes_;  // empty string = keyword category
    std::vector<Entry> entries_;
    std::vector<TrieNode> trie_;
};

// Per-category rates: matched-entry counts (and punctuation-class character
// counts) divided by token count.
std::vector<double> lexicon_rates(const TokenSeq& seq, const Lexicon& lexicon);

// The rates as a sparse vector, unit-normalized for SVM use.
SparseVector lexicon_vector(const TokenSeq& seq, const Lexicon& lexicon,
                            const FeatureSpace& lexicon_space, bool normalize = true);

FeatureSpace build_lexicon_space(const Lexicon& lexicon);

// ---- block combination ----

// Each nonzero block is L2-normalized independently, then placed at its
// block's offset in the combined space. The result is not re-normalized.
SparseVector combine_blocks(const FeatureSpace& combined,
                            const std::vector<std::pair<std::string, SparseVector>>& blocks);

// Restrict a combined vector back to one block (indices rebased to 0).
SparseVector slice_block(const FeatureSpace& combined, const SparseVector& v,
                         std::string_view block_name);

}  // namespace opspam
