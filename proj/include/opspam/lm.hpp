#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "opspam/stats.hpp"
#include "opspam/textproc.hpp"

namespace opspam {

// Interpolated Kneser-Ney n-gram model over a fixed shared vocabulary.
//
// Counting canon: documents are padded with order-1 start markers and one
// end marker; the top order keeps raw counts; each lower order holds
// left-extension continuation counts derived from the table one order above;
// the unigram level interpolates with a uniform distribution over the
// prediction vocabulary (everything except the start marker), which is what
// gives the unknown token its floor mass. Every context distribution then
// sums to exactly 1 by construction.
class NgramLM {
public:
    NgramLM() = default;

    // Absolute discount per order D = n1/(n1+2*n2) from that order's
    // counts-of-counts; a degenerate estimate (no singleton mass, or
    // n1+2*n2 = 0) falls back to D = 0.5 and sets discount_fallback().
    static NgramLM train(const std::vector<TokenSeq>& docs, int order, const Vocabulary& vocab);

    int order() const { return order_; }
    const Vocabulary& vocab() const { return *vocab_; }
    bool discount_fallback() const { return discount_fallback_; }
    double discount(int level) const { return discounts_.at(static_cast<std::size_t>(level - 1)); }

    // P(word | context) using the level-(|context|+1) distribution; context
    // holds the most recent |context| token ids, oldest first. |context|
    // must be < order. Start markers are never predicted (probability 0).
    double prob(std::uint32_t word, std::span<const std::uint32_t> context) const;

    // Sum of log P over the marker-padded sequence; OOV mapped to unknown.
    double logprob(const TokenSeq& seq) const;
    double logprob_ids(std::span<const std::uint32_t> ids) const;

    // Contexts with mass at a level (level in [1, order]; a level-k context
    // has k-1 tokens). Sorted; for diagnostics and the normalization tests.
    std::vector<std::vector<std::uint32_t>> observed_contexts(int level) const;

    std::string to_json() const;
    static NgramLM from_json(const std::string& text, const Vocabulary& vocab);

private:
    struct GramHash {
        std::size_t operator()(const std::vector<std::uint32_t>& g) const;
    };
    using GramTable = std::unordered_map<std::vector<std::uint32_t>, long long, GramHash>;

    struct CtxAggregate {
        long long total = 0;  // sum of counts over continuations
        long long types = 0;  // distinct continuations
    };
    using CtxTable = std::unordered_map<std::vector<std::uint32_t>, CtxAggregate, GramHash>;

    void build_derived();
    double prob_at_level(int level, std::uint32_t word,
                         std::span<const std::uint32_t> context) const;

    int order_ = 0;
    const Vocabulary* vocab_ = nullptr;
    std::vector<GramTable> tables_;  // tables_[k-1]: grams of length k
    std::vector<CtxTable> contexts_;
    std::vector<double> discounts_;  // discounts_[k-1]: level-k discount
    bool discount_fallback_ = false;
};

struct ClassLMPair {
    NgramLM truthful_lm;
    NgramLM deceptive_lm;
    double prior_truthful = 0.5;
    double prior_deceptive = 0.5;

    void validate() const;
};

struct MLDecision {
    Label label;
    double margin;  // truthful log score minus deceptive log score
};

// Eq-style decision rule: argmax of log prior + log likelihood per class;
// with a uniform prior this is the pure maximum-likelihood comparison.
// Exact ties go to truthful.
MLDecision classify_ml(const ClassLMPair& pair, const TokenSeq& seq);

}  // namespace opspam
