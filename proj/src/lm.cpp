#include "opspam/lm.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "opspam/io.hpp"

namespace opspam {

namespace {

constexpr int kJsonVersion = 1;

std::vector<std::uint32_t> padded_ids(const Vocabulary& vocab, const TokenSeq& seq, int order) {
    std::vector<std::uint32_t> ids;
    ids.reserve(seq.tokens.size() + static_cast<std::size_t>(order));
    for (int i = 0; i < order - 1; ++i) ids.push_back(Vocabulary::kStartId);
    for (const std::string& t : seq.tokens) ids.push_back(vocab.index_of(t));
    ids.push_back(Vocabulary::kEndId);
    return ids;
}

std::vector<std::uint32_t> pad_raw_ids(std::span<const std::uint32_t> raw, int order) {
    std::vector<std::uint32_t> ids;
    ids.reserve(raw.size() + static_cast<std::size_t>(order));
    for (int i = 0; i < order - 1; ++i) ids.push_back(Vocabulary::kStartId);
    ids.insert(ids.end(), raw.begin(), raw.end());
    ids.push_back(Vocabulary::kEndId);
    return ids;
}

}  // namespace

std::size_t NgramLM::GramHash::operator()(const std::vector<std::uint32_t>& g) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint32_t v : g) {
        for (int b = 0; b < 4; ++b) {
            h ^= (v >> (8 * b)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    }
    return static_cast<std::size_t>(h);
}

NgramLM NgramLM::train(const std::vector<TokenSeq>& docs, int order, const Vocabulary& vocab) {
    if (order < 1) throw Error("train_kn: order must be >= 1");
    if (docs.empty()) throw Error("train_kn: no training documents (no usable windows)");

    NgramLM lm;
    lm.order_ = order;
    lm.vocab_ = &vocab;
    lm.tables_.resize(static_cast<std::size_t>(order));

    // raw counts at the top order
    GramTable& top = lm.tables_[static_cast<std::size_t>(order - 1)];
    for (const TokenSeq& doc : docs) {
        std::vector<std::uint32_t> ids = padded_ids(vocab, doc, order);
        std::size_t windows = ids.size() - static_cast<std::size_t>(order) + 1;
        for (std::size_t i = 0; i < windows; ++i)
            ++top[std::vector<std::uint32_t>(ids.begin() + static_cast<std::ptrdiff_t>(i),
                                             ids.begin() + static_cast<std::ptrdiff_t>(i + static_cast<std::size_t>(order)))];
    }

    // left-extension continuation counts, each level from the one above
    for (int k = order - 1; k >= 1; --k) {
        GramTable& lower = lm.tables_[static_cast<std::size_t>(k - 1)];
        const GramTable& upper = lm.tables_[static_cast<std::size_t>(k)];
        for (const auto& [gram, count] : upper) {
            (void)count;  // distinct types, not frequencies
            ++lower[std::vector<std::uint32_t>(gram.begin() + 1, gram.end())];
        }
    }

    lm.build_derived();
    return lm;
}

void NgramLM::build_derived() {
    contexts_.assign(static_cast<std::size_t>(order_), CtxTable{});
    discounts_.assign(static_cast<std::size_t>(order_), 0.0);
    discount_fallback_ = false;

    for (int k = 1; k <= order_; ++k) {
        const GramTable& table = tables_[static_cast<std::size_t>(k - 1)];
        CtxTable& ctx = contexts_[static_cast<std::size_t>(k - 1)];
        long long n1 = 0, n2 = 0;
        for (const auto& [gram, count] : table) {
            if (count == 1) ++n1;
            if (count == 2) ++n2;
            CtxAggregate& agg = ctx[std::vector<std::uint32_t>(gram.begin(), gram.end() - 1)];
            agg.total += count;
            agg.types += 1;
        }
        double d;
        if (n1 == 0) {
            // n1+2*n2 == 0, or a zero discount that would strand the
            // lower-order mass; either way estimation is degenerate here
            d = 0.5;
            discount_fallback_ = true;
        } else {
            d = static_cast<double>(n1) / static_cast<double>(n1 + 2 * n2);
        }
        discounts_[static_cast<std::size_t>(k - 1)] = d;
    }
}

double NgramLM::prob_at_level(int level, std::uint32_t word,
                              std::span<const std::uint32_t> context) const {
    if (word == Vocabulary::kStartId) return 0.0;
    if (level == 0) {
        // uniform over the prediction vocabulary (all but the start marker)
        return 1.0 / static_cast<double>(vocab_->size() - 1);
    }
    const CtxTable& ctx = contexts_[static_cast<std::size_t>(level - 1)];
    std::vector<std::uint32_t> h(context.begin(), context.end());
    auto cit = ctx.find(h);
    auto lower_context = context.empty() ? context : context.subspan(1);
    if (cit == ctx.end()) return prob_at_level(level - 1, word, lower_context);

    const CtxAggregate& agg = cit->second;
    double total = static_cast<double>(agg.total);
    double d = discounts_[static_cast<std::size_t>(level - 1)];

    h.push_back(word);
    const GramTable& table = tables_[static_cast<std::size_t>(level - 1)];
    auto git = table.find(h);
    double count = git == table.end() ? 0.0 : static_cast<double>(git->second);

    double discounted = std::max(count - d, 0.0) / total;
    double lambda = d * static_cast<double>(agg.types) / total;
    return discounted + lambda * prob_at_level(level - 1, word, lower_context);
}

double NgramLM::prob(std::uint32_t word, std::span<const std::uint32_t> context) const {
    if (order_ == 0) throw Error("lm: model not trained");
    if (context.size() >= static_cast<std::size_t>(order_))
        throw Error("lm: context longer than order-1");
    if (word >= vocab_->size()) throw Error("lm: word id out of vocabulary");
    return prob_at_level(static_cast<int>(context.size()) + 1, word, context);
}

double NgramLM::logprob_ids(std::span<const std::uint32_t> ids) const {
    if (order_ == 0) throw Error("lm: model not trained");
    std::vector<std::uint32_t> mapped(ids.begin(), ids.end());
    for (std::uint32_t& v : mapped)
        if (v >= vocab_->size()) v = Vocabulary::kUnkId;
    std::vector<std::uint32_t> padded = pad_raw_ids(mapped, order_);
    double lp = 0.0;
    for (std::size_t i = static_cast<std::size_t>(order_ - 1); i < padded.size(); ++i) {
        std::span<const std::uint32_t> ctx(padded.data() + i - static_cast<std::size_t>(order_ - 1),
                                           static_cast<std::size_t>(order_ - 1));
        lp += std::log(prob_at_level(order_, padded[i], ctx));
    }
    return lp;
}

double NgramLM::logprob(const TokenSeq& seq) const {
    if (order_ == 0) throw Error("lm: model not trained");
    std::vector<std::uint32_t> ids = vocab_->map(seq);
    return logprob_ids(ids);
}

std::vector<std::vector<std::uint32_t>> NgramLM::observed_contexts(int level) const {
    if (level < 1 || level > order_) throw Error("lm: level out of range");
    std::vector<std::vector<std::uint32_t>> out;
    for (const auto& [h, agg] : contexts_[static_cast<std::size_t>(level - 1)]) {
        (void)agg;
        out.push_back(h);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string NgramLM::to_json() const {
    nlohmann::json j;
    j["version"] = kJsonVersion;
    j["order"] = order_;
    j["vocab_hash"] = hex64(vocab_->hash());
    j["discounts"] = discounts_;
    j["discount_fallback"] = discount_fallback_;
    // only the top-order raw counts are stored; lower orders re-derive
    std::vector<std::pair<std::vector<std::uint32_t>, long long>> grams(
        tables_.back().begin(), tables_.back().end());
    std::sort(grams.begin(), grams.end());
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [gram, count] : grams) {
        nlohmann::json entry = nlohmann::json::array();
        entry.push_back(gram);
        entry.push_back(count);
        arr.push_back(std::move(entry));
    }
    j["top_counts"] = std::move(arr);
    return j.dump();
}

NgramLM NgramLM::from_json(const std::string& text, const Vocabulary& vocab) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != kJsonVersion)
        throw Error("lm: unsupported model version");
    if (j.at("vocab_hash").get<std::string>() != hex64(vocab.hash()))
        throw Error("lm: vocabulary hash mismatch");

    NgramLM lm;
    lm.order_ = j.at("order").get<int>();
    if (lm.order_ < 1) throw Error("lm: bad order in model file");
    lm.vocab_ = &vocab;
    lm.tables_.resize(static_cast<std::size_t>(lm.order_));
    GramTable& top = lm.tables_[static_cast<std::size_t>(lm.order_ - 1)];
    for (const auto& entry : j.at("top_counts")) {
        std::vector<std::uint32_t> gram = entry.at(0).get<std::vector<std::uint32_t>>();
        if (gram.size() != static_cast<std::size_t>(lm.order_))
            throw Error("lm: gram length mismatch in model file");
        top[std::move(gram)] = entry.at(1).get<long long>();
    }
    for (int k = lm.order_ - 1; k >= 1; --k) {
        GramTable& lower = lm.tables_[static_cast<std::size_t>(k - 1)];
        const GramTable& upper = lm.tables_[static_cast<std::size_t>(k)];
        for (const auto& [gram, count] : upper) {
            (void)count;
            ++lower[std::vector<std::uint32_t>(gram.begin() + 1, gram.end())];
        }
    }
    lm.build_derived();

    auto stored = j.at("discounts").get<std::vector<double>>();
    if (stored != lm.discounts_) throw Error("lm: stored discounts disagree with recomputation");
    return lm;
}

void ClassLMPair::validate() const {
    if (truthful_lm.order() != deceptive_lm.order())
        throw Error("class LM pair: orders differ");
    if (truthful_lm.vocab().hash() != deceptive_lm.vocab().hash())
        throw Error("class LM pair: vocabularies differ");
    if (!(prior_truthful > 0.0 && prior_deceptive > 0.0))
        throw Error("class LM pair: priors must be positive");
    if (std::fabs(prior_truthful + prior_deceptive - 1.0) > 1e-12)
        throw Error("class LM pair: priors must sum to 1");
}

MLDecision classify_ml(const ClassLMPair& pair, const TokenSeq& seq) {
    pair.validate();
    // the prior term is log(pt/pd), exactly 0 under a uniform prior, so the
    // decision then reduces to the pure likelihood comparison identically
    double prior_term = pair.prior_truthful == pair.prior_deceptive
                            ? 0.0
                            : std::log(pair.prior_truthful / pair.prior_deceptive);
    double margin = prior_term + pair.truthful_lm.logprob(seq) - pair.deceptive_lm.logprob(seq);
    return {margin >= 0.0 ? Label::truthful : Label::deceptive, margin};
}

}  // namespace opspam
