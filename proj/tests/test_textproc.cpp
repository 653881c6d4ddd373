#include "opspam/textproc.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "doctest.h"
#include "opspam/io.hpp"

using namespace opspam;

namespace {

std::vector<std::string> toks(const char* text) { return tokenize(text).tokens; }

}  // namespace

TEST_CASE("tokenize lowercases and splits punctuation") {
    CHECK(toks("The rooms are BEAUTIFUL!!") ==
          std::vector<std::string>{"the", "rooms", "are", "beautiful", "!", "!"});
    CHECK(toks("").empty());
    CHECK(toks("   \t\n ").empty());
}

TEST_CASE("tokenize keeps ellipses merged but splits other runs") {
    CHECK(toks("wait...") == std::vector<std::string>{"wait", "..."});
    CHECK(toks("so..") == std::vector<std::string>{"so", ".."});
    CHECK(toks("end.") == std::vector<std::string>{"end", "."});
    CHECK(toks("what?\?!") == std::vector<std::string>{"what", "?", "?", "!"});
}

TEST_CASE("tokenize emits the standalone tokens the learned features need") {
    // "-", "...", "(", ")", "$" all appear as learned features downstream
    auto t = toks("well-known (it cost $20... more)");
    CHECK(t == std::vector<std::string>{"well", "-", "known", "(", "it", "cost", "$", "20",
                                        "...", "more", ")"});
}

TEST_CASE("tokenize handles contractions and non-ASCII bytes") {
    CHECK(toks("don't") == std::vector<std::string>{"don", "'", "t"});
    // UTF-8 content survives untouched
    auto t = toks("caf\xc3\xa9 time");
    CHECK(t == std::vector<std::string>{"caf\xc3\xa9", "time"});
}

TEST_CASE("tokenize is idempotent on its own joined output") {
    const char* samples[] = {
        "Checking in took AGES... staff apologized twice!! (free upgrade)",
        "price: $199.99 per-night",
        "a.b, c -- d",
    };
    for (const char* s : samples) {
        auto first = toks(s);
        std::string joined;
        for (const auto& t : first) {
            if (!joined.empty()) joined += ' ';
            joined += t;
        }
        CHECK(tokenize(joined).tokens == first);
    }
}

TEST_CASE("ngrams windows and markers") {
    TokenSeq abc = tokenize("a b c");
    CHECK(ngrams(abc, 2, false) == std::vector<std::string>{"a_b", "b_c"});
    CHECK(ngrams(abc, 1, false) == std::vector<std::string>{"a", "b", "c"});
    CHECK(ngrams(abc, 4, false).empty());

    TokenSeq a = tokenize("a");
    CHECK(ngrams(a, 3, true) ==
          std::vector<std::string>{"<s>_<s>_a", "<s>_a_</s>"});

    TokenSeq my = tokenize("my husband loved it");
    auto bigrams = ngrams(my, 2, false);
    CHECK(std::find(bigrams.begin(), bigrams.end(), "my_husband") != bigrams.end());
}

TEST_CASE("ngram counts follow the window arithmetic") {
    for (int len : {0, 1, 2, 5, 9}) {
        TokenSeq seq;
        for (int i = 0; i < len; ++i) seq.tokens.push_back("w" + std::to_string(i));
        for (int n = 1; n <= 4; ++n) {
            auto grams = ngrams(seq, n, false);
            CHECK(static_cast<int>(grams.size()) == std::max(0, len - n + 1));
            auto marked = ngrams(seq, n, true);
            CHECK(static_cast<int>(marked.size()) == len + 1);
        }
    }
}

TEST_CASE("vocabulary build and round-trip") {
    std::vector<TokenSeq> docs = {tokenize("a a b")};
    Vocabulary v1 = Vocabulary::build(docs, 1);
    CHECK(v1.size() == 5);  // 3 reserved + a + b
    CHECK(v1.token(Vocabulary::kStartId) == "<s>");
    CHECK(v1.token(Vocabulary::kEndId) == "</s>");
    CHECK(v1.token(Vocabulary::kUnkId) == "<unk>");
    CHECK(v1.index_of("a") == 3);  // freq 2 beats freq 1
    CHECK(v1.index_of("b") == 4);
    CHECK(v1.index_of("zzz") == Vocabulary::kUnkId);

    Vocabulary v2 = Vocabulary::build(docs, 2);
    CHECK(v2.size() == 4);
    CHECK(v2.contains("a"));
    CHECK_FALSE(v2.contains("b"));

    // identical input -> identical assignment
    Vocabulary v3 = Vocabulary::build(docs, 1);
    CHECK(v3.hash() == v1.hash());
    for (std::uint32_t i = 0; i < v1.size(); ++i) {
        CHECK(v3.token(i) == v1.token(i));
        CHECK(v1.index_of(v1.token(i)) == i);
    }
}

TEST_CASE("vocabulary ties break lexicographically") {
    std::vector<TokenSeq> docs = {tokenize("zebra apple zebra apple mango")};
    Vocabulary v = Vocabulary::build(docs, 1);
    CHECK(v.index_of("apple") == 3);
    CHECK(v.index_of("zebra") == 4);
    CHECK(v.index_of("mango") == 5);
}

TEST_CASE("token dump is one token per line") {
    std::vector<TokenSeq> docs = {tokenize("b a")};
    Vocabulary v = Vocabulary::build(docs, 1);
    CHECK(v.dump() == "<s>\n</s>\n<unk>\na\nb\n");
}
