#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace opspam {

enum class Label : std::uint8_t { truthful = 0, deceptive = 1 };

const char* label_name(Label l);
Label parse_label(std::string_view token, std::string_view where);

// Aggregate binary confusion counts, indexed [actual][predicted].
struct ConfusionCounts {
    long long n[2][2] = {{0, 0}, {0, 0}};

    static ConfusionCounts from_pairs(std::span<const Label> truth,
                                      std::span<const Label> predicted);

    long long total() const;
    long long correct() const;
    long long tp(Label c) const;
    long long fp(Label c) const;
    long long fn(Label c) const;
    long long tn(Label c) const;

    ConfusionCounts& operator+=(const ConfusionCounts& other);
};

struct ClassMetrics {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    // set when a zero denominator forced the 0 value
    bool precision_undefined = false, recall_undefined = false, f1_undefined = false;
};

struct MicroReport {
    double accuracy = 0.0;
    ClassMetrics truthful;
    ClassMetrics deceptive;
};

// Precision/recall/F from aggregate counts (micro-average when the counts
// were summed across folds).
MicroReport micro_metrics(const ConfusionCounts& conf);

enum class Sided { two_tailed, greater, less };

// Exact binomial test of k successes in n trials against success rate p0.
// The two-tailed p-value sums every outcome whose probability does not
// exceed the observed one (minimum-likelihood method).
double binomial_test(long long k, long long n, double p0, Sided sided);

struct SignTestResult {
    double p = 1.0;
    long long a_wins = 0;   // a correct, b wrong
    long long b_wins = 0;
    long long ties = 0;
    bool no_discordant = false;
};

// Paired sign test on correctness indicators; ties discarded, exact binomial
// on the discordant pairs at p0 = 0.5. Sided::greater tests "a beats b".
SignTestResult sign_test(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b,
                         Sided sided);

// Welch's unequal-variance t-test, two-tailed.
double t_test_independent(std::span<const double> a, std::span<const double> b);

struct JudgeAnnotations {
    struct Item {
        std::string id;
        Label truth;
        std::vector<Label> judge_labels;
    };
    std::vector<Item> items;

    static JudgeAnnotations load_csv(const std::filesystem::path& path);
    std::size_t judge_count() const;
    std::vector<Label> judge_column(std::size_t j) const;
    std::vector<Label> truth_column() const;
};

struct KappaResult {
    double kappa = 0.0;
    bool degenerate = false;  // expected agreement 1 (single-category ratings)
};

KappaResult fleiss_kappa(const JudgeAnnotations& ann);
KappaResult cohen_kappa(std::span<const Label> r1, std::span<const Label> r2);

enum class MetaMode { majority, skeptic };

// majority: deceptive when more than half of the judges say deceptive
// (requires an odd judge count); skeptic: deceptive when any judge does.
std::vector<Label> meta_judge(const std::vector<std::vector<Label>>& per_judge, MetaMode mode);

}  // namespace opspam
