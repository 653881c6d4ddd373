#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opspam/stats.hpp"

namespace opspam {

struct Review {
    std::string id;
    std::string text;
    Label label = Label::truthful;
    std::string hotel;
    std::string polarity = "positive";
    std::int64_t char_length = 0;  // Unicode code points
    std::int64_t word_length = 0;  // token count under the toolkit tokenizer
    std::optional<double> authoring_minutes;
    std::optional<std::string> author_id;
    std::optional<int> star_rating;
    std::optional<bool> first_time_author;
    std::optional<int> fold;  // honored by assign_folds when present
};

struct Corpus {
    std::vector<Review> reviews;
    std::vector<std::string> hotels;  // sorted, unique

    std::uint64_t hash() const;
    bool is_gold_shaped() const;  // 20 hotels x 20 truthful x 20 deceptive
    std::vector<const Review*> with_label(Label l) const;
};

// Manifest CSV (id,path,label,hotel + optional fold,polarity,star_rating,
// first_time_author,authoring_minutes,author_id; paths relative to the
// manifest) or a directory tree in the published dataset layout:
// <root>/.../<*truthful*|*deceptive*>/fold<k>/<prefix>_<hotel>_<n>.txt
Corpus load_corpus(const std::filesystem::path& source);

struct FoldPlan {
    int k = 0;
    std::map<std::string, int> assignment;  // hotel -> fold in [0, k)

    int fold_of(const Review& r) const;
    std::vector<std::string> hotels_in(int fold) const;
};

// Deterministic hotel-blocked partition. When every review carries a
// manifest fold label, those labels are validated and used instead of the
// seeded shuffle.
FoldPlan assign_folds(const Corpus& corpus, int k, std::uint64_t seed);

struct FilterRule {
    std::string name;
    long long removed = 0;
    bool skipped = false;  // required metadata absent on some review
};

struct FilterResult {
    std::vector<Review> kept;
    std::vector<FilterRule> tally;  // in application order
};

// Keeps reviews with star_rating == required_stars, char_length >= min_chars
// and a non-first-time author. A rule whose metadata is missing anywhere in
// the input is skipped and reported rather than applied partially.
FilterResult filter_candidates(const std::vector<Review>& reviews, std::int64_t min_chars,
                               int required_stars);

struct TruncLogNormalParams {
    double mu = 0.0;
    double sigma = 1.0;
    double truncation_point = 150.0;

    double cdf(double x) const;       // conditioned on x >= truncation_point
    double quantile(double p) const;  // inverse of cdf on [0,1)
    double log_likelihood(const std::vector<double>& lengths) const;
};

// ML fit of a left-truncated log-normal by direct numerical maximization
// (Nelder-Mead over (mu, log sigma)); converges when the log-likelihood
// improves by less than 1e-9.
TruncLogNormalParams fit_truncated_lognormal(const std::vector<double>& lengths,
                                             double truncation_point);

// Per hotel, draws per_hotel target lengths by inverse-CDF sampling and
// greedily takes the unused candidate nearest each target (ties: smaller
// length, then smaller id).
std::vector<Review> sample_length_matched(const std::vector<Review>& pool,
                                          const TruncLogNormalParams& params, int per_hotel,
                                          std::uint64_t seed);

struct SampleStats {
    long long count = 0;
    double min = 0.0, max = 0.0, mean = 0.0, stddev = 0.0;
    bool stddev_defined = false;  // n >= 2
};

struct DescriptiveStats {
    double split_at_minutes = 1.0;
    SampleStats time_overall;                // authoring minutes, where present
    SampleStats length_overall;              // word_length
    SampleStats length_below, length_above;  // split by authoring time
    SampleStats time_below, time_above;

    std::string to_json() const;
    std::string render_table() const;
};

DescriptiveStats descriptive_stats(const std::vector<Review>& reviews, double split_at_minutes);

}  // namespace opspam
