#include "opspam/corpus.hpp"

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "opspam/io.hpp"
#include "opspam/rng.hpp"
#include "oracles.hpp"

using namespace opspam;
namespace fs = std::filesystem;

namespace {

// scratch dir with review files + manifest
class TempCorpusDir {
public:
    TempCorpusDir() {
        static int counter = 0;
        root_ = fs::temp_directory_path() / ("opspam_corpus_" + std::to_string(++counter) + "_" +
                                             std::to_string(::getpid()));
        fs::create_directories(root_);
    }
    ~TempCorpusDir() { fs::remove_all(root_); }

    const fs::path& root() const { return root_; }

    void add_review(const std::string& id, const std::string& text) {
        write_text_file(root_ / (id + ".txt"), text);
    }

    fs::path write_manifest(const std::string& csv) {
        fs::path p = root_ / "manifest.csv";
        write_text_file(p, csv);
        return p;
    }

private:
    fs::path root_;
};

Review make_review(const std::string& id, const std::string& hotel, Label label,
                   std::int64_t chars) {
    Review r;
    r.id = id;
    r.hotel = hotel;
    r.label = label;
    r.text = std::string(static_cast<std::size_t>(chars), 'x');
    r.char_length = chars;
    r.word_length = chars / 5;
    return r;
}

}  // namespace

TEST_CASE("load_corpus from a 2-row manifest") {
    TempCorpusDir dir;
    dir.add_review("r1", "Great hotel, clean rooms.");
    dir.add_review("r2", "My husband loved the spa!!");
    fs::path manifest = dir.write_manifest(
        "id,path,label,hotel\n"
        "r1,r1.txt,truthful,hilton\n"
        "r2,r2.txt,deceptive,hilton\n");

    Corpus c = load_corpus(manifest);
    REQUIRE(c.reviews.size() == 2);
    CHECK(c.hotels == std::vector<std::string>{"hilton"});
    CHECK(c.reviews[0].label == Label::truthful);
    CHECK(c.reviews[1].label == Label::deceptive);
    CHECK(c.reviews[0].char_length == 25);
    CHECK(c.reviews[0].word_length == 6);  // punctuation tokens counted
    CHECK_FALSE(c.is_gold_shaped());
}

TEST_CASE("load_corpus error contracts") {
    TempCorpusDir dir;
    dir.add_review("r1", "text");

    // unknown label token, naming the row and token
    fs::path bad_label = dir.write_manifest(
        "id,path,label,hotel\n"
        "r1,r1.txt,fake,hilton\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(load_corpus(bad_label)),
                         doctest::Contains("row 2"), Error);
    try {
        load_corpus(bad_label);
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("fake") != std::string::npos);
    }

    // duplicate id
    fs::path dup = dir.write_manifest(
        "id,path,label,hotel\n"
        "r1,r1.txt,truthful,hilton\n"
        "r1,r1.txt,deceptive,hilton\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(load_corpus(dup)),
                         doctest::Contains("duplicate review id"), Error);

    // missing review file
    fs::path missing = dir.write_manifest(
        "id,path,label,hotel\n"
        "r9,nope.txt,truthful,hilton\n");
    CHECK_THROWS_AS(static_cast<void>(load_corpus(missing)), Error);

    // undecodable text
    write_text_file(dir.root() / "bad.txt", std::string("\xff\xfe broken"));
    fs::path bad_utf8 = dir.write_manifest(
        "id,path,label,hotel\n"
        "rb,bad.txt,truthful,hilton\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(load_corpus(bad_utf8)),
                         doctest::Contains("undecodable"), Error);

    CHECK_THROWS_AS(static_cast<void>(load_corpus(dir.root() / "does_not_exist.csv")), Error);
}

TEST_CASE("load_corpus from a dataset-layout directory") {
    TempCorpusDir dir;
    for (int fold = 1; fold <= 2; ++fold) {
        for (const char* hotel : {"hilton", "palmer"}) {
            std::string t_dir = "truthful_from_web/fold" + std::to_string(fold);
            std::string d_dir = "deceptive_from_web/fold" + std::to_string(fold);
            write_text_file(dir.root() / t_dir / ("t_" + std::string(hotel) + "_1.txt"),
                            "a truthful review");
            write_text_file(dir.root() / d_dir / ("d_" + std::string(hotel) + "_1.txt"),
                            "a deceptive review");
        }
    }
    Corpus c = load_corpus(dir.root());
    CHECK(c.reviews.size() == 8);
    CHECK(c.hotels == std::vector<std::string>{"hilton", "palmer"});
    for (const Review& r : c.reviews) {
        CHECK(r.fold.has_value());
        CHECK((*r.fold == 1 || *r.fold == 2));
    }
}

TEST_CASE("csv escape/parse round-trips awkward fields") {
    SplitMix64 rng(321);
    const char chars[] = {'a', 'b', ',', '"', '\n', '\r', ' ', 'x'};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::vector<std::string>> rows(1 + rng.bounded(4));
        std::ostringstream csv;
        csv << "c0,c1,c2\n";
        for (auto& row : rows) {
            for (int c = 0; c < 3; ++c) {
                std::string field;
                std::size_t len = rng.bounded(8);
                for (std::size_t i = 0; i < len; ++i)
                    field += chars[rng.bounded(sizeof chars)];
                // a bare CR inside an unquoted field cannot round-trip; the
                // escaper quotes any field containing one
                row.push_back(field);
                if (c > 0) csv << ',';
                csv << csv_escape(field);
            }
            csv << '\n';
        }
        CsvTable t = parse_csv(csv.str(), "roundtrip");
        REQUIRE(t.rows.size() == rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) CHECK(t.rows[r] == rows[r]);
    }
}

TEST_CASE("char_length counts code points, not bytes") {
    TempCorpusDir dir;
    dir.add_review("r1", "caf\xc3\xa9");  // 4 code points, 5 bytes
    fs::path manifest = dir.write_manifest(
        "id,path,label,hotel\n"
        "r1,r1.txt,truthful,h\n");
    Corpus c = load_corpus(manifest);
    CHECK(c.reviews[0].char_length == 4);
}

TEST_CASE("assign_folds partitions hotels evenly and deterministically") {
    Corpus c;
    for (int h = 0; h < 20; ++h) {
        std::string hotel = "hotel" + std::to_string(h);
        c.hotels.push_back(hotel);
        for (int i = 0; i < 2; ++i) {
            c.reviews.push_back(make_review(hotel + "_t" + std::to_string(i), hotel,
                                            Label::truthful, 200));
            c.reviews.push_back(make_review(hotel + "_d" + std::to_string(i), hotel,
                                            Label::deceptive, 200));
        }
    }
    std::sort(c.hotels.begin(), c.hotels.end());

    FoldPlan plan = assign_folds(c, 5, 42);
    CHECK(plan.k == 5);
    std::set<std::string> covered;
    for (int f = 0; f < 5; ++f) {
        auto hotels = plan.hotels_in(f);
        CHECK(hotels.size() == 4);
        covered.insert(hotels.begin(), hotels.end());
    }
    CHECK(covered.size() == 20);

    FoldPlan again = assign_folds(c, 5, 42);
    CHECK(again.assignment == plan.assignment);
    FoldPlan other = assign_folds(c, 5, 43);
    CHECK(other.assignment != plan.assignment);

    // 4 hotels, k=4 -> one hotel per fold
    Corpus small;
    for (int h = 0; h < 4; ++h) {
        std::string hotel = "h" + std::to_string(h);
        small.hotels.push_back(hotel);
        small.reviews.push_back(make_review(hotel + "_r", hotel, Label::truthful, 10));
    }
    FoldPlan one_each = assign_folds(small, 4, 7);
    for (int f = 0; f < 4; ++f) CHECK(one_each.hotels_in(f).size() == 1);

    // 20 hotels, k=3 -> no even split
    CHECK_THROWS_AS(assign_folds(c, 3, 1), Error);
}

TEST_CASE("assign_folds honors manifest fold labels and validates them") {
    Corpus c;
    for (int h = 0; h < 4; ++h) {
        std::string hotel = "h" + std::to_string(h);
        c.hotels.push_back(hotel);
        Review r = make_review(hotel + "_r", hotel, Label::truthful, 10);
        r.fold = h / 2;
        c.reviews.push_back(r);
    }
    FoldPlan plan = assign_folds(c, 2, 999);
    CHECK(plan.assignment.at("h0") == 0);
    CHECK(plan.assignment.at("h3") == 1);

    // 1-based labels (the published directory convention) are renumbered
    Corpus one_based = c;
    for (Review& r : one_based.reviews) r.fold = *r.fold + 1;
    FoldPlan shifted = assign_folds(one_based, 2, 999);
    CHECK(shifted.assignment == plan.assignment);

    // hotel spanning folds is rejected
    c.reviews.push_back([&] {
        Review r = make_review("h0_r2", "h0", Label::deceptive, 10);
        r.fold = 1;
        return r;
    }());
    CHECK_THROWS_WITH_AS(static_cast<void>(assign_folds(c, 2, 999)),
                         doctest::Contains("spans folds"), Error);
}

TEST_CASE("filter_candidates applies rules in order and reports a tally") {
    std::vector<Review> pool;
    auto add = [&](std::int64_t chars, int stars, bool first_time) {
        Review r = make_review("r" + std::to_string(pool.size()), "h", Label::truthful, chars);
        r.star_rating = stars;
        r.first_time_author = first_time;
        pool.push_back(r);
    };
    add(140, 5, false);  // too short
    add(200, 4, false);  // wrong stars
    add(200, 5, true);   // first-time author
    add(200, 5, false);  // keeper
    add(149, 4, true);   // wrong stars (removed by the first rule only)

    FilterResult res = filter_candidates(pool, 150, 5);
    REQUIRE(res.kept.size() == 1);
    CHECK(res.kept[0].id == "r3");
    REQUIRE(res.tally.size() == 3);
    CHECK(res.tally[0].name == "non-5-star");
    CHECK(res.tally[0].removed == 2);
    CHECK(res.tally[1].removed == 1);  // short rule sees only 5-star rows
    CHECK(res.tally[2].removed == 1);

    // idempotent
    FilterResult twice = filter_candidates(res.kept, 150, 5);
    CHECK(twice.kept.size() == res.kept.size());
    for (const FilterRule& rule : twice.tally) CHECK(rule.removed == 0);

    // missing metadata skips the rule and reports it
    std::vector<Review> no_stars = {make_review("a", "h", Label::truthful, 200)};
    no_stars[0].first_time_author = false;
    FilterResult skipped = filter_candidates(no_stars, 150, 5);
    CHECK(skipped.tally[0].skipped);
    CHECK_FALSE(skipped.tally[1].skipped);
    CHECK_FALSE(skipped.tally[2].skipped);
    CHECK(skipped.kept.size() == 1);
}

TEST_CASE("truncated lognormal fit: inactive truncation reduces to the plain MLE") {
    SplitMix64 rng(2468);
    std::vector<double> lengths;
    double mu = 6.0, sigma = 0.4;
    for (int i = 0; i < 4000; ++i) lengths.push_back(std::exp(mu + sigma * rng.normal()));
    // truncation far below the mass: every draw comfortably above it
    double trunc = 1.0;
    for (double v : lengths) REQUIRE(v > trunc);

    TruncLogNormalParams fit = fit_truncated_lognormal(lengths, trunc);
    double mean_log = 0.0;
    for (double v : lengths) mean_log += std::log(v);
    mean_log /= static_cast<double>(lengths.size());
    CHECK(fit.mu == doctest::Approx(mean_log).epsilon(5e-4));
}

TEST_CASE("truncated lognormal fit recovers synthetic parameters") {
    // inverse-CDF draws from the truncated distribution itself. With the
    // cut at 150 ~ e^5.01 and truth mu=4.7, 73% of the base mass is gone and
    // the exact MLE's own standard error in mu is ~0.055 (verified against
    // an independent optimizer), so mu gets a 3-sigma band; sigma resolves
    // more tightly.
    TruncLogNormalParams truth{4.7, 0.5, 150.0};
    SplitMix64 rng(13579);
    std::vector<double> lengths;
    for (int i = 0; i < 10000; ++i) lengths.push_back(truth.quantile(rng.next_double()));
    for (double v : lengths) REQUIRE(v >= 150.0);

    TruncLogNormalParams fit = fit_truncated_lognormal(lengths, 150.0);
    CHECK(std::fabs(fit.mu - 4.7) < 0.17);
    CHECK(std::fabs(fit.sigma - 0.5) < 0.06);

    // fitted likelihood beats every point of the independent grid search
    oracles::GridFit grid = oracles::grid_fit_trunc_lognormal(lengths, 150.0);
    double fit_ll = fit.log_likelihood(lengths);
    CHECK(fit_ll >= grid.loglik - 1e-6);

    // under active-but-mild truncation the +/- 0.05 band holds
    TruncLogNormalParams mild{5.3, 0.5, 150.0};
    std::vector<double> lengths2;
    for (int i = 0; i < 10000; ++i) lengths2.push_back(mild.quantile(rng.next_double()));
    TruncLogNormalParams fit2 = fit_truncated_lognormal(lengths2, 150.0);
    CHECK(std::fabs(fit2.mu - 5.3) < 0.05);
    CHECK(std::fabs(fit2.sigma - 0.5) < 0.05);
}

TEST_CASE("truncated lognormal fit: two distinct lengths give a finite fit") {
    std::vector<double> lengths = {160.0, 240.0};
    TruncLogNormalParams fit = fit_truncated_lognormal(lengths, 150.0);
    CHECK(std::isfinite(fit.mu));
    CHECK(std::isfinite(fit.sigma));
    CHECK(fit.sigma > 0.0);
    oracles::GridFit grid = oracles::grid_fit_trunc_lognormal(lengths, 150.0);
    CHECK(fit.log_likelihood(lengths) >= grid.loglik - 1e-6);
}

TEST_CASE("truncated lognormal fit preconditions") {
    CHECK_THROWS_AS(static_cast<void>(fit_truncated_lognormal({100.0, 200.0}, 150.0)), Error);
    CHECK_THROWS_AS(static_cast<void>(fit_truncated_lognormal({200.0}, 150.0)), Error);
    CHECK_THROWS_AS(static_cast<void>(fit_truncated_lognormal({200.0, 200.0}, 150.0)), Error);
}

TEST_CASE("sample_length_matched selects per hotel without duplicates") {
    TruncLogNormalParams params{5.0, 0.5, 150.0};
    std::vector<Review> pool;
    SplitMix64 rng(11);
    for (int h = 0; h < 3; ++h) {
        std::string hotel = "h" + std::to_string(h);
        for (int i = 0; i < 30; ++i) {
            std::int64_t len = 150 + static_cast<std::int64_t>(rng.bounded(400));
            pool.push_back(make_review(hotel + "_" + std::to_string(i), hotel, Label::truthful,
                                       len));
        }
    }
    std::vector<Review> picked = sample_length_matched(pool, params, 5, 77);
    CHECK(picked.size() == 15);
    std::set<std::string> ids;
    std::map<std::string, int> per_hotel;
    for (const Review& r : picked) {
        CHECK(ids.insert(r.id).second);
        ++per_hotel[r.hotel];
        CHECK(r.char_length >= 150);
    }
    for (const auto& [hotel, count] : per_hotel) CHECK(count == 5);

    // degenerate pool: identical lengths are all equally near any target
    std::vector<Review> flat;
    for (int i = 0; i < 10; ++i)
        flat.push_back(make_review("f" + std::to_string(i), "h", Label::truthful, 200));
    std::vector<Review> from_flat = sample_length_matched(flat, params, 4, 3);
    CHECK(from_flat.size() == 4);
    for (const Review& r : from_flat) CHECK(r.char_length == 200);

    // a hotel short on candidates is named in the error
    CHECK_THROWS_WITH_AS(static_cast<void>(sample_length_matched(flat, params, 11, 3)),
                         doctest::Contains("h"), Error);
}

TEST_CASE("length-matched selection tracks the target distribution better than random") {
    TruncLogNormalParams params{5.2, 0.35, 150.0};
    SplitMix64 rng(909);
    std::vector<Review> pool;
    // uniform candidate lengths, so naive random picks are far from log-normal
    for (int i = 0; i < 400; ++i)
        pool.push_back(make_review("p" + std::to_string(i), "h", Label::truthful,
                                   150 + static_cast<std::int64_t>(rng.bounded(850))));

    std::vector<Review> matched = sample_length_matched(pool, params, 60, 5);
    std::vector<double> matched_lengths;
    for (const Review& r : matched) matched_lengths.push_back(static_cast<double>(r.char_length));

    // uniform-random selection of the same size
    std::vector<double> random_lengths;
    SplitMix64 pick(6);
    std::set<std::size_t> chosen;
    while (random_lengths.size() < 60) {
        std::size_t i = pick.bounded(pool.size());
        if (chosen.insert(i).second)
            random_lengths.push_back(static_cast<double>(pool[i].char_length));
    }

    double ks_matched = oracles::ks_distance(matched_lengths, params);
    double ks_random = oracles::ks_distance(random_lengths, params);
    CHECK(ks_matched < ks_random);
}

TEST_CASE("descriptive_stats on simple inputs") {
    std::vector<Review> reviews;
    Review single = make_review("s", "h", Label::deceptive, 500);
    single.word_length = 100;
    reviews.push_back(single);
    DescriptiveStats one = descriptive_stats(reviews, 1.0);
    CHECK(one.length_overall.count == 1);
    CHECK(one.length_overall.mean == doctest::Approx(100.0));
    CHECK_FALSE(one.length_overall.stddev_defined);  // n-1 denominator undefined at n=1

    // two more with authoring times
    Review fast = make_review("f", "h", Label::deceptive, 500);
    fast.word_length = 60;
    fast.authoring_minutes = 0.5;
    Review slow = make_review("sl", "h", Label::deceptive, 500);
    slow.word_length = 120;
    slow.authoring_minutes = 9.0;
    reviews.push_back(fast);
    reviews.push_back(slow);

    DescriptiveStats d = descriptive_stats(reviews, 1.0);
    CHECK(d.length_overall.count == 3);
    CHECK(d.time_overall.count == 2);  // only where time is present
    CHECK(d.length_below.count == 1);
    CHECK(d.length_below.mean == doctest::Approx(60.0));
    CHECK(d.length_above.count == 1);
    CHECK(d.time_overall.mean == doctest::Approx(4.75));

    // sample (n-1) standard deviation
    std::vector<Review> pair = {fast, slow};
    DescriptiveStats p2 = descriptive_stats(pair, 100.0);
    double mean = (60.0 + 120.0) / 2.0;
    double sd = std::sqrt(((60 - mean) * (60 - mean) + (120 - mean) * (120 - mean)) / 1.0);
    CHECK(p2.length_overall.stddev == doctest::Approx(sd).epsilon(1e-12));

    CHECK_THROWS_AS(static_cast<void>(descriptive_stats({}, 1.0)), Error);

    // reports render in both formats
    CHECK(d.to_json().find("time_overall") != std::string::npos);
    CHECK(d.render_table().find("count") != std::string::npos);
}
