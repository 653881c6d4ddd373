#include "opspam/experiments.hpp"

#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "opspam/io.hpp"
#include "synth.hpp"

using namespace opspam;

namespace {

ApproachConfig quick_config(Approach a, std::uint64_t seed = 7) {
    ApproachConfig cfg;
    cfg.approach = a;
    cfg.c_grid = {0.1, 1.0, 10.0};  // smaller grid keeps unit tests quick
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("approach names round-trip and classify") {
    for (Approach a : {Approach::pos_svm, Approach::lexicon_svm, Approach::unigrams_svm,
                       Approach::bigrams_plus_svm, Approach::trigrams_plus_svm,
                       Approach::lexicon_bigrams_plus_svm, Approach::unigrams_nb,
                       Approach::bigrams_plus_nb, Approach::trigrams_plus_nb}) {
        CHECK(parse_approach(approach_name(a)) == a);
    }
    CHECK(parse_approach("LIWC+BIGRAMS+_SVM") == Approach::lexicon_bigrams_plus_svm);
    CHECK_THROWS_AS(static_cast<void>(parse_approach("UNKNOWN")), Error);
    CHECK_FALSE(approach_is_svm(Approach::unigrams_nb));
    CHECK(approach_order(Approach::trigrams_plus_svm) == 3);
}

TEST_CASE("separable synthetic corpus: both unigram pipelines hit 100%") {
    synth::Options opt;
    opt.hotels = 5;
    opt.per_class = 8;
    Corpus corpus = synth::gold_shaped_corpus(opt);
    FoldPlan plan = assign_folds(corpus, 5, 11);

    EvalReport svm_report = nested_cv(corpus, plan, quick_config(Approach::unigrams_svm));
    CHECK(svm_report.metrics.accuracy == doctest::Approx(1.0));

    EvalReport nb_report = nested_cv(corpus, plan, quick_config(Approach::unigrams_nb));
    CHECK(nb_report.metrics.accuracy == doctest::Approx(1.0));
    for (const FoldResult& f : nb_report.folds) CHECK(std::isnan(f.selected_c));
}

TEST_CASE("fold invariants on a gold-shaped corpus") {
    Corpus corpus = synth::gold_shaped_corpus();
    REQUIRE(corpus.is_gold_shaped());
    FoldPlan plan = assign_folds(corpus, 5, 99);

    // partition: 4 hotels per fold, every review covered exactly once
    std::set<std::string> seen_hotels;
    for (int f = 0; f < 5; ++f) {
        auto hotels = plan.hotels_in(f);
        CHECK(hotels.size() == 4);
        for (const auto& h : hotels) CHECK(seen_hotels.insert(h).second);
    }
    CHECK(seen_hotels.size() == 20);

    // each fold sees 160 reviews, 80 per class
    std::map<int, std::pair<int, int>> per_fold;
    for (const Review& r : corpus.reviews) {
        auto& p = per_fold[plan.fold_of(r)];
        (r.label == Label::truthful ? p.first : p.second) += 1;
    }
    for (const auto& [fold, p] : per_fold) {
        CHECK(p.first == 80);
        CHECK(p.second == 80);
    }
}

TEST_CASE("no-leakage: touched training ids never intersect the test fold") {
    synth::Options opt;
    opt.hotels = 5;
    opt.per_class = 6;
    Corpus corpus = synth::gold_shaped_corpus(opt);
    FoldPlan plan = assign_folds(corpus, 5, 3);

    EvalReport report = nested_cv(corpus, plan, quick_config(Approach::bigrams_plus_svm));
    for (const FoldResult& f : report.folds) {
        std::set<std::string> touched(f.touched_ids.begin(), f.touched_ids.end());
        for (const Review& r : corpus.reviews) {
            if (plan.fold_of(r) == f.fold)
                CHECK(touched.count(r.id) == 0);
            else
                CHECK(touched.count(r.id) == 1);
        }
        CHECK(f.touched_hash != 0);
    }
}

TEST_CASE("aggregate counts equal the sum of fold counts") {
    synth::Options opt;
    opt.hotels = 5;
    opt.per_class = 5;
    opt.separable = false;
    Corpus corpus = synth::gold_shaped_corpus(opt);
    FoldPlan plan = assign_folds(corpus, 5, 21);

    EvalReport report = nested_cv(corpus, plan, quick_config(Approach::unigrams_nb));
    ConfusionCounts sum;
    for (const FoldResult& f : report.folds) sum += f.counts;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(sum.n[i][j] == report.aggregate.n[i][j]);
    CHECK(report.aggregate.total() == static_cast<long long>(corpus.reviews.size()));

    // one hotel per fold here: 5 truthful + 5 deceptive each
    for (const FoldResult& f : report.folds) {
        CHECK(f.counts.n[0][0] + f.counts.n[0][1] == 5);
        CHECK(f.counts.n[1][0] + f.counts.n[1][1] == 5);
    }
}

TEST_CASE("rerunning nested_cv is byte-identical; different seeds differ") {
    synth::Options opt;
    opt.hotels = 5;
    opt.per_class = 5;
    opt.separable = false;
    Corpus corpus = synth::gold_shaped_corpus(opt);
    FoldPlan plan = assign_folds(corpus, 5, 4);

    ApproachConfig cfg = quick_config(Approach::unigrams_svm, 90);
    EvalReport r1 = nested_cv(corpus, plan, cfg);
    EvalReport r2 = nested_cv(corpus, plan, cfg);
    CHECK(r1.to_json() == r2.to_json());
    CHECK(r1.predictions_csv() == r2.predictions_csv());
}

TEST_CASE("inner_select: single grid point, dominance, determinism") {
    synth::Options opt;
    opt.hotels = 5;
    opt.per_class = 5;
    Corpus corpus = synth::gold_shaped_corpus(opt);
    FoldPlan plan = assign_folds(corpus, 5, 8);
    std::vector<int> train_folds = {0, 1, 2, 3};

    ApproachConfig one = quick_config(Approach::unigrams_svm);
    one.c_grid = {0.5};
    CHECK(inner_select(corpus, plan, train_folds, one) == doctest::Approx(0.5));

    // separable data: every C wins every inner fold; tie -> smallest C
    ApproachConfig tie = quick_config(Approach::unigrams_svm);
    tie.c_grid = {10.0, 1.0, 100.0};
    CHECK(inner_select(corpus, plan, train_folds, tie) == doctest::Approx(1.0));

    ApproachConfig nb = quick_config(Approach::unigrams_nb);
    CHECK(std::isnan(inner_select(corpus, plan, train_folds, nb)));

    std::vector<int> too_few = {0};
    CHECK_THROWS_AS(static_cast<void>(inner_select(corpus, plan, too_few,
                                                   quick_config(Approach::unigrams_svm))),
                    Error);
}

TEST_CASE("aggregate_report arithmetic and fold-count validation") {
    auto fold_counts = [](long long t_right, long long t_wrong, long long d_right,
                          long long d_wrong) {
        FoldResult f;
        f.counts.n[0][0] = t_right;
        f.counts.n[0][1] = t_wrong;
        f.counts.n[1][1] = d_right;
        f.counts.n[1][0] = d_wrong;
        return f;
    };
    std::vector<FoldResult> folds;
    for (int i = 0; i < 5; ++i) folds.push_back(fold_counts(16, 4, 16, 4));
    EvalReport r = aggregate_report("TEST", 5, folds);
    CHECK(r.metrics.accuracy == doctest::Approx(0.80));

    // single fold passes through unchanged
    EvalReport single = aggregate_report("TEST", 1, {fold_counts(3, 1, 2, 2)});
    CHECK(single.aggregate.total() == 8);

    CHECK_THROWS_AS(static_cast<void>(aggregate_report("TEST", 5, {fold_counts(1, 1, 1, 1)})),
                    Error);
}

TEST_CASE("micro-average differs from macro-average on skewed folds") {
    // fold A: 9/10 truthful correct, 0/2 deceptive; fold B: 1/2, 8/10
    FoldResult a, b;
    a.counts.n[0][0] = 9;
    a.counts.n[0][1] = 1;
    a.counts.n[1][0] = 2;
    a.counts.n[1][1] = 0;
    b.counts.n[0][0] = 1;
    b.counts.n[0][1] = 1;
    b.counts.n[1][0] = 2;
    b.counts.n[1][1] = 8;
    EvalReport r = aggregate_report("TEST", 2, {a, b});

    double micro_prec_t = r.metrics.truthful.precision;
    double macro_prec_t = (micro_metrics(a.counts).truthful.precision +
                           micro_metrics(b.counts).truthful.precision) /
                          2.0;
    CHECK(std::fabs(micro_prec_t - macro_prec_t) > 1e-3);
}

TEST_CASE("compare_approaches builds paired correctness and delegates") {
    std::vector<ItemPrediction> a, b;
    for (int i = 0; i < 10; ++i) {
        std::string id = "r" + std::to_string(i);
        a.push_back({id, Label::truthful, Label::truthful, 1.0});   // always right
        b.push_back({id, Label::truthful, Label::deceptive, -1.0});  // always wrong
    }
    SignTestResult st = compare_approaches(a, b);
    CHECK(st.p == doctest::Approx(std::pow(0.5, 10)).epsilon(1e-12));

    SignTestResult same = compare_approaches(a, a);
    CHECK(same.p == 1.0);
    CHECK(same.no_discordant);

    auto mismatched = b;
    mismatched[0].id = "other";
    CHECK_THROWS_AS(static_cast<void>(compare_approaches(a, mismatched)), Error);
}

TEST_CASE("POS and lexicon approaches demand their side inputs") {
    synth::Options opt;
    opt.hotels = 5;
    opt.per_class = 3;
    Corpus corpus = synth::gold_shaped_corpus(opt);
    FoldPlan plan = assign_folds(corpus, 5, 2);
    CHECK_THROWS_WITH_AS(
        static_cast<void>(nested_cv(corpus, plan, quick_config(Approach::pos_svm))),
        doctest::Contains("pre-tagged"), Error);
    CHECK_THROWS_WITH_AS(
        static_cast<void>(nested_cv(corpus, plan, quick_config(Approach::lexicon_svm))),
        doctest::Contains("lexicon"), Error);
}

TEST_CASE("POS pipeline runs end-to-end on synthesized tags") {
    synth::Options opt;
    opt.hotels = 5;
    opt.per_class = 4;
    Corpus corpus = synth::gold_shaped_corpus(opt);
    FoldPlan plan = assign_folds(corpus, 5, 31);

    // deterministic fake tagger: deceptive-leaning docs get more verbs
    std::vector<TaggedSeq> tagged;
    for (const Review& r : corpus.reviews) {
        TaggedSeq t;
        TokenSeq toks = tokenize(r.text, r.id);
        for (std::size_t i = 0; i < toks.tokens.size(); ++i) {
            const char* tag = i % 3 == 0 ? "NN" : (i % 3 == 1 ? "DT" : "JJ");
            if (r.label == Label::deceptive && i % 2 == 0) tag = "VB";
            t.pairs.emplace_back(toks.tokens[i], tag);
        }
        tagged.push_back(std::move(t));
    }
    ExperimentInputs inputs;
    inputs.tagged = &tagged;
    EvalReport report = nested_cv(corpus, plan, quick_config(Approach::pos_svm), inputs);
    CHECK(report.metrics.accuracy > 0.95);  // construction makes POS separable
}

TEST_CASE("lexicon approaches run end-to-end") {
    synth::Options opt;
    opt.hotels = 5;
    opt.per_class = 4;
    Corpus corpus = synth::gold_shaped_corpus(opt);
    FoldPlan plan = assign_folds(corpus, 5, 17);

    // the separable magic token is a lexicon keyword; filler entries give
    // truthful documents nonzero vectors too
    Lexicon lex = Lexicon::parse(
        "%\n1\tmagic\n2\tcomfort\n%\nzyzzyx\t1\nclean\t2\nlovely\t2\nthe\t2\nhotel\t2\nroom\t2\n",
        "synthlex");
    ExperimentInputs inputs;
    inputs.lexicon = &lex;

    ApproachConfig lex_cfg = quick_config(Approach::lexicon_svm);
    lex_cfg.c_grid = {10.0};  // hard fit; the test targets the pipeline, not C selection
    EvalReport report = nested_cv(corpus, plan, lex_cfg, inputs);
    CHECK(report.metrics.accuracy == doctest::Approx(1.0));

    ApproachConfig combo_cfg = quick_config(Approach::lexicon_bigrams_plus_svm);
    combo_cfg.c_grid = {10.0};
    EvalReport combined = nested_cv(corpus, plan, combo_cfg, inputs);
    CHECK(combined.metrics.accuracy == doctest::Approx(1.0));
    // combined space carries both blocks
    REQUIRE(combined.folds[0].space.has_value());
    CHECK(combined.folds[0].space->blocks().size() == 2);
}

TEST_CASE("experiment config parsing: key=value and JSON forms") {
    ExperimentFileConfig kv = parse_experiment_config(
        "# comment\n"
        "approach = BIGRAMS+_SVM\n"
        "corpus = data/manifest.csv\n"
        "out = results\n"
        "seed = 77\n"
        "folds = 5\n"
        "c_grid = 0.1,1,10\n",
        "test.cfg");
    CHECK(kv.approach == "BIGRAMS+_SVM");
    CHECK(kv.corpus_path == "data/manifest.csv");
    CHECK(kv.seed == 77);
    CHECK(kv.c_grid == std::vector<double>{0.1, 1.0, 10.0});

    ExperimentFileConfig js = parse_experiment_config(
        R"({"approach":"UNIGRAMS_NB","corpus":"m.csv","seed":5})", "test.json");
    CHECK(js.approach == "UNIGRAMS_NB");
    CHECK(js.seed == 5);

    CHECK_THROWS_AS(static_cast<void>(parse_experiment_config("corpus = x\n", "bad")), Error);
    CHECK_THROWS_AS(static_cast<void>(parse_experiment_config("approach UNIGRAMS\n", "bad")),
                    Error);
}

TEST_CASE("report rendering carries the metric table and predictions") {
    synth::Options opt;
    opt.hotels = 5;
    opt.per_class = 3;
    Corpus corpus = synth::gold_shaped_corpus(opt);
    FoldPlan plan = assign_folds(corpus, 5, 1);
    EvalReport report = nested_cv(corpus, plan, quick_config(Approach::unigrams_nb));

    std::string table = report.render_table();
    CHECK(table.find("UNIGRAMS_NB") != std::string::npos);
    CHECK(table.find("accuracy") != std::string::npos);

    std::string csv = report.predictions_csv();
    CHECK(csv.find("item_id,fold,true_label,predicted_label,margin") == 0);
    CHECK(report.all_predictions().size() == corpus.reviews.size());

    std::string json_text = report.to_json();
    CHECK(json_text.find("corpus_hash") != std::string::npos);
}
