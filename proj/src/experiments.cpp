#include "opspam/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "opspam/io.hpp"
#include "opspam/rng.hpp"

namespace opspam {

const char* approach_name(Approach a) {
    switch (a) {
        case Approach::pos_svm: return "POS_SVM";
        case Approach::lexicon_svm: return "LEXICON_SVM";
        case Approach::unigrams_svm: return "UNIGRAMS_SVM";
        case Approach::bigrams_plus_svm: return "BIGRAMS+_SVM";
        case Approach::trigrams_plus_svm: return "TRIGRAMS+_SVM";
        case Approach::lexicon_bigrams_plus_svm: return "LEXICON+BIGRAMS+_SVM";
        case Approach::unigrams_nb: return "UNIGRAMS_NB";
        case Approach::bigrams_plus_nb: return "BIGRAMS+_NB";
        case Approach::trigrams_plus_nb: return "TRIGRAMS+_NB";
    }
    return "?";
}

Approach parse_approach(std::string_view name) {
    static const std::pair<const char*, Approach> table[] = {
        {"POS_SVM", Approach::pos_svm},
        {"LEXICON_SVM", Approach::lexicon_svm},
        {"LIWC_SVM", Approach::lexicon_svm},
        {"UNIGRAMS_SVM", Approach::unigrams_svm},
        {"BIGRAMS+_SVM", Approach::bigrams_plus_svm},
        {"TRIGRAMS+_SVM", Approach::trigrams_plus_svm},
        {"LEXICON+BIGRAMS+_SVM", Approach::lexicon_bigrams_plus_svm},
        {"LIWC+BIGRAMS+_SVM", Approach::lexicon_bigrams_plus_svm},
        {"UNIGRAMS_NB", Approach::unigrams_nb},
        {"BIGRAMS+_NB", Approach::bigrams_plus_nb},
        {"TRIGRAMS+_NB", Approach::trigrams_plus_nb},
    };
    for (const auto& [n, a] : table)
        if (name == n) return a;
    throw Error("unknown approach \"" + std::string(name) + "\"");
}

bool approach_is_svm(Approach a) {
    switch (a) {
        case Approach::unigrams_nb:
        case Approach::bigrams_plus_nb:
        case Approach::trigrams_plus_nb: return false;
        default: return true;
    }
}

int approach_order(Approach a) {
    switch (a) {
        case Approach::unigrams_svm:
        case Approach::unigrams_nb: return 1;
        case Approach::bigrams_plus_svm:
        case Approach::lexicon_bigrams_plus_svm:
        case Approach::bigrams_plus_nb: return 2;
        case Approach::trigrams_plus_svm:
        case Approach::trigrams_plus_nb: return 3;
        default: return 0;
    }
}

std::uint64_t ApproachConfig::hash() const {
    std::string repr = approach_name(approach);
    for (double c : c_grid) repr += "," + format_double(c, 6);
    repr += ";seed=" + std::to_string(seed);
    repr += ";tol=" + format_double(svm_tol, 9);
    repr += ";epochs=" + std::to_string(svm_max_epochs);
    repr += ";min_count=" + std::to_string(ngram_min_count);
    return fnv1a(repr);
}

namespace {

struct DocRef {
    const Review* review;
    const TokenSeq* tokens;
    const TaggedSeq* tagged;  // may be null
};

struct PreparedCorpus {
    std::vector<TokenSeq> tokens;
    std::vector<DocRef> docs;
};

PreparedCorpus prepare(const Corpus& corpus, const ExperimentInputs& inputs) {
    PreparedCorpus prep;
    if (inputs.tagged && inputs.tagged->size() != corpus.reviews.size())
        throw Error("tagged input has " + std::to_string(inputs.tagged->size()) +
                    " documents but the corpus has " + std::to_string(corpus.reviews.size()));
    prep.tokens.reserve(corpus.reviews.size());
    for (const Review& r : corpus.reviews) prep.tokens.push_back(tokenize(r.text, r.id));
    prep.docs.reserve(corpus.reviews.size());
    for (std::size_t i = 0; i < corpus.reviews.size(); ++i)
        prep.docs.push_back({&corpus.reviews[i], &prep.tokens[i],
                             inputs.tagged ? &(*inputs.tagged)[i] : nullptr});
    return prep;
}

void require_inputs(Approach a, const ExperimentInputs& inputs, const PreparedCorpus& prep) {
    if ((a == Approach::lexicon_svm || a == Approach::lexicon_bigrams_plus_svm) &&
        inputs.lexicon == nullptr)
        throw Error(std::string(approach_name(a)) + " requires a lexicon");
    if (a == Approach::pos_svm) {
        if (inputs.tagged == nullptr) throw Error("POS_SVM requires pre-tagged input");
        for (const DocRef& d : prep.docs)
            if (d.tagged == nullptr || d.tagged->pairs.empty())
                throw Error("POS_SVM: review " + d.review->id + " has no POS tags");
    }
}

int sign_of(Label l) { return l == Label::truthful ? +1 : -1; }
Label label_of(int sign) { return sign >= 0 ? Label::truthful : Label::deceptive; }

struct SplitEval {
    ConfusionCounts counts;
    std::vector<ItemPrediction> predictions;
    std::optional<LinearModel> model;
    std::optional<FeatureSpace> space;
};

// Train on `train`, score `test`. All vocabulary/space statistics come from
// `train` only.
SplitEval evaluate_split(std::span<const DocRef> train, std::span<const DocRef> test,
                         const ApproachConfig& config, const ExperimentInputs& inputs,
                         double c_value, std::uint64_t split_seed) {
    SplitEval out;
    Approach a = config.approach;

    std::vector<Label> truth;
    truth.reserve(test.size());
    for (const DocRef& d : test) truth.push_back(d.review->label);

    std::vector<Label> predicted;
    predicted.reserve(test.size());

    if (!approach_is_svm(a)) {
        std::vector<TokenSeq> train_tokens;
        train_tokens.reserve(train.size());
        for (const DocRef& d : train) train_tokens.push_back(*d.tokens);
        Vocabulary vocab = Vocabulary::build(train_tokens, config.ngram_min_count);

        std::vector<TokenSeq> truthful_docs, deceptive_docs;
        for (const DocRef& d : train)
            (d.review->label == Label::truthful ? truthful_docs : deceptive_docs)
                .push_back(*d.tokens);

        ClassLMPair pair;
        int order = approach_order(a);
        pair.truthful_lm = NgramLM::train(truthful_docs, order, vocab);
        pair.deceptive_lm = NgramLM::train(deceptive_docs, order, vocab);
        // class priors from training frequencies; hotel-balanced folds give
        // exactly the uniform prior and the pure likelihood rule
        pair.prior_truthful = static_cast<double>(truthful_docs.size()) /
                              static_cast<double>(train.size());
        pair.prior_deceptive = static_cast<double>(deceptive_docs.size()) /
                               static_cast<double>(train.size());

        for (const DocRef& d : test) {
            MLDecision dec = classify_ml(pair, *d.tokens);
            predicted.push_back(dec.label);
            out.predictions.push_back({d.review->id, d.review->label, dec.label, dec.margin});
        }
    } else {
        // feature extraction per approach
        FeatureSpace space;
        std::vector<SparseVector> train_x(train.size()), test_x(test.size());

        auto fill = [&](auto&& extract) {
            for (std::size_t i = 0; i < train.size(); ++i) train_x[i] = extract(train[i]);
            for (std::size_t i = 0; i < test.size(); ++i) test_x[i] = extract(test[i]);
        };

        int order = approach_order(a);
        if (a == Approach::unigrams_svm || a == Approach::bigrams_plus_svm ||
            a == Approach::trigrams_plus_svm) {
            std::vector<TokenSeq> train_tokens;
            train_tokens.reserve(train.size());
            for (const DocRef& d : train) train_tokens.push_back(*d.tokens);
            space = build_ngram_space(train_tokens, order, config.ngram_min_count);
            fill([&](const DocRef& d) { return ngram_vector(*d.tokens, space, order); });
        } else if (a == Approach::pos_svm) {
            space = build_pos_space(penn_treebank_tags());
            fill([&](const DocRef& d) {
                return pos_vector(*d.tagged, space, penn_treebank_tags());
            });
        } else if (a == Approach::lexicon_svm) {
            space = build_lexicon_space(*inputs.lexicon);
            fill([&](const DocRef& d) {
                return lexicon_vector(*d.tokens, *inputs.lexicon, space);
            });
        } else {  // lexicon + bigrams+
            std::vector<TokenSeq> train_tokens;
            train_tokens.reserve(train.size());
            for (const DocRef& d : train) train_tokens.push_back(*d.tokens);
            FeatureSpace lex_space = build_lexicon_space(*inputs.lexicon);
            FeatureSpace ngram_space = build_ngram_space(train_tokens, order, config.ngram_min_count);
            // n-grams first so an ambiguous lexicon category gets the
            // "_lexicon" qualifier, not the word feature
            space = FeatureSpace::concat({&ngram_space, &lex_space});
            fill([&](const DocRef& d) {
                SparseVector lex = lexicon_vector(*d.tokens, *inputs.lexicon, lex_space, false);
                SparseVector ng = ngram_vector(*d.tokens, ngram_space, order, false);
                return combine_blocks(space, {{"lexicon", std::move(lex)},
                                              {"ngram", std::move(ng)}});
            });
        }

        std::vector<SvmExample> examples(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
            examples[i].x = std::move(train_x[i]);
            examples[i].y = sign_of(train[i].review->label);
        }
        LinearModel model = train_linear_svm(examples, c_value, config.svm_tol, split_seed,
                                             config.svm_max_epochs, space.size());
        for (std::size_t i = 0; i < test.size(); ++i) {
            Prediction p = predict(model, test_x[i]);
            Label lab = label_of(p.label);
            predicted.push_back(lab);
            out.predictions.push_back({test[i].review->id, truth[i], lab, p.margin});
        }
        out.model = std::move(model);
        out.space = std::move(space);
    }

    out.counts = ConfusionCounts::from_pairs(truth, predicted);
    return out;
}

std::vector<std::vector<DocRef>> split_by_fold(const PreparedCorpus& prep, const FoldPlan& plan) {
    std::vector<std::vector<DocRef>> folds(static_cast<std::size_t>(plan.k));
    for (const DocRef& d : prep.docs)
        folds[static_cast<std::size_t>(plan.fold_of(*d.review))].push_back(d);
    for (int f = 0; f < plan.k; ++f) {
        bool has_t = false, has_d = false;
        for (const DocRef& d : folds[static_cast<std::size_t>(f)])
            (d.review->label == Label::truthful ? has_t : has_d) = true;
        if (!has_t || !has_d)
            throw Error("fold " + std::to_string(f) + " does not contain both classes");
    }
    return folds;
}

double select_c_for(const std::vector<std::vector<DocRef>>& folds, std::span<const int> train_folds,
                    const ApproachConfig& config, const ExperimentInputs& inputs) {
    if (!approach_is_svm(config.approach)) return std::nan("");
    if (config.c_grid.empty()) throw Error("inner_select: empty hyperparameter grid");
    if (train_folds.size() < 2) throw Error("inner_select: need >= 2 inner folds");

    std::vector<double> mean_acc(config.c_grid.size(), 0.0);
    for (int held : train_folds) {
        std::vector<DocRef> inner_train;
        for (int f : train_folds)
            if (f != held)
                inner_train.insert(inner_train.end(), folds[static_cast<std::size_t>(f)].begin(),
                                   folds[static_cast<std::size_t>(f)].end());
        const std::vector<DocRef>& inner_test = folds[static_cast<std::size_t>(held)];
        for (std::size_t gi = 0; gi < config.c_grid.size(); ++gi) {
            std::uint64_t seed = derive_seed(
                config.seed, "inner:" + std::to_string(held) + ":c=" +
                                 format_double(config.c_grid[gi], 6));
            SplitEval ev = evaluate_split(inner_train, inner_test, config, inputs,
                                          config.c_grid[gi], seed);
            mean_acc[gi] += static_cast<double>(ev.counts.correct()) /
                            static_cast<double>(ev.counts.total());
        }
    }
    // grid order may be arbitrary; ties must resolve to the smallest C
    std::vector<std::size_t> order(config.c_grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return config.c_grid[a] < config.c_grid[b]; });
    std::size_t best = order[0];
    for (std::size_t oi : order)
        if (mean_acc[oi] > mean_acc[best]) best = oi;
    return config.c_grid[best];
}

}  // namespace

double inner_select(const Corpus& corpus, const FoldPlan& plan, std::span<const int> train_folds,
                    const ApproachConfig& config, const ExperimentInputs& inputs) {
    PreparedCorpus prep = prepare(corpus, inputs);
    require_inputs(config.approach, inputs, prep);
    auto folds = split_by_fold(prep, plan);
    return select_c_for(folds, train_folds, config, inputs);
}

EvalReport nested_cv(const Corpus& corpus, const FoldPlan& plan, const ApproachConfig& config,
                     const ExperimentInputs& inputs) {
    PreparedCorpus prep = prepare(corpus, inputs);
    require_inputs(config.approach, inputs, prep);
    auto folds = split_by_fold(prep, plan);

    auto run_fold = [&](int f) {
        std::vector<int> train_folds;
        std::vector<DocRef> train;
        for (int g = 0; g < plan.k; ++g) {
            if (g == f) continue;
            train_folds.push_back(g);
            train.insert(train.end(), folds[static_cast<std::size_t>(g)].begin(),
                         folds[static_cast<std::size_t>(g)].end());
        }
        double c = select_c_for(folds, train_folds, config, inputs);
        std::uint64_t seed = derive_seed(config.seed, "outer:" + std::to_string(f));
        SplitEval ev = evaluate_split(train, folds[static_cast<std::size_t>(f)], config, inputs,
                                      c, seed);

        FoldResult result;
        result.fold = f;
        result.selected_c = c;
        result.counts = ev.counts;
        result.predictions = std::move(ev.predictions);
        result.model = std::move(ev.model);
        result.space = std::move(ev.space);
        for (const DocRef& d : train) result.touched_ids.push_back(d.review->id);
        std::sort(result.touched_ids.begin(), result.touched_ids.end());
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const std::string& id : result.touched_ids) {
            h = fnv1a(id, h);
            h = fnv1a("\n", h);
        }
        result.touched_hash = h;
        return result;
    };

    std::vector<FoldResult> results(static_cast<std::size_t>(plan.k));
    unsigned workers = std::thread::hardware_concurrency();
    if (workers > 1) {
        std::vector<std::future<FoldResult>> futures;
        futures.reserve(static_cast<std::size_t>(plan.k));
        for (int f = 0; f < plan.k; ++f)
            futures.push_back(std::async(std::launch::async, run_fold, f));
        for (int f = 0; f < plan.k; ++f) results[static_cast<std::size_t>(f)] = futures[static_cast<std::size_t>(f)].get();
    } else {
        for (int f = 0; f < plan.k; ++f) results[static_cast<std::size_t>(f)] = run_fold(f);
    }

    EvalReport report = aggregate_report(approach_name(config.approach), plan.k, std::move(results));
    report.config_hash = config.hash();
    report.corpus_hash = corpus.hash();
    report.seed = config.seed;
    return report;
}

EvalReport aggregate_report(const std::string& approach, int k, std::vector<FoldResult> folds) {
    if (static_cast<int>(folds.size()) != k)
        throw Error("aggregate_report: got " + std::to_string(folds.size()) + " folds, plan has " +
                    std::to_string(k));
    EvalReport report;
    report.approach = approach;
    report.k = k;
    report.folds = std::move(folds);
    for (const FoldResult& f : report.folds) report.aggregate += f.counts;
    report.metrics = micro_metrics(report.aggregate);
    return report;
}

SignTestResult compare_approaches(std::span<const ItemPrediction> preds_a,
                                  std::span<const ItemPrediction> preds_b) {
    std::map<std::string, const ItemPrediction*> by_id;
    for (const ItemPrediction& p : preds_a) by_id[p.id] = &p;
    if (by_id.size() != preds_a.size()) throw Error("compare_approaches: duplicate item ids");
    if (preds_a.size() != preds_b.size())
        throw Error("compare_approaches: prediction sets differ in size");

    std::vector<bool> correct_a, correct_b;
    correct_a.reserve(preds_b.size());
    correct_b.reserve(preds_b.size());
    for (const ItemPrediction& pb : preds_b) {
        auto it = by_id.find(pb.id);
        if (it == by_id.end())
            throw Error("compare_approaches: item " + pb.id + " missing from first set");
        correct_a.push_back(it->second->predicted == it->second->truth);
        correct_b.push_back(pb.predicted == pb.truth);
    }
    return sign_test(correct_a, correct_b, Sided::greater);
}

std::vector<ItemPrediction> EvalReport::all_predictions() const {
    std::vector<ItemPrediction> out;
    for (const FoldResult& f : folds)
        out.insert(out.end(), f.predictions.begin(), f.predictions.end());
    return out;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["approach"] = approach;
    j["k"] = k;
    j["config_hash"] = hex64(config_hash);
    j["corpus_hash"] = hex64(corpus_hash);
    j["seed"] = seed;
    nlohmann::json fold_arr = nlohmann::json::array();
    for (const FoldResult& f : folds) {
        nlohmann::json jf;
        jf["fold"] = f.fold;
        if (std::isnan(f.selected_c))
            jf["selected_c"] = nullptr;
        else
            jf["selected_c"] = f.selected_c;
        jf["confusion"] = {{"truthful_as_truthful", f.counts.n[0][0]},
                           {"truthful_as_deceptive", f.counts.n[0][1]},
                           {"deceptive_as_truthful", f.counts.n[1][0]},
                           {"deceptive_as_deceptive", f.counts.n[1][1]}};
        jf["touched_hash"] = hex64(f.touched_hash);
        fold_arr.push_back(std::move(jf));
    }
    j["folds"] = std::move(fold_arr);
    j["aggregate"] = {{"truthful_as_truthful", aggregate.n[0][0]},
                      {"truthful_as_deceptive", aggregate.n[0][1]},
                      {"deceptive_as_truthful", aggregate.n[1][0]},
                      {"deceptive_as_deceptive", aggregate.n[1][1]}};
    j["accuracy"] = metrics.accuracy;
    j["truthful"] = {{"precision", metrics.truthful.precision},
                     {"recall", metrics.truthful.recall},
                     {"f1", metrics.truthful.f1}};
    j["deceptive"] = {{"precision", metrics.deceptive.precision},
                      {"recall", metrics.deceptive.recall},
                      {"f1", metrics.deceptive.f1}};
    return j.dump(2);
}

namespace {

std::string pct(double v) { return format_double(v * 100.0, 1); }

}  // namespace

std::string EvalReport::render_table() const {
    std::ostringstream os;
    os << "                           "
       << "         truthful        deceptive\n";
    os << "approach                   accuracy   P     R     F      P     R     F\n";
    os << approach;
    for (std::size_t i = approach.size(); i < 27; ++i) os << ' ';
    os << pct(metrics.accuracy) << "    ";
    os << pct(metrics.truthful.precision) << "  " << pct(metrics.truthful.recall) << "  "
       << pct(metrics.truthful.f1) << "   ";
    os << pct(metrics.deceptive.precision) << "  " << pct(metrics.deceptive.recall) << "  "
       << pct(metrics.deceptive.f1) << "\n";
    return os.str();
}

std::string EvalReport::predictions_csv() const {
    std::ostringstream os;
    os << "item_id,fold,true_label,predicted_label,margin\n";
    for (const FoldResult& f : folds)
        for (const ItemPrediction& p : f.predictions)
            os << csv_escape(p.id) << ',' << f.fold << ',' << label_name(p.truth) << ','
               << label_name(p.predicted) << ',' << format_double(p.margin, 6) << '\n';
    return os.str();
}

ExperimentFileConfig parse_experiment_config(const std::string& text,
                                             std::string_view source_name) {
    ExperimentFileConfig cfg;
    std::map<std::string, std::string> kv;

    std::string trimmed = text;
    std::size_t first = trimmed.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && trimmed[first] == '{') {
        nlohmann::json j = nlohmann::json::parse(text);
        for (auto& [key, value] : j.items()) {
            if (value.is_string())
                kv[key] = value.get<std::string>();
            else if (value.is_array()) {
                std::string joined;
                for (const auto& item : value) {
                    if (!joined.empty()) joined += ",";
                    joined += item.dump();
                }
                kv[key] = joined;
            } else {
                kv[key] = value.dump();
            }
        }
    } else {
        std::istringstream in(text);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::size_t start = line.find_first_not_of(" \t");
            if (start == std::string::npos || line[start] == '#') continue;
            std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw Error(std::string(source_name) + ":" + std::to_string(line_no) +
                            ": expected key = value");
            auto trim = [](std::string s) {
                std::size_t b = s.find_first_not_of(" \t");
                std::size_t e = s.find_last_not_of(" \t");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        }
    }

    auto take = [&](const char* key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };
    if (auto v = take("approach")) cfg.approach = *v;
    if (auto v = take("corpus")) cfg.corpus_path = *v;
    if (auto v = take("lexicon")) cfg.lexicon_path = *v;
    if (auto v = take("tagged")) cfg.tagged_path = *v;
    if (auto v = take("out")) cfg.out_dir = *v;
    if (auto v = take("seed")) cfg.seed = std::stoull(*v);
    if (auto v = take("folds")) cfg.folds = std::stoi(*v);
    if (auto v = take("c_grid")) {
        cfg.c_grid.clear();
        std::istringstream gs(*v);
        std::string item;
        while (std::getline(gs, item, ','))
            if (!item.empty()) cfg.c_grid.push_back(std::stod(item));
        if (cfg.c_grid.empty())
            throw Error(std::string(source_name) + ": c_grid has no values");
    }
    if (cfg.approach.empty()) throw Error(std::string(source_name) + ": missing approach");
    if (cfg.corpus_path.empty()) throw Error(std::string(source_name) + ": missing corpus");
    return cfg;
}

}  // namespace opspam
