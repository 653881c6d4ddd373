// opspam: deceptive-review detection toolkit CLI.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "opspam/corpus.hpp"
#include "opspam/experiments.hpp"
#include "opspam/io.hpp"
#include "opspam/stats.hpp"
#include "opspam/svm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    bool seed_set = false;
    bool quiet = false;
};

std::ostream& info(const GlobalOpts& g) {
    static std::ostringstream sink;
    if (g.quiet) {
        sink.str("");
        return sink;
    }
    return std::cout;
}

// exit-1 class for data problems that the spec pins as usage errors
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int run_ingest(const GlobalOpts& g, const std::string& source, int folds) {
    opspam::Corpus corpus = opspam::load_corpus(source);
    opspam::FoldPlan plan = opspam::assign_folds(corpus, folds, g.seed);

    std::map<std::string, std::pair<long long, long long>> per_hotel;
    long long truthful = 0, deceptive = 0;
    for (const opspam::Review& r : corpus.reviews) {
        auto& p = per_hotel[r.hotel];
        if (r.label == opspam::Label::truthful) {
            ++p.first;
            ++truthful;
        } else {
            ++p.second;
            ++deceptive;
        }
    }

    json j;
    j["reviews"] = corpus.reviews.size();
    j["hotels"] = corpus.hotels.size();
    j["truthful"] = truthful;
    j["deceptive"] = deceptive;
    j["corpus_hash"] = opspam::hex64(corpus.hash());
    j["gold_shaped"] = corpus.is_gold_shaped();
    json hotels = json::object();
    for (const auto& [hotel, p] : per_hotel)
        hotels[hotel] = {{"truthful", p.first}, {"deceptive", p.second},
                         {"fold", plan.assignment.at(hotel)}};
    j["per_hotel"] = std::move(hotels);

    opspam::write_text_file(fs::path(g.out_dir) / "corpus_summary.json", j.dump(2) + "\n");

    std::ostringstream plan_csv;
    plan_csv << "hotel,fold\n";
    for (const auto& [hotel, fold] : plan.assignment)
        plan_csv << opspam::csv_escape(hotel) << ',' << fold << '\n';
    opspam::write_text_file(fs::path(g.out_dir) / "fold_plan.csv", plan_csv.str());

    info(g) << "ingested " << corpus.reviews.size() << " reviews (" << truthful << " truthful / "
            << deceptive << " deceptive) from " << corpus.hotels.size() << " hotels\n"
            << "corpus hash " << opspam::hex64(corpus.hash()) << "; fold plan and summary in "
            << g.out_dir << "\n";
    return 0;
}

int run_cv(const GlobalOpts& g, const std::string& config_path) {
    opspam::ExperimentFileConfig file_cfg =
        opspam::parse_experiment_config(opspam::slurp_file(config_path), config_path);

    opspam::ApproachConfig cfg;
    try {
        cfg.approach = opspam::parse_approach(file_cfg.approach);
    } catch (const opspam::Error& e) {
        throw UsageError(e.what());
    }
    cfg.c_grid = file_cfg.c_grid;
    cfg.seed = g.seed_set ? g.seed : file_cfg.seed;

    fs::path out = file_cfg.out_dir.empty() ? fs::path(g.out_dir) : fs::path(file_cfg.out_dir);
    fs::path base = fs::path(config_path).parent_path();
    auto resolve = [&](const std::string& p) {
        fs::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };

    opspam::Corpus corpus = opspam::load_corpus(resolve(file_cfg.corpus_path));
    opspam::FoldPlan plan = opspam::assign_folds(corpus, file_cfg.folds, cfg.seed);

    opspam::ExperimentInputs inputs;
    std::optional<opspam::Lexicon> lexicon;
    std::vector<opspam::TaggedSeq> tagged;
    if (!file_cfg.lexicon_path.empty()) {
        lexicon = opspam::Lexicon::load(resolve(file_cfg.lexicon_path));
        inputs.lexicon = &*lexicon;
    }
    if (!file_cfg.tagged_path.empty()) {
        tagged = opspam::load_tagged_file(resolve(file_cfg.tagged_path),
                                          opspam::penn_treebank_tags());
        inputs.tagged = &tagged;
    }

    opspam::EvalReport report = opspam::nested_cv(corpus, plan, cfg, inputs);

    opspam::write_text_file(out / "report.json", report.to_json() + "\n");
    opspam::write_text_file(out / "report.txt", report.render_table());
    opspam::write_text_file(out / "predictions.csv", report.predictions_csv());
    for (const opspam::FoldResult& f : report.folds) {
        if (f.model) {
            opspam::write_text_file(out / ("model_fold" + std::to_string(f.fold) + ".json"),
                                    f.model->to_json() + "\n");
        }
        if (f.space) {
            opspam::write_text_file(out / ("space_fold" + std::to_string(f.fold) + ".tsv"),
                                    f.space->dump());
        }
    }
    info(g) << report.render_table();
    info(g) << "reports written to " << out.string() << "\n";
    return 0;
}

int run_weights(const GlobalOpts& g, const std::vector<std::string>& model_files,
                const std::vector<std::string>& space_files, std::size_t k,
                const std::string& out_file) {
    if (model_files.size() != space_files.size())
        throw UsageError("need one --space per --model");
    if (model_files.empty()) throw UsageError("need at least one --model");

    std::vector<opspam::LinearModel> models;
    std::vector<opspam::FeatureSpace> spaces;
    models.reserve(model_files.size());
    spaces.reserve(model_files.size());
    for (std::size_t i = 0; i < model_files.size(); ++i) {
        models.push_back(opspam::LinearModel::from_json(opspam::slurp_file(model_files[i])));
        spaces.push_back(opspam::FeatureSpace::from_dump(opspam::slurp_file(space_files[i]),
                                                         space_files[i]));
        if (models.back().space_hash != spaces.back().hash())
            throw opspam::Error("model " + model_files[i] + " was trained on a different space than " +
                                space_files[i]);
    }
    std::vector<std::pair<const opspam::LinearModel*, const opspam::FeatureSpace*>> folds;
    for (std::size_t i = 0; i < models.size(); ++i) folds.emplace_back(&models[i], &spaces[i]);

    opspam::NamedWeightReport report = opspam::top_weights_by_name(folds, k);

    std::ostringstream csv;
    csv << "rank,sign,feature,block,avg_weight\n";
    auto emit = [&](const std::vector<opspam::RankedWeight>& list, const char* sign) {
        for (std::size_t i = 0; i < list.size(); ++i)
            csv << (i + 1) << ',' << sign << ',' << opspam::csv_escape(list[i].name) << ','
                << report.block_of[list[i].name] << ','
                << opspam::format_double(list[i].weight, 6) << '\n';
    };
    emit(report.positive, "positive");
    emit(report.negative, "negative");

    if (out_file.empty()) {
        std::cout << csv.str();
    } else {
        opspam::write_text_file(out_file, csv.str());
        info(g) << "weight report written to " << out_file << "\n";
    }
    return 0;
}

int run_judges(const GlobalOpts& g, const std::string& annotations_path) {
    opspam::JudgeAnnotations ann = opspam::JudgeAnnotations::load_csv(annotations_path);
    if (ann.items.empty()) throw opspam::Error(annotations_path + ": no items");
    std::size_t judges = ann.judge_count();
    std::vector<opspam::Label> truth = ann.truth_column();

    json j;
    std::ostringstream table;
    table << "                 accuracy   truthful P/R/F        deceptive P/R/F      binomial p\n";

    auto row = [&](const std::string& name, const std::vector<opspam::Label>& pred,
                   bool with_binom) {
        opspam::ConfusionCounts conf = opspam::ConfusionCounts::from_pairs(truth, pred);
        opspam::MicroReport m = opspam::micro_metrics(conf);
        json e;
        e["accuracy"] = m.accuracy;
        e["truthful"] = {{"precision", m.truthful.precision},
                         {"recall", m.truthful.recall},
                         {"f1", m.truthful.f1}};
        e["deceptive"] = {{"precision", m.deceptive.precision},
                          {"recall", m.deceptive.recall},
                          {"f1", m.deceptive.f1}};
        table << name;
        for (std::size_t i = name.size(); i < 17; ++i) table << ' ';
        auto pct = [](double v) { return opspam::format_double(v * 100.0, 1); };
        table << pct(m.accuracy) << "       " << pct(m.truthful.precision) << ' '
              << pct(m.truthful.recall) << ' ' << pct(m.truthful.f1) << "       "
              << pct(m.deceptive.precision) << ' ' << pct(m.deceptive.recall) << ' '
              << pct(m.deceptive.f1);
        if (with_binom) {
            double p = opspam::binomial_test(conf.correct(), conf.total(), 0.5,
                                             opspam::Sided::two_tailed);
            e["at_chance_two_tailed_p"] = p;
            table << "      " << opspam::format_double(p, 3);
        }
        table << '\n';
        return e;
    };

    std::vector<std::vector<opspam::Label>> per_judge;
    for (std::size_t jd = 0; jd < judges; ++jd) per_judge.push_back(ann.judge_column(jd));
    for (std::size_t jd = 0; jd < judges; ++jd)
        j["judge" + std::to_string(jd + 1)] = row("JUDGE " + std::to_string(jd + 1),
                                                  per_judge[jd], true);
    if (judges % 2 == 1)
        j["majority"] = row("MAJORITY", opspam::meta_judge(per_judge, opspam::MetaMode::majority),
                            false);
    j["skeptic"] = row("SKEPTIC", opspam::meta_judge(per_judge, opspam::MetaMode::skeptic), false);

    opspam::KappaResult fleiss = opspam::fleiss_kappa(ann);
    j["fleiss_kappa"] = fleiss.kappa;
    if (fleiss.degenerate) j["fleiss_kappa_degenerate"] = true;
    table << "Fleiss kappa: " << opspam::format_double(fleiss.kappa, 3) << '\n';

    json pairwise = json::object();
    for (std::size_t a = 0; a < judges; ++a) {
        for (std::size_t b = a + 1; b < judges; ++b) {
            opspam::KappaResult ck = opspam::cohen_kappa(per_judge[a], per_judge[b]);
            std::string key = "judge" + std::to_string(a + 1) + "_judge" + std::to_string(b + 1);
            pairwise[key] = ck.kappa;
            table << "Cohen kappa " << (a + 1) << "-" << (b + 1) << ": "
                  << opspam::format_double(ck.kappa, 3) << '\n';
        }
    }
    j["pairwise_cohen_kappa"] = std::move(pairwise);

    opspam::write_text_file(fs::path(g.out_dir) / "judges.json", j.dump(2) + "\n");
    opspam::write_text_file(fs::path(g.out_dir) / "judges.txt", table.str());
    info(g) << table.str();
    return 0;
}

int run_build(const GlobalOpts& g, const std::string& pool_path, int per_hotel,
              std::int64_t min_chars, int stars) {
    opspam::Corpus pool = opspam::load_corpus(pool_path);

    std::vector<opspam::Review> truthful_pool, deceptive;
    for (const opspam::Review& r : pool.reviews)
        (r.label == opspam::Label::truthful ? truthful_pool : deceptive).push_back(r);
    if (deceptive.empty())
        throw opspam::Error("build: pool has no deceptive reviews to fit lengths on");

    opspam::FilterResult filtered =
        opspam::filter_candidates(truthful_pool, min_chars, stars);

    std::vector<double> deceptive_lengths;
    deceptive_lengths.reserve(deceptive.size());
    for (const opspam::Review& r : deceptive)
        deceptive_lengths.push_back(static_cast<double>(r.char_length));
    opspam::TruncLogNormalParams params =
        opspam::fit_truncated_lognormal(deceptive_lengths, static_cast<double>(min_chars));

    std::vector<opspam::Review> selected =
        opspam::sample_length_matched(filtered.kept, params, per_hotel, g.seed);

    std::vector<double> selected_lengths;
    for (const opspam::Review& r : selected)
        selected_lengths.push_back(static_cast<double>(r.char_length));
    std::sort(selected_lengths.begin(), selected_lengths.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < selected_lengths.size(); ++i) {
        double f = params.cdf(selected_lengths[i]);
        double n = static_cast<double>(selected_lengths.size());
        ks = std::max(ks, std::fabs(static_cast<double>(i + 1) / n - f));
        ks = std::max(ks, std::fabs(static_cast<double>(i) / n - f));
    }

    json diag;
    diag["mu"] = params.mu;
    diag["sigma"] = params.sigma;
    diag["truncation_point"] = params.truncation_point;
    diag["ks_distance"] = ks;
    diag["selected"] = selected.size();
    json tally = json::array();
    for (const opspam::FilterRule& rule : filtered.tally)
        tally.push_back({{"rule", rule.name},
                         {"removed", rule.removed},
                         {"skipped", rule.skipped}});
    diag["filter_tally"] = std::move(tally);
    opspam::write_text_file(fs::path(g.out_dir) / "build_diagnostics.json", diag.dump(2) + "\n");

    std::ostringstream manifest;
    manifest << "id,hotel,label,char_length\n";
    for (const opspam::Review& r : selected)
        manifest << opspam::csv_escape(r.id) << ',' << opspam::csv_escape(r.hotel) << ','
                 << opspam::label_name(r.label) << ',' << r.char_length << '\n';
    opspam::write_text_file(fs::path(g.out_dir) / "selection.csv", manifest.str());

    info(g) << "selected " << selected.size() << " truthful reviews (" << per_hotel
            << " per hotel); fit mu=" << opspam::format_double(params.mu, 4)
            << " sigma=" << opspam::format_double(params.sigma, 4)
            << " KS=" << opspam::format_double(ks, 4) << "\n"
            << "selection and diagnostics in " << g.out_dir << "\n";
    return 0;
}

int run_stats(const GlobalOpts& g, const std::string& source, const std::string& label_filter,
              double split_at) {
    opspam::Corpus corpus = opspam::load_corpus(source);
    std::vector<opspam::Review> subset;
    for (const opspam::Review& r : corpus.reviews) {
        if (label_filter.empty() || opspam::label_name(r.label) == label_filter)
            subset.push_back(r);
    }
    if (subset.empty()) throw opspam::Error("stats: no reviews match label filter");
    opspam::DescriptiveStats d = opspam::descriptive_stats(subset, split_at);
    opspam::write_text_file(fs::path(g.out_dir) / "stats.json", d.to_json() + "\n");
    opspam::write_text_file(fs::path(g.out_dir) / "stats.txt", d.render_table());
    info(g) << d.render_table();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deceptive opinion spam toolkit"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.fallthrough();
    std::string config_path;
    app.add_option("--config", config_path, "experiment config file (used by cv)");
    app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", g.seed, "root RNG seed");
    app.add_flag("--quiet", g.quiet, "suppress console output");

    std::string ingest_source;
    int ingest_folds = 5;
    auto* ingest = app.add_subcommand("ingest", "load and validate a corpus, plan folds");
    ingest->add_option("source", ingest_source, "manifest CSV or dataset directory")->required();
    ingest->add_option("--folds", ingest_folds, "fold count")->capture_default_str();

    auto* cv = app.add_subcommand("cv", "run one nested cross-validation experiment");

    std::vector<std::string> weight_models, weight_spaces;
    std::size_t weight_k = 15;
    std::string weight_out;
    auto* weights = app.add_subcommand("weights", "averaged weight report from fold models");
    weights->add_option("--model", weight_models, "model JSON (repeat per fold)");
    weights->add_option("--space", weight_spaces, "feature-space dump (repeat per fold)");
    weights->add_option("-k,--top", weight_k, "features per sign")->capture_default_str();
    weights->add_option("--report", weight_out, "output CSV (default: stdout)");

    std::string judges_csv;
    auto* judges = app.add_subcommand("judges", "human-judge performance report");
    judges->add_option("annotations", judges_csv, "judge annotations CSV")->required();

    std::string build_pool;
    int build_per_hotel = 20, build_stars = 5;
    std::int64_t build_min_chars = 150;
    auto* build = app.add_subcommand("build", "filter + length-matched truthful selection");
    build->add_option("pool", build_pool, "candidate pool manifest or directory")->required();
    build->add_option("--per-hotel", build_per_hotel, "reviews per hotel")->capture_default_str();
    build->add_option("--min-chars", build_min_chars, "length cutoff (characters)")
        ->capture_default_str();
    build->add_option("--stars", build_stars, "required star rating")->capture_default_str();

    std::string stats_source, stats_label;
    double stats_split = 1.0;
    auto* stats = app.add_subcommand("stats", "descriptive statistics report");
    stats->add_option("source", stats_source, "manifest CSV or dataset directory")->required();
    stats->add_option("--label", stats_label, "restrict to truthful or deceptive");
    stats->add_option("--split-at", stats_split, "authoring-minutes split point")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    g.seed_set = seed_opt->count() > 0;

    try {
        if (*ingest) return run_ingest(g, ingest_source, ingest_folds);
        if (*cv) {
            if (config_path.empty()) throw UsageError("cv needs --config <file>");
            return run_cv(g, config_path);
        }
        if (*weights) return run_weights(g, weight_models, weight_spaces, weight_k, weight_out);
        if (*judges) return run_judges(g, judges_csv);
        if (*build) return run_build(g, build_pool, build_per_hotel, build_min_chars, build_stars);
        if (*stats) return run_stats(g, stats_source, stats_label, stats_split);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
