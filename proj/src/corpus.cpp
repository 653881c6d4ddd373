#include "opspam/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "opspam/dists.hpp"
#include "opspam/io.hpp"
#include "opspam/rng.hpp"
#include "opspam/textproc.hpp"

namespace fs = std::filesystem;

namespace opspam {

namespace {

void finalize_review(Review& r, const std::string& where) {
    if (r.hotel.empty()) throw Error(where + ": empty hotel");
    r.char_length = static_cast<std::int64_t>(utf8_length(r.text, where));
    r.word_length = static_cast<std::int64_t>(tokenize(r.text).tokens.size());
}

Corpus finish_corpus(std::vector<Review> reviews) {
    std::unordered_set<std::string> seen_ids;
    std::set<std::string> hotels;
    for (const Review& r : reviews) {
        if (!seen_ids.insert(r.id).second) throw Error("duplicate review id: " + r.id);
        hotels.insert(r.hotel);
    }
    Corpus c;
    c.reviews = std::move(reviews);
    c.hotels.assign(hotels.begin(), hotels.end());
    return c;
}

Corpus load_from_manifest(const fs::path& manifest_path) {
    CsvTable t = parse_csv(slurp_file(manifest_path), manifest_path.string());
    int id_col = t.column("id");
    int path_col = t.column("path");
    int label_col = t.column("label");
    int hotel_col = t.column("hotel");
    if (id_col < 0 || path_col < 0 || label_col < 0 || hotel_col < 0)
        throw Error(manifest_path.string() + ": manifest needs id, path, label, hotel columns");
    int fold_col = t.column("fold");
    int polarity_col = t.column("polarity");
    int stars_col = t.column("star_rating");
    int first_col = t.column("first_time_author");
    int minutes_col = t.column("authoring_minutes");
    int author_col = t.column("author_id");

    fs::path base = manifest_path.parent_path();
    std::vector<Review> reviews;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        std::string where = manifest_path.string() + " row " + std::to_string(r + 2);
        auto cell = [&](int col) -> const std::string& { return row[static_cast<std::size_t>(col)]; };

        Review rev;
        rev.id = cell(id_col);
        if (rev.id.empty()) throw Error(where + ": empty id");
        rev.label = parse_label(cell(label_col), where);
        rev.hotel = cell(hotel_col);
        fs::path text_path = base / cell(path_col);
        rev.text = slurp_file(text_path);

        auto opt_cell = [&](int col) -> std::optional<std::string> {
            if (col < 0) return std::nullopt;
            const std::string& v = cell(col);
            if (v.empty()) return std::nullopt;
            return v;
        };
        if (auto v = opt_cell(fold_col)) rev.fold = std::stoi(*v);
        if (auto v = opt_cell(polarity_col)) rev.polarity = *v;
        if (auto v = opt_cell(stars_col)) rev.star_rating = std::stoi(*v);
        if (auto v = opt_cell(minutes_col)) rev.authoring_minutes = std::stod(*v);
        if (auto v = opt_cell(author_col)) rev.author_id = *v;
        if (auto v = opt_cell(first_col)) {
            if (*v == "true" || *v == "1")
                rev.first_time_author = true;
            else if (*v == "false" || *v == "0")
                rev.first_time_author = false;
            else
                throw Error(where + ": bad first_time_author value \"" + *v + "\"");
        }
        finalize_review(rev, where);
        reviews.push_back(std::move(rev));
    }
    return finish_corpus(std::move(reviews));
}

// Published-dataset layout: class from a path segment containing "truthful"
// or "deceptive", fold from "fold<k>", hotel from the filename's middle
// segments ("t_hilton_3.txt" -> "hilton").
Corpus load_from_directory(const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file() && entry.path().extension() == ".txt")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(root.string() + ": no .txt review files found");

    std::vector<Review> reviews;
    for (const fs::path& f : files) {
        Review rev;
        std::optional<Label> label;
        for (const auto& part : fs::relative(f, root)) {
            std::string seg = part.string();
            if (seg.find("truthful") != std::string::npos) label = Label::truthful;
            if (seg.find("deceptive") != std::string::npos) label = Label::deceptive;
            if (seg.rfind("fold", 0) == 0 && seg.size() > 4)
                rev.fold = std::stoi(seg.substr(4));
            if (seg.find("negative") != std::string::npos) rev.polarity = "negative";
        }
        if (!label)
            throw Error(f.string() + ": cannot infer label from path (no truthful/deceptive segment)");
        rev.label = *label;

        std::string stem = f.stem().string();
        auto first_us = stem.find('_');
        auto last_us = stem.rfind('_');
        if (first_us == std::string::npos || last_us <= first_us)
            throw Error(f.string() + ": filename does not follow <prefix>_<hotel>_<n>.txt");
        rev.hotel = stem.substr(first_us + 1, last_us - first_us - 1);
        rev.id = (rev.fold ? "fold" + std::to_string(*rev.fold) + "/" : "") + stem;
        rev.text = slurp_file(f);
        finalize_review(rev, f.string());
        reviews.push_back(std::move(rev));
    }
    return finish_corpus(std::move(reviews));
}

SampleStats compute_stats(const std::vector<double>& values) {
    SampleStats s;
    s.count = static_cast<long long>(values.size());
    if (values.empty()) return s;
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
        s.stddev_defined = true;
    }
    return s;
}

}  // namespace

std::uint64_t Corpus::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const Review& r : reviews) {
        h = fnv1a(r.id, h);
        h = fnv1a(label_name(r.label), h);
        h = fnv1a(r.hotel, h);
        h = fnv1a(r.text, h);
    }
    return h;
}

bool Corpus::is_gold_shaped() const {
    if (hotels.size() != 20 || reviews.size() != 800) return false;
    std::map<std::string, std::pair<int, int>> per_hotel;
    for (const Review& r : reviews) {
        auto& p = per_hotel[r.hotel];
        (r.label == Label::truthful ? p.first : p.second) += 1;
    }
    for (const auto& [hotel, p] : per_hotel)
        if (p.first != 20 || p.second != 20) return false;
    return true;
}

std::vector<const Review*> Corpus::with_label(Label l) const {
    std::vector<const Review*> out;
    for (const Review& r : reviews)
        if (r.label == l) out.push_back(&r);
    return out;
}

Corpus load_corpus(const fs::path& source) {
    if (!fs::exists(source)) throw Error("corpus source does not exist: " + source.string());
    if (fs::is_directory(source)) return load_from_directory(source);
    return load_from_manifest(source);
}

int FoldPlan::fold_of(const Review& r) const {
    auto it = assignment.find(r.hotel);
    if (it == assignment.end()) throw Error("fold plan does not cover hotel: " + r.hotel);
    return it->second;
}

std::vector<std::string> FoldPlan::hotels_in(int fold) const {
    std::vector<std::string> out;
    for (const auto& [hotel, f] : assignment)
        if (f == fold) out.push_back(hotel);
    return out;
}

FoldPlan assign_folds(const Corpus& corpus, int k, std::uint64_t seed) {
    if (k < 1) throw Error("assign_folds: k must be >= 1");
    std::size_t h = corpus.hotels.size();
    if (h == 0 || h % static_cast<std::size_t>(k) != 0)
        throw Error("assign_folds: k=" + std::to_string(k) + " does not divide hotel count " +
                    std::to_string(h));

    FoldPlan plan;
    plan.k = k;

    bool all_labeled = !corpus.reviews.empty() &&
                       std::all_of(corpus.reviews.begin(), corpus.reviews.end(),
                                   [](const Review& r) { return r.fold.has_value(); });
    if (all_labeled) {
        // directory layouts conventionally number folds 1..k; accept either
        // that or 0-based labels, consistently
        int min_fold = *corpus.reviews.front().fold;
        int max_fold = min_fold;
        for (const Review& r : corpus.reviews) {
            min_fold = std::min(min_fold, *r.fold);
            max_fold = std::max(max_fold, *r.fold);
        }
        int offset = (min_fold >= 1 && max_fold == k) ? 1 : 0;
        for (const Review& r : corpus.reviews) {
            int f = *r.fold - offset;
            if (f < 0 || f >= k)
                throw Error("assign_folds: review " + r.id + " has fold " + std::to_string(*r.fold) +
                            " outside the " + std::to_string(k) + "-fold plan");
            auto [it, inserted] = plan.assignment.emplace(r.hotel, f);
            if (!inserted && it->second != f)
                throw Error("assign_folds: hotel " + r.hotel + " spans folds " +
                            std::to_string(it->second) + " and " + std::to_string(f));
        }
        std::size_t per = h / static_cast<std::size_t>(k);
        for (int f = 0; f < k; ++f)
            if (plan.hotels_in(f).size() != per)
                throw Error("assign_folds: manifest folds are unbalanced at fold " +
                            std::to_string(f));
        return plan;
    }

    std::vector<std::string> shuffled = corpus.hotels;  // sorted base order
    SplitMix64 rng(derive_seed(seed, "fold-shuffle"));
    fisher_yates_shuffle(shuffled, rng);
    std::size_t per = h / static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < shuffled.size(); ++i)
        plan.assignment[shuffled[i]] = static_cast<int>(i / per);
    return plan;
}

FilterResult filter_candidates(const std::vector<Review>& reviews, std::int64_t min_chars,
                               int required_stars) {
    FilterResult result;
    bool stars_known = std::all_of(reviews.begin(), reviews.end(),
                                   [](const Review& r) { return r.star_rating.has_value(); });
    bool first_known = std::all_of(reviews.begin(), reviews.end(),
                                   [](const Review& r) { return r.first_time_author.has_value(); });

    FilterRule star_rule{"non-" + std::to_string(required_stars) + "-star", 0, !stars_known};
    FilterRule length_rule{"shorter-than-" + std::to_string(min_chars) + "-chars", 0, false};
    FilterRule first_rule{"first-time-author", 0, !first_known};

    std::vector<Review> pool = reviews;
    auto apply = [&pool](FilterRule& rule, auto pred) {
        if (rule.skipped) return;
        std::vector<Review> kept;
        kept.reserve(pool.size());
        for (Review& r : pool) {
            if (pred(r))
                kept.push_back(std::move(r));
            else
                ++rule.removed;
        }
        pool = std::move(kept);
    };

    apply(star_rule, [&](const Review& r) { return *r.star_rating == required_stars; });
    apply(length_rule, [&](const Review& r) { return r.char_length >= min_chars; });
    apply(first_rule, [&](const Review& r) { return !*r.first_time_author; });

    result.kept = std::move(pool);
    result.tally = {star_rule, length_rule, first_rule};
    return result;
}

double TruncLogNormalParams::cdf(double x) const {
    if (x < truncation_point) return 0.0;
    double zt = (std::log(truncation_point) - mu) / sigma;
    double zx = (std::log(x) - mu) / sigma;
    double base = dists::normal_cdf(zt);
    return (dists::normal_cdf(zx) - base) / (1.0 - base);
}

double TruncLogNormalParams::quantile(double p) const {
    if (p < 0.0 || p >= 1.0) throw Error("truncated lognormal quantile: p must be in [0,1)");
    double zt = (std::log(truncation_point) - mu) / sigma;
    double base = dists::normal_cdf(zt);
    double q = base + p * (1.0 - base);
    if (q <= 0.0) q = std::nextafter(0.0, 1.0);
    if (q >= 1.0) q = std::nextafter(1.0, 0.0);
    return std::exp(mu + sigma * dists::normal_quantile(q));
}

double TruncLogNormalParams::log_likelihood(const std::vector<double>& lengths) const {
    double zt = (std::log(truncation_point) - mu) / sigma;
    double log_tail = dists::log_normal_sf(zt);
    double ll = 0.0;
    for (double x : lengths) {
        double lx = std::log(x);
        double z = (lx - mu) / sigma;
        ll += -0.5 * z * z - std::log(sigma) - lx - 0.5 * std::log(2.0 * M_PI);
    }
    ll -= static_cast<double>(lengths.size()) * log_tail;
    return ll;
}

TruncLogNormalParams fit_truncated_lognormal(const std::vector<double>& lengths,
                                             double truncation_point) {
    if (truncation_point <= 0.0) throw Error("fit: truncation point must be positive");
    if (lengths.size() < 2) throw Error("fit: need at least 2 samples");
    for (double x : lengths)
        if (x < truncation_point)
            throw Error("fit: sample " + std::to_string(x) + " below truncation point " +
                        std::to_string(truncation_point));
    std::set<double> distinct(lengths.begin(), lengths.end());
    if (distinct.size() < 2) throw Error("fit: need at least 2 distinct lengths");

    // start from the untruncated MLE
    double mean_log = 0.0;
    for (double x : lengths) mean_log += std::log(x);
    mean_log /= static_cast<double>(lengths.size());
    double var_log = 0.0;
    for (double x : lengths) var_log += (std::log(x) - mean_log) * (std::log(x) - mean_log);
    var_log /= static_cast<double>(lengths.size());
    double sigma0 = std::max(std::sqrt(var_log), 1e-3);

    auto objective = [&](double mu, double log_sigma) {
        TruncLogNormalParams p{mu, std::exp(log_sigma), truncation_point};
        return -p.log_likelihood(lengths);
    };

    // Nelder-Mead on (mu, log sigma)
    struct Vertex {
        double mu, ls, f;
    };
    auto make_vertex = [&](double mu, double ls) { return Vertex{mu, ls, objective(mu, ls)}; };
    std::vector<Vertex> simplex = {
        make_vertex(mean_log, std::log(sigma0)),
        make_vertex(mean_log + 0.5, std::log(sigma0)),
        make_vertex(mean_log, std::log(sigma0) + 0.5),
    };
    auto by_f = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };

    const int max_iters = 20000;
    double prev_best = std::numeric_limits<double>::infinity();
    int iter = 0;
    for (; iter < max_iters; ++iter) {
        std::sort(simplex.begin(), simplex.end(), by_f);
        if (prev_best - simplex[0].f < 1e-9 &&
            std::fabs(simplex[2].f - simplex[0].f) < 1e-9)
            break;
        prev_best = simplex[0].f;

        double cmu = (simplex[0].mu + simplex[1].mu) / 2.0;
        double cls = (simplex[0].ls + simplex[1].ls) / 2.0;
        Vertex refl = make_vertex(cmu + (cmu - simplex[2].mu), cls + (cls - simplex[2].ls));
        if (refl.f < simplex[0].f) {
            Vertex exp_v = make_vertex(cmu + 2.0 * (cmu - simplex[2].mu),
                                       cls + 2.0 * (cls - simplex[2].ls));
            simplex[2] = exp_v.f < refl.f ? exp_v : refl;
        } else if (refl.f < simplex[1].f) {
            simplex[2] = refl;
        } else {
            Vertex contr = make_vertex(cmu + 0.5 * (simplex[2].mu - cmu),
                                       cls + 0.5 * (simplex[2].ls - cls));
            if (contr.f < simplex[2].f) {
                simplex[2] = contr;
            } else {
                for (int i = 1; i < 3; ++i)
                    simplex[i] = make_vertex((simplex[i].mu + simplex[0].mu) / 2.0,
                                             (simplex[i].ls + simplex[0].ls) / 2.0);
            }
        }
    }
    std::sort(simplex.begin(), simplex.end(), by_f);
    TruncLogNormalParams fitted{simplex[0].mu, std::exp(simplex[0].ls), truncation_point};
    if (iter >= max_iters)
        throw Error("fit: no convergence after " + std::to_string(max_iters) +
                    " iterations; last iterate mu=" + std::to_string(fitted.mu) +
                    " sigma=" + std::to_string(fitted.sigma));
    return fitted;
}

std::vector<Review> sample_length_matched(const std::vector<Review>& pool,
                                          const TruncLogNormalParams& params, int per_hotel,
                                          std::uint64_t seed) {
    if (per_hotel < 1) throw Error("sample_length_matched: per_hotel must be >= 1");
    std::map<std::string, std::vector<const Review*>> by_hotel;
    // candidates below the truncation point can never be selected
    for (const Review& r : pool)
        if (static_cast<double>(r.char_length) >= params.truncation_point)
            by_hotel[r.hotel].push_back(&r);

    std::vector<Review> selected;
    for (auto& [hotel, candidates] : by_hotel) {
        if (candidates.size() < static_cast<std::size_t>(per_hotel))
            throw Error("sample_length_matched: hotel " + hotel + " has only " +
                        std::to_string(candidates.size()) + " candidates, need " +
                        std::to_string(per_hotel));
        // deterministic candidate order: length, then id
        std::sort(candidates.begin(), candidates.end(), [](const Review* a, const Review* b) {
            if (a->char_length != b->char_length) return a->char_length < b->char_length;
            return a->id < b->id;
        });
        std::vector<bool> used(candidates.size(), false);
        SplitMix64 rng(derive_seed(seed, "length-match:" + hotel));
        for (int t = 0; t < per_hotel; ++t) {
            double target = params.quantile(rng.next_double());
            std::size_t best = candidates.size();
            double best_dist = 0.0;
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                if (used[i]) continue;
                double dist = std::fabs(static_cast<double>(candidates[i]->char_length) - target);
                // candidate order makes "first strictly better" implement the
                // smaller-length-then-smaller-id tie-break
                if (best == candidates.size() || dist < best_dist) {
                    best = i;
                    best_dist = dist;
                }
            }
            used[best] = true;
            selected.push_back(*candidates[best]);
        }
    }
    return selected;
}

DescriptiveStats descriptive_stats(const std::vector<Review>& reviews, double split_at_minutes) {
    if (reviews.empty()) throw Error("descriptive_stats: empty input");
    DescriptiveStats d;
    d.split_at_minutes = split_at_minutes;

    std::vector<double> times, lengths, len_below, len_above, t_below, t_above;
    for (const Review& r : reviews) {
        lengths.push_back(static_cast<double>(r.word_length));
        if (r.authoring_minutes) {
            double t = *r.authoring_minutes;
            times.push_back(t);
            if (t < split_at_minutes) {
                len_below.push_back(static_cast<double>(r.word_length));
                t_below.push_back(t);
            } else {
                len_above.push_back(static_cast<double>(r.word_length));
                t_above.push_back(t);
            }
        }
    }
    d.time_overall = compute_stats(times);
    d.length_overall = compute_stats(lengths);
    d.length_below = compute_stats(len_below);
    d.length_above = compute_stats(len_above);
    d.time_below = compute_stats(t_below);
    d.time_above = compute_stats(t_above);
    return d;
}

namespace {

nlohmann::json stats_json(const SampleStats& s) {
    nlohmann::json j;
    j["count"] = s.count;
    if (s.count > 0) {
        j["min"] = s.min;
        j["max"] = s.max;
        j["mean"] = s.mean;
    }
    if (s.stddev_defined)
        j["stddev"] = s.stddev;
    else
        j["stddev_undefined"] = true;
    return j;
}

std::string stats_row(const std::string& name, const SampleStats& s) {
    std::ostringstream os;
    os << "  " << name;
    for (std::size_t i = name.size(); i < 22; ++i) os << ' ';
    os << "count " << s.count;
    if (s.count > 0) {
        os << "  min " << format_double(s.min, 2) << "  max " << format_double(s.max, 2)
           << "  mean " << format_double(s.mean, 2);
        os << "  s " << (s.stddev_defined ? format_double(s.stddev, 2) : "n/a");
    }
    os << '\n';
    return os.str();
}

}  // namespace

std::string DescriptiveStats::to_json() const {
    nlohmann::json j;
    j["split_at_minutes"] = split_at_minutes;
    j["time_overall"] = stats_json(time_overall);
    j["length_overall"] = stats_json(length_overall);
    j["time_below_split"] = stats_json(time_below);
    j["time_at_or_above_split"] = stats_json(time_above);
    j["length_below_split"] = stats_json(length_below);
    j["length_at_or_above_split"] = stats_json(length_above);
    return j.dump(2);
}

std::string DescriptiveStats::render_table() const {
    std::ostringstream os;
    os << "Time spent t (minutes)\n";
    os << stats_row("all", time_overall);
    os << "Length l (words)\n";
    os << stats_row("all", length_overall);
    os << stats_row("t < " + format_double(split_at_minutes, 0), length_below);
    os << stats_row("t >= " + format_double(split_at_minutes, 0), length_above);
    return os.str();
}

}  // namespace opspam
