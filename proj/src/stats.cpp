#include "opspam/stats.hpp"

#include <algorithm>
#include <cmath>

#include "opspam/dists.hpp"
#include "opspam/io.hpp"

namespace opspam::dists {

namespace {

// Modified Lentz continued-fraction evaluation for the incomplete beta.
double beta_cf(double x, double a, double b) {
    const double tiny = 1e-300;
    const double eps = 1e-16;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        double m2 = 2.0 * m;
        double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < eps) break;
    }
    return h;
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double log_normal_sf(double z) {
    double x = z / std::sqrt(2.0);
    if (x < 20.0) return std::log(0.5 * std::erfc(x));
    // asymptotic erfc(x) ~ exp(-x^2)/(x sqrt(pi)) (1 - 1/(2x^2) + 3/(4x^4))
    double inv2 = 1.0 / (2.0 * x * x);
    return -x * x - std::log(x) - 0.5 * std::log(M_PI) - std::log(2.0) +
           std::log1p(-inv2 + 3.0 * inv2 * inv2);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error("normal_quantile: p must be in (0,1)");
    // Acklam's rational approximation, then two Halley steps against erfc.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // exp(x^2/2) overflows past |x| ~ 38; the rational tail is already
    // accurate there
    if (std::fabs(x) < 37.0) {
        for (int it = 0; it < 2; ++it) {
            double e = normal_cdf(x) - p;
            double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
            x = x - u / (1.0 + x * u / 2.0);
        }
    }
    return x;
}

double reg_incomplete_beta(double x, double a, double b) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = a * std::log(x) + b * std::log1p(-x) - std::log(a) -
                      (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    if (x < (a + 1.0) / (a + b + 2.0))
        return std::exp(ln_front) * beta_cf(x, a, b);
    double ln_front_c = b * std::log1p(-x) + a * std::log(x) - std::log(b) -
                        (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    return 1.0 - std::exp(ln_front_c) * beta_cf(1.0 - x, b, a);
}

double t_two_tailed_p(double t, double df) {
    if (df <= 0.0) throw Error("t_two_tailed_p: df must be positive");
    double x = df / (df + t * t);
    return reg_incomplete_beta(x, df / 2.0, 0.5);
}

double log_binom_pmf(long long k, long long n, double p) {
    double lk = static_cast<double>(k), ln = static_cast<double>(n);
    double choose = std::lgamma(ln + 1.0) - std::lgamma(lk + 1.0) - std::lgamma(ln - lk + 1.0);
    double lp = k == 0 ? 0.0 : lk * std::log(p);
    double lq = k == n ? 0.0 : (ln - lk) * std::log1p(-p);
    return choose + lp + lq;
}

}  // namespace opspam::dists

namespace opspam {

const char* label_name(Label l) { return l == Label::truthful ? "truthful" : "deceptive"; }

Label parse_label(std::string_view token, std::string_view where) {
    if (token == "truthful") return Label::truthful;
    if (token == "deceptive") return Label::deceptive;
    throw Error(std::string(where) + ": unknown label token \"" + std::string(token) + "\"");
}

ConfusionCounts ConfusionCounts::from_pairs(std::span<const Label> truth,
                                            std::span<const Label> predicted) {
    if (truth.size() != predicted.size())
        throw Error("confusion: truth/prediction length mismatch");
    ConfusionCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i)
        ++c.n[static_cast<int>(truth[i])][static_cast<int>(predicted[i])];
    return c;
}

long long ConfusionCounts::total() const { return n[0][0] + n[0][1] + n[1][0] + n[1][1]; }
long long ConfusionCounts::correct() const { return n[0][0] + n[1][1]; }

long long ConfusionCounts::tp(Label c) const {
    int i = static_cast<int>(c);
    return n[i][i];
}
long long ConfusionCounts::fp(Label c) const {
    int i = static_cast<int>(c);
    return n[1 - i][i];
}
long long ConfusionCounts::fn(Label c) const {
    int i = static_cast<int>(c);
    return n[i][1 - i];
}
long long ConfusionCounts::tn(Label c) const {
    int i = static_cast<int>(c);
    return n[1 - i][1 - i];
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) n[i][j] += other.n[i][j];
    return *this;
}

namespace {

ClassMetrics class_metrics(const ConfusionCounts& conf, Label c) {
    ClassMetrics m;
    long long tp = conf.tp(c), fp = conf.fp(c), fn = conf.fn(c);
    if (tp + fp == 0) {
        m.precision_undefined = true;
    } else {
        m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    if (tp + fn == 0) {
        m.recall_undefined = true;
    } else {
        m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    }
    if (m.precision + m.recall <= 0.0 || m.precision_undefined || m.recall_undefined) {
        m.f1_undefined = true;
        m.f1 = 0.0;
    } else {
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    return m;
}

}  // namespace

MicroReport micro_metrics(const ConfusionCounts& conf) {
    if (conf.total() == 0) throw Error("micro_metrics: empty confusion counts");
    MicroReport r;
    r.accuracy = static_cast<double>(conf.correct()) / static_cast<double>(conf.total());
    r.truthful = class_metrics(conf, Label::truthful);
    r.deceptive = class_metrics(conf, Label::deceptive);
    return r;
}

double binomial_test(long long k, long long n, double p0, Sided sided) {
    if (k < 0 || n < 0 || k > n) throw Error("binomial_test: need 0 <= k <= n");
    if (!(p0 > 0.0 && p0 < 1.0)) throw Error("binomial_test: need 0 < p0 < 1");
    if (n == 0) return 1.0;

    auto tail_sum = [&](long long lo, long long hi) {
        double s = 0.0;
        for (long long i = lo; i <= hi; ++i) s += std::exp(dists::log_binom_pmf(i, n, p0));
        return std::min(1.0, s);
    };

    switch (sided) {
        case Sided::greater:
            return tail_sum(k, n);
        case Sided::less:
            return tail_sum(0, k);
        case Sided::two_tailed: {
            double log_obs = dists::log_binom_pmf(k, n, p0);
            // relative slack so equal-probability outcomes on the far side count
            double cutoff = log_obs + 1e-9;
            double s = 0.0;
            for (long long i = 0; i <= n; ++i) {
                if (dists::log_binom_pmf(i, n, p0) <= cutoff)
                    s += std::exp(dists::log_binom_pmf(i, n, p0));
            }
            return std::min(1.0, s);
        }
    }
    return 1.0;
}

SignTestResult sign_test(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b,
                         Sided sided) {
    if (correct_a.size() != correct_b.size())
        throw Error("sign_test: paired vectors must have equal length");
    SignTestResult r;
    for (std::size_t i = 0; i < correct_a.size(); ++i) {
        if (correct_a[i] == correct_b[i])
            ++r.ties;
        else if (correct_a[i])
            ++r.a_wins;
        else
            ++r.b_wins;
    }
    long long discordant = r.a_wins + r.b_wins;
    if (discordant == 0) {
        r.p = 1.0;
        r.no_discordant = true;
        return r;
    }
    r.p = binomial_test(r.a_wins, discordant, 0.5, sided);
    return r;
}

double t_test_independent(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2)
        throw Error("t_test_independent: each sample needs >= 2 values");
    auto mean_var = [](std::span<const double> s) {
        double mean = 0.0;
        for (double v : s) mean += v;
        mean /= static_cast<double>(s.size());
        double ss = 0.0;
        for (double v : s) ss += (v - mean) * (v - mean);
        return std::pair{mean, ss / static_cast<double>(s.size() - 1)};
    };
    auto [ma, va] = mean_var(a);
    auto [mb, vb] = mean_var(b);
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double sa = va / na, sb = vb / nb;
    if (sa + sb == 0.0) return ma == mb ? 1.0 : 0.0;
    double t = (ma - mb) / std::sqrt(sa + sb);
    double df = (sa + sb) * (sa + sb) /
                (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    return dists::t_two_tailed_p(t, df);
}

JudgeAnnotations JudgeAnnotations::load_csv(const std::filesystem::path& path) {
    CsvTable t = parse_csv(slurp_file(path), path.string());
    int id_col = t.column("item_id");
    int truth_col = t.column("true_label");
    if (id_col < 0 || truth_col < 0)
        throw Error(path.string() + ": need item_id and true_label columns");
    std::vector<int> judge_cols;
    for (std::size_t j = 0; j < t.header.size(); ++j)
        if (t.header[j].rfind("judge", 0) == 0) judge_cols.push_back(static_cast<int>(j));
    if (judge_cols.empty()) throw Error(path.string() + ": no judge columns");

    JudgeAnnotations ann;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        Item item;
        item.id = t.rows[r][static_cast<std::size_t>(id_col)];
        std::string where = path.string() + " row " + std::to_string(r + 2);
        item.truth = parse_label(t.rows[r][static_cast<std::size_t>(truth_col)], where);
        for (int jc : judge_cols)
            item.judge_labels.push_back(parse_label(t.rows[r][static_cast<std::size_t>(jc)], where));
        ann.items.push_back(std::move(item));
    }
    return ann;
}

std::size_t JudgeAnnotations::judge_count() const {
    return items.empty() ? 0 : items.front().judge_labels.size();
}

std::vector<Label> JudgeAnnotations::judge_column(std::size_t j) const {
    std::vector<Label> out;
    out.reserve(items.size());
    for (const Item& it : items) out.push_back(it.judge_labels.at(j));
    return out;
}

std::vector<Label> JudgeAnnotations::truth_column() const {
    std::vector<Label> out;
    out.reserve(items.size());
    for (const Item& it : items) out.push_back(it.truth);
    return out;
}

KappaResult fleiss_kappa(const JudgeAnnotations& ann) {
    if (ann.items.empty()) throw Error("fleiss_kappa: no items");
    std::size_t judges = ann.items.front().judge_labels.size();
    if (judges < 2) throw Error("fleiss_kappa: need >= 2 judges");
    for (const auto& it : ann.items)
        if (it.judge_labels.size() != judges)
            throw Error("fleiss_kappa: item " + it.id + " has a different judge count");

    double n_items = static_cast<double>(ann.items.size());
    double n_judges = static_cast<double>(judges);
    double p_cat[2] = {0.0, 0.0};
    double p_bar = 0.0;
    for (const auto& it : ann.items) {
        long long counts[2] = {0, 0};
        for (Label l : it.judge_labels) ++counts[static_cast<int>(l)];
        p_cat[0] += static_cast<double>(counts[0]);
        p_cat[1] += static_cast<double>(counts[1]);
        double agree = 0.0;
        for (int c = 0; c < 2; ++c)
            agree += static_cast<double>(counts[c]) * static_cast<double>(counts[c] - 1);
        p_bar += agree / (n_judges * (n_judges - 1.0));
    }
    p_bar /= n_items;
    double total = n_items * n_judges;
    double pe = 0.0;
    for (int c = 0; c < 2; ++c) {
        double frac = p_cat[c] / total;
        pe += frac * frac;
    }
    KappaResult r;
    if (pe >= 1.0) {
        r.degenerate = true;
        r.kappa = p_bar >= 1.0 ? 1.0 : 0.0;
        return r;
    }
    r.kappa = (p_bar - pe) / (1.0 - pe);
    return r;
}

KappaResult cohen_kappa(std::span<const Label> r1, std::span<const Label> r2) {
    if (r1.size() != r2.size()) throw Error("cohen_kappa: unequal lengths");
    if (r1.empty()) throw Error("cohen_kappa: empty input");
    double n = static_cast<double>(r1.size());
    double cont[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < r1.size(); ++i)
        cont[static_cast<int>(r1[i])][static_cast<int>(r2[i])] += 1.0;
    double po = (cont[0][0] + cont[1][1]) / n;
    double pe = 0.0;
    for (int c = 0; c < 2; ++c) {
        double m1 = (cont[c][0] + cont[c][1]) / n;
        double m2 = (cont[0][c] + cont[1][c]) / n;
        pe += m1 * m2;
    }
    KappaResult r;
    if (pe >= 1.0) {
        r.degenerate = true;
        r.kappa = po >= 1.0 ? 1.0 : 0.0;
        return r;
    }
    r.kappa = (po - pe) / (1.0 - pe);
    return r;
}

std::vector<Label> meta_judge(const std::vector<std::vector<Label>>& per_judge, MetaMode mode) {
    if (per_judge.empty()) throw Error("meta_judge: no judges");
    std::size_t n = per_judge.front().size();
    for (const auto& col : per_judge)
        if (col.size() != n) throw Error("meta_judge: judge vectors differ in length");
    if (mode == MetaMode::majority && per_judge.size() % 2 == 0)
        throw Error("meta_judge: majority mode requires an odd judge count");

    std::vector<Label> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t deceptive = 0;
        for (const auto& col : per_judge)
            if (col[i] == Label::deceptive) ++deceptive;
        bool flag = mode == MetaMode::majority ? deceptive * 2 > per_judge.size()
                                               : deceptive > 0;
        out.push_back(flag ? Label::deceptive : Label::truthful);
    }
    return out;
}

}  // namespace opspam
