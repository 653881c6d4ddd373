#include "opspam/svm.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "opspam/io.hpp"
#include "opspam/kernels.hpp"
#include "opspam/rng.hpp"

namespace opspam {

LinearModel train_linear_svm(std::span<const SvmExample> examples, double C, double tol,
                             std::uint64_t seed, int max_epochs, std::size_t dim) {
    if (C <= 0.0) throw Error("svm: C must be positive");
    if (tol <= 0.0) throw Error("svm: tol must be positive");
    std::size_t l = examples.size();
    bool has_pos = false, has_neg = false;
    std::uint64_t space_hash = l > 0 ? examples[0].x.space_hash : 0;
    std::size_t dims = dim;
    for (const SvmExample& e : examples) {
        if (e.y == 1)
            has_pos = true;
        else if (e.y == -1)
            has_neg = true;
        else
            throw Error("svm: labels must be +1 or -1");
        if (e.x.space_hash != space_hash) throw Error("svm: examples span feature spaces");
        if (!e.x.idx.empty()) dims = std::max(dims, static_cast<std::size_t>(e.x.idx.back()) + 1);
    }
    if (!has_pos || !has_neg) throw Error("svm: need at least one example per class");

    const auto& k = kernels::active();
    const std::uint32_t bias_idx = static_cast<std::uint32_t>(dims);
    std::vector<double> w(dims + 1, 0.0);

    // Q_ii with the augmented bias feature
    std::vector<double> qd(l);
    for (std::size_t i = 0; i < l; ++i)
        qd[i] = k.l2_norm_sq(examples[i].x.val.data(), examples[i].x.val.size()) + 1.0;

    std::vector<double> alpha(l, 0.0);
    std::vector<std::size_t> index(l);
    for (std::size_t i = 0; i < l; ++i) index[i] = i;

    SplitMix64 rng(derive_seed(seed, "svm-permutation"));
    SvmDiagnostics diag;
    double violation = 0.0;

    auto dual_objective = [&] {
        double sum_alpha = 0.0;
        for (double a : alpha) sum_alpha += a;
        return sum_alpha - 0.5 * k.l2_norm_sq(w.data(), w.size());
    };

    int epoch = 0;
    for (; epoch < max_epochs; ++epoch) {
        fisher_yates_shuffle(index, rng);
        violation = 0.0;
        for (std::size_t s = 0; s < l; ++s) {
            std::size_t i = index[s];
            const SparseVector& xi = examples[i].x;
            double yi = examples[i].y;

            double g = k.sparse_dot(xi.idx.data(), xi.val.data(), xi.idx.size(), w.data()) +
                       w[bias_idx];
            g = g * yi - 1.0;

            double pg = g;
            if (alpha[i] <= 0.0)
                pg = std::min(g, 0.0);
            else if (alpha[i] >= C)
                pg = std::max(g, 0.0);
            violation = std::max(violation, std::fabs(pg));

            if (std::fabs(pg) > 1e-14) {
                double old = alpha[i];
                alpha[i] = std::min(std::max(old - g / qd[i], 0.0), C);
                double delta = (alpha[i] - old) * yi;
                if (delta != 0.0) {
                    k.sparse_axpy(delta, xi.idx.data(), xi.val.data(), xi.idx.size(), w.data());
                    w[bias_idx] += delta;
                }
            }
        }
        diag.objective_history.push_back(dual_objective());
        if (violation < tol) {
            ++epoch;
            break;
        }
    }

    diag.epochs = epoch;
    diag.pg_violation = violation;
    diag.primal_dual_objective = diag.objective_history.empty() ? 0.0
                                                                : diag.objective_history.back();
    diag.support_vectors = static_cast<int>(std::count_if(
        alpha.begin(), alpha.end(), [](double a) { return a > 0.0; }));
    diag.alpha = alpha;

    if (violation >= tol && violation > 10.0 * tol)
        throw SvmConvergenceError(
            "svm: no convergence after " + std::to_string(max_epochs) +
                " epochs (violation " + std::to_string(violation) + ", tol " + std::to_string(tol) + ")",
            diag);

    LinearModel model;
    model.b = w[bias_idx];
    w.pop_back();
    model.w = std::move(w);
    model.C = C;
    model.space_hash = space_hash;
    model.diag = std::move(diag);
    return model;
}

Prediction predict(const LinearModel& model, const SparseVector& x) {
    if (x.space_hash != model.space_hash) throw Error("svm: vector is not in the model's space");
    double margin = model.b;
    const auto& k = kernels::active();
    // features beyond the training dimensionality have zero weight
    std::size_t cut = x.idx.size();
    while (cut > 0 && x.idx[cut - 1] >= model.w.size()) --cut;
    margin += k.sparse_dot(x.idx.data(), x.val.data(), cut, model.w.data());
    return {margin >= 0.0 ? 1 : -1, margin};
}

std::vector<double> average_normalized_weights(std::span<const LinearModel> models) {
    if (models.empty()) throw Error("top_weights: no models");
    std::size_t dims = 0;
    for (const LinearModel& m : models) dims = std::max(dims, m.w.size());
    std::vector<double> avg(dims, 0.0);
    const auto& k = kernels::active();
    for (const LinearModel& m : models) {
        double norm = std::sqrt(k.l2_norm_sq(m.w.data(), m.w.size()));
        if (norm <= 0.0) continue;
        k.axpy(1.0 / norm, m.w.data(), avg.data(), m.w.size());
    }
    k.scale(avg.data(), avg.size(), 1.0 / static_cast<double>(models.size()));
    return avg;
}

TopWeights top_weights(std::span<const double> avg_w, const FeatureSpace& space, std::size_t k) {
    std::vector<std::uint32_t> order(avg_w.size());
    for (std::uint32_t i = 0; i < avg_w.size(); ++i) order[i] = i;
    k = std::min(k, avg_w.size());

    TopWeights out;
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (avg_w[a] != avg_w[b]) return avg_w[a] > avg_w[b];
        return a < b;
    });
    for (std::size_t i = 0; i < k && avg_w[order[i]] > 0.0; ++i)
        out.positive.push_back({space.name(order[i]), avg_w[order[i]]});
    for (std::size_t i = 0; i < k; ++i) {
        std::uint32_t id = order[order.size() - 1 - i];
        if (avg_w[id] >= 0.0) break;
        out.negative.push_back({space.name(id), avg_w[id]});
    }
    return out;
}

TopWeights top_weights(const LinearModel& model, const FeatureSpace& space, std::size_t k) {
    std::vector<LinearModel> one;
    one.push_back(model);
    std::vector<double> avg = average_normalized_weights(one);
    return top_weights(avg, space, k);
}

NamedWeightReport top_weights_by_name(
    const std::vector<std::pair<const LinearModel*, const FeatureSpace*>>& folds, std::size_t k) {
    if (folds.empty()) throw Error("top_weights: no models");
    NamedWeightReport report;
    std::map<std::string, double> sums;
    const auto& kn = kernels::active();
    for (const auto& [model, space] : folds) {
        if (model->w.size() != space->size())
            throw Error("top_weights: model dimension does not match its space");
        double norm = std::sqrt(kn.l2_norm_sq(model->w.data(), model->w.size()));
        if (norm <= 0.0) continue;
        for (std::uint32_t i = 0; i < model->w.size(); ++i) {
            if (model->w[i] == 0.0) continue;
            sums[space->name(i)] += model->w[i] / norm;
            for (const FeatureSpace::Block& b : space->blocks())
                if (i >= b.begin && i < b.end) report.block_of[space->name(i)] = b.name;
        }
    }
    std::vector<std::pair<std::string, double>> avg(sums.begin(), sums.end());
    for (auto& [name, w] : avg) w /= static_cast<double>(folds.size());
    std::sort(avg.begin(), avg.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    for (std::size_t i = 0; i < avg.size() && i < k; ++i) {
        if (avg[i].second <= 0.0) break;
        report.positive.push_back({avg[i].first, avg[i].second});
    }
    for (std::size_t i = 0; i < avg.size() && report.negative.size() < k; ++i) {
        const auto& entry = avg[avg.size() - 1 - i];
        if (entry.second >= 0.0) break;
        report.negative.push_back({entry.first, entry.second});
    }
    return report;
}

std::string LinearModel::to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["space_hash"] = hex64(space_hash);
    j["C"] = C;
    j["b"] = b;
    nlohmann::json sparse = nlohmann::json::array();
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] != 0.0) {
            sparse.push_back(nlohmann::json::array({i, w[i]}));
        }
    }
    j["dim"] = w.size();
    j["w"] = std::move(sparse);
    j["diagnostics"] = {{"dual_objective", diag.primal_dual_objective},
                        {"epochs", diag.epochs},
                        {"pg_violation", diag.pg_violation},
                        {"support_vectors", diag.support_vectors}};
    return j.dump();
}

LinearModel LinearModel::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != 1) throw Error("svm: unsupported model version");
    LinearModel m;
    std::string hash = j.at("space_hash").get<std::string>();
    m.space_hash = std::stoull(hash, nullptr, 16);
    m.C = j.at("C").get<double>();
    m.b = j.at("b").get<double>();
    m.w.assign(j.at("dim").get<std::size_t>(), 0.0);
    for (const auto& entry : j.at("w"))
        m.w.at(entry.at(0).get<std::size_t>()) = entry.at(1).get<double>();
    const auto& d = j.at("diagnostics");
    m.diag.primal_dual_objective = d.at("dual_objective").get<double>();
    m.diag.epochs = d.at("epochs").get<int>();
    m.diag.pg_violation = d.at("pg_violation").get<double>();
    m.diag.support_vectors = d.at("support_vectors").get<int>();
    return m;
}

}  // namespace opspam
