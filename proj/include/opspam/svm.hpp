#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "opspam/features.hpp"
#include "opspam/io.hpp"

namespace opspam {

struct SvmExample {
    SparseVector x;
    int y = 1;  // +1 or -1; project convention: truthful = +1, deceptive = -1
};

struct SvmDiagnostics {
    double primal_dual_objective = 0.0;  // dual objective at termination
    int epochs = 0;
    double pg_violation = 0.0;  // max |projected gradient| over the last epoch
    int support_vectors = 0;
    std::vector<double> objective_history;  // dual objective per epoch
    std::vector<double> alpha;              // final dual variables
};

struct LinearModel {
    std::vector<double> w;  // dense over the feature space (bias excluded)
    double b = 0.0;
    double C = 1.0;
    std::uint64_t space_hash = 0;
    SvmDiagnostics diag;

    std::string to_json() const;
    static LinearModel from_json(const std::string& text);
};

// Thrown when the epoch cap is hit with the violation still above 10*tol.
class SvmConvergenceError : public Error {
public:
    SvmConvergenceError(const std::string& what, SvmDiagnostics diag)
        : Error(what), diag(std::move(diag)) {}
    SvmDiagnostics diag;
};

// L1-loss soft-margin SVM via dual coordinate descent with a random
// permutation each epoch (deterministic given seed). The bias is an
// augmented constant feature of value 1, reported back as b. Terminates
// when the largest projected-gradient violation in an epoch drops below
// tol. dim pins the weight-vector length to the feature-space size; 0
// infers it from the examples.
LinearModel train_linear_svm(std::span<const SvmExample> examples, double C, double tol,
                             std::uint64_t seed, int max_epochs = 10000, std::size_t dim = 0);

struct Prediction {
    int label;  // sign(margin); 0 margin maps to +1
    double margin;
};

Prediction predict(const LinearModel& model, const SparseVector& x);

struct RankedWeight {
    std::string name;
    double weight;
};

struct TopWeights {
    std::vector<RankedWeight> positive;  // most positive first
    std::vector<RankedWeight> negative;  // most negative first
};

// Feature parts of the weight vectors, each unit-normalized then averaged
// elementwise (the bias is excluded from normalization and ranking).
std::vector<double> average_normalized_weights(std::span<const LinearModel> models);

TopWeights top_weights(std::span<const double> avg_w, const FeatureSpace& space, std::size_t k);
TopWeights top_weights(const LinearModel& model, const FeatureSpace& space, std::size_t k);

// Cross-fold aggregation when each fold has its own feature space: weights
// are unit-normalized per fold, then averaged by feature name (a feature
// absent from a fold contributes 0 there). Also returns each feature's
// block name for reporting.
struct NamedWeightReport {
    std::vector<RankedWeight> positive;
    std::vector<RankedWeight> negative;
    std::map<std::string, std::string> block_of;
};

NamedWeightReport top_weights_by_name(
    const std::vector<std::pair<const LinearModel*, const FeatureSpace*>>& folds, std::size_t k);

}  // namespace opspam
