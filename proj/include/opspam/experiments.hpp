#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "opspam/corpus.hpp"
#include "opspam/features.hpp"
#include "opspam/lm.hpp"
#include "opspam/stats.hpp"
#include "opspam/svm.hpp"

namespace opspam {

enum class Approach {
    pos_svm,
    lexicon_svm,
    unigrams_svm,
    bigrams_plus_svm,
    trigrams_plus_svm,
    lexicon_bigrams_plus_svm,
    unigrams_nb,
    bigrams_plus_nb,
    trigrams_plus_nb,
};

const char* approach_name(Approach a);
Approach parse_approach(std::string_view name);
bool approach_is_svm(Approach a);
// n-gram order used by the approach (0 for POS/LEXICON)
int approach_order(Approach a);

struct ApproachConfig {
    Approach approach = Approach::unigrams_svm;
    std::vector<double> c_grid = {0.01, 0.1, 1.0, 10.0, 100.0};
    std::uint64_t seed = 1;
    double svm_tol = 1e-4;
    int svm_max_epochs = 10000;
    std::uint64_t ngram_min_count = 1;

    std::uint64_t hash() const;
};

// Side inputs some approaches need; tagged runs parallel to corpus.reviews.
struct ExperimentInputs {
    const Lexicon* lexicon = nullptr;
    const std::vector<TaggedSeq>* tagged = nullptr;
};

struct ItemPrediction {
    std::string id;
    Label truth;
    Label predicted;
    double margin;
};

struct FoldResult {
    int fold = 0;
    double selected_c = 0.0;  // NaN for LM approaches
    ConfusionCounts counts;
    std::vector<ItemPrediction> predictions;
    // review ids touched while building vocabularies/feature spaces
    std::vector<std::string> touched_ids;
    std::uint64_t touched_hash = 0;
    std::optional<LinearModel> model;
    std::optional<FeatureSpace> space;  // the SVM model's space (train folds only)
};

struct EvalReport {
    std::string approach;
    int k = 0;
    std::vector<FoldResult> folds;
    ConfusionCounts aggregate;
    MicroReport metrics;
    std::uint64_t config_hash = 0;
    std::uint64_t corpus_hash = 0;
    std::uint64_t seed = 0;

    std::string to_json() const;
    std::string render_table() const;
    std::string predictions_csv() const;
    std::vector<ItemPrediction> all_predictions() const;
};

// Outer loop of the evaluation protocol: per test fold, hyperparameters are
// chosen by leave-one-fold-out CV on the training folds, the model is
// retrained on all training folds and scored on the held-out fold.
// Vocabularies and feature spaces are built from training folds only.
EvalReport nested_cv(const Corpus& corpus, const FoldPlan& plan, const ApproachConfig& config,
                     const ExperimentInputs& inputs = {});

// Grid selection by mean inner-fold accuracy; ties go to the smallest C.
// Returns NaN (no parameter) for LM approaches.
double inner_select(const Corpus& corpus, const FoldPlan& plan, std::span<const int> train_folds,
                    const ApproachConfig& config, const ExperimentInputs& inputs = {});

EvalReport aggregate_report(const std::string& approach, int k, std::vector<FoldResult> folds);

// Paired one-tailed sign test that approach A beats approach B on the same
// items.
SignTestResult compare_approaches(std::span<const ItemPrediction> preds_a,
                                  std::span<const ItemPrediction> preds_b);

// "key = value" lines (# comments) or a JSON object.
struct ExperimentFileConfig {
    std::string approach;
    std::string corpus_path;
    std::string lexicon_path;  // optional
    std::string tagged_path;   // optional
    std::string out_dir;
    std::uint64_t seed = 1;
    int folds = 5;
    std::vector<double> c_grid = {0.01, 0.1, 1.0, 10.0, 100.0};
};

ExperimentFileConfig parse_experiment_config(const std::string& text,
                                             std::string_view source_name);

}  // namespace opspam
