#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gapstat/corpus.hpp"
#include "gapstat/disc.hpp"
#include "gapstat/ensemble.hpp"
#include "gapstat/eval.hpp"
#include "gapstat/nglm.hpp"
#include "gapstat/oodw.hpp"
#include "gapstat/scorer.hpp"

namespace gapstat {

enum class Predictor { idp, oodp, gap, gapx };

const char* predictor_name(Predictor p);
Predictor predictor_from_name(const std::string& name);

struct TrainOptions {
    int order = 3;
    Smoothing smoothing = Smoothing::add_k(0.1);
    SourceMetric lambda_metric = SourceMetric::perplexity;
    DiscHyper disc;
    std::uint64_t seed = 0;
};

struct TrainSummary {
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    bool imbalance_warning = false;  // class sizes differ by more than 5%
};

/// The five artifacts of a training run. Loaders fill only what a predictor
/// needs, so e.g. OODP runs without the negative model file.
struct Artifacts {
    std::optional<ConditionalLM> pos;
    std::optional<ConditionalLM> neg;
    std::optional<ConditionalLM> dist;
    std::optional<OodCalibrator> cal;
    std::optional<DiscModel> disc;
};

/// Trains positive/negative/distribution models and the classifier on the
/// train split, and fits the lambda calibrator on the dev split. The Eq. 2
/// class-prior constant is fixed at 0; a >5% class imbalance only warns.
Artifacts train_artifacts(const Dataset& train, const Dataset& dev, const TrainOptions& opts,
                          TrainSummary* summary = nullptr);

void save_artifacts(const Artifacts& a, const std::string& dir, const TrainOptions& opts,
                    const std::string& train_name);
Artifacts load_artifacts(const std::string& dir, Predictor needed);

struct PredictOptions {
    Predictor predictor = Predictor::gap;
    ScoreConventions conv;
    GapConfig gap;
    bool attributions = false;
    // When set, replaces the calibrator-derived lambda (used by the
    // OOD-metric ablation); PP is still reported from the distribution model.
    std::function<double(const SentencePair&)> lambda_override;
};

std::vector<PredictorOutput> predict_pairs(const Artifacts& a, const Dataset& pairs,
                                           const PredictOptions& opts);

/// Evaluator for the C sweep: macro F1 of the GAP predictor on dev at a
/// candidate C, with everything else held fixed.
std::function<double(double)> make_c_evaluator(const Artifacts& a, const Dataset& dev,
                                               const ScoreConventions& conv,
                                               const GapConfig& base);

}  // namespace gapstat
