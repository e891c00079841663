#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "gapstat/nglm.hpp"

namespace gapstat {

/// Scoring conventions: length-normalize cross entropies by |target| + 1
/// (counting the </s> transition) and average the two generation directions.
struct ScoreConventions {
    bool length_normalize = true;
    bool symmetrize = true;
    double oodp_threshold = 3.0;  // per-token cross entropy
};

/// Direction-averaged (per conventions) log-likelihood of the pair under one
/// model. The building block shared by the IDP, OODP, and GAP scores.
double avg_loglik(const ConditionalLM& lm, const SentencePair& pair,
                  const ScoreConventions& conv);

/// Confidence score S: positive-model log-likelihood minus negative-model
/// log-likelihood. S >= 0 predicts paraphrase.
double idp_score(const ConditionalLM& pos, const ConditionalLM& neg, const SentencePair& pair,
                 const ScoreConventions& conv);

/// Positive-model-only cross entropy; lower is more paraphrase-like.
/// Predicted label is 1 iff the score is below conv.oodp_threshold.
double oodp_score(const ConditionalLM& pos, const SentencePair& pair,
                  const ScoreConventions& conv);

enum class AttributionMode { oodp, idp, gap };

struct AttributionOptions {
    AttributionMode mode = AttributionMode::oodp;
    double lambda = 0.0;  // gap mode
    double c = 0.0;       // gap mode
};

/// Per-word contributions for the s1 -> s2 direction, sign-flipped so that
/// larger values mean stronger non-paraphrase evidence. The final entry
/// covers the </s> transition. Sums reconstruct the corresponding
/// single-direction, unnormalized pair score (negated for idp/gap, whose
/// pair-level convention is paraphrase-positive).
std::vector<std::pair<Token, double>> per_word_attribution(const ConditionalLM& pos,
                                                           const ConditionalLM* neg,
                                                           const SentencePair& pair,
                                                           const AttributionOptions& opts);

}  // namespace gapstat
