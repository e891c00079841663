#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gapstat/corpus.hpp"
#include "gapstat/nglm.hpp"
#include "gapstat/scorer.hpp"

namespace gapstat {

struct GapConfig {
    double c = 3.0;               // regularization constant of the interpolation
    double tau_threshold = 0.9;   // lambda cutoff between the two regimes
    double m_const = 1e6;         // dominance constant, must be >= 1000
    double decision_threshold = 0.0;
};

void validate_gap_config(const GapConfig& cfg);

/// Weighted interpolation between the IDP score and a constant:
/// S = llpos - (1 - lambda) * llneg - lambda * C, with both log-likelihood
/// terms length-normalized and direction-averaged per the conventions.
double gap_score(const ConditionalLM& pos, const ConditionalLM& neg, double lambda,
                 const GapConfig& cfg, const SentencePair& pair, const ScoreConventions& conv);

/// 0 below the lambda threshold (trust the discriminative model), 1 otherwise.
int tau(double lambda, const GapConfig& cfg);

/// S* = M * (1 - tau) * (disc_p - 1/2) + tau * gap_S.
double gapx_score(double gap_s, double disc_p, double lambda, const GapConfig& cfg);

/// Per-pair prediction record. `s` is the governing generative score (IDP or
/// GAP; for OODP, the threshold margin); `s_star` is set for GAPX only.
struct PredictorOutput {
    std::string id;
    double s = 0.0;
    double lambda = 0.0;
    double pp = 0.0;
    std::optional<double> s_star;
    int predicted = 0;
    std::optional<std::vector<std::pair<Token, double>>> per_token;
};

std::string predictor_output_to_jsonl(const PredictorOutput& out);
PredictorOutput predictor_output_from_jsonl(const std::string& line);

enum class StyleHint { adversarial, standard, informal };

inline std::vector<double> default_c_candidates() { return {1, 2, 3, 4, 5}; }

/// No-data heuristic: adversarial -> 1, standard -> 3, informal -> 5.
double choose_c_by_hint(StyleHint hint);

/// Validation sweep: the candidate maximizing dev macro F1, ties broken by
/// the smallest value. `dev_macro_f1` evaluates the GAP predictor at a given C.
double choose_c_on_dev(const std::vector<double>& candidates,
                       const std::function<double(double)>& dev_macro_f1);

/// Dispatches to the sweep when an evaluator is given, else to the heuristic.
double choose_c(std::optional<StyleHint> hint, const std::vector<double>& candidates,
                const std::function<double(double)>& dev_macro_f1);

}  // namespace gapstat
