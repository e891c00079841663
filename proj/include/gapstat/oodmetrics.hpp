#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gapstat/disc.hpp"
#include "gapstat/oodw.hpp"

namespace gapstat {

/// g = 1 - max_j p_j; in [0, 0.5] for two classes, higher = more OOD.
double softmax_score(const DiscModel& m, const SentencePair& pair);

/// g = -logsumexp(logits), computed with the max-shift trick. Logits include
/// the bias (a constant feature folded into w under the appendix formula).
double energy_score(const DiscModel& m, const SentencePair& pair);

struct MahaParams {
    Eigen::VectorXd mu0;
    Eigen::VectorXd mu1;
    Eigen::MatrixXd sigma_pinv;
};

/// Moore-Penrose pseudo-inverse of a symmetric matrix by eigendecomposition;
/// eigenvalues below 1e-10 * lambda_max are zeroed.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& sym);

/// Class means of h plus pooled covariance over a labeled validation set.
MahaParams maha_fit(const DiscModel& m, const Dataset& val);

/// g = -min_j (h - mu_j)^T Sigma^+ (h - mu_j); always <= 0.
double maha_score(const MahaParams& p, const DiscModel& m, const SentencePair& pair);

/// g = -max_i cos(h, h_i) over validation representations.
double cosine_score(const DiscModel& m, const SentencePair& pair,
                    std::span<const Eigen::VectorXd> val_reps);

enum class OodMetric { perplexity, nll, softmax, energy, maha, cosine };

const char* ood_metric_name(OodMetric m);
OodMetric ood_metric_from_name(const std::string& name);

struct MetricModels {
    const ConditionalLM* dist = nullptr;
    const DiscModel* disc = nullptr;
};

/// A metric bound to its fitted state plus the Weibull calibrator over its
/// oriented values. MAHA/COSINE fit their reference state on the first half
/// of dev and calibrate the Weibull on the second half.
struct CalibratedMetric {
    OodMetric metric = OodMetric::perplexity;
    OodCalibrator calibrator;
    std::optional<MahaParams> maha;
    std::vector<Eigen::VectorXd> cosine_refs;
};

/// Value handed to the calibrator, oriented so that larger = more OOD:
/// perplexity, nll, softmax, energy, and cosine g as the appendix defines
/// them; Mahalanobis g negated (the appendix writes it with a leading minus).
double oriented_metric_value(const CalibratedMetric& cm, const MetricModels& models,
                             const SentencePair& pair);

CalibratedMetric metric_calibrator(OodMetric metric, const Dataset& dev,
                                   const MetricModels& models);

double metric_lambda(const CalibratedMetric& cm, const MetricModels& models,
                     const SentencePair& pair);

}  // namespace gapstat
