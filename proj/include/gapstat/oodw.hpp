#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gapstat/nglm.hpp"

namespace gapstat {

/// Exponentiated-Weibull parameters: cdf(x) = (1 - exp(-((x-loc)/scale)^c))^a
/// for x > loc, 0 otherwise.
struct WeibullParams {
    double a = 1.0;
    double c = 1.0;
    double loc = 0.0;
    double scale = 1.0;
};

double weibull_cdf(const WeibullParams& p, double x);
double weibull_logpdf(const WeibullParams& p, double x);
double weibull_loglik(const WeibullParams& p, std::span<const double> samples);

struct WeibullFitOptions {
    int max_iterations = 2000;
    double rel_tolerance = 1e-10;
};

/// Maximum-likelihood fit. loc is pinned just below the sample minimum; the
/// remaining parameters are optimized by a derivative-free simplex search
/// over (log a, log c, log scale) from a = 1, c = 1.5, scale = std(samples).
/// Requires >= 30 finite samples with nonzero spread.
WeibullParams fit_weibull(std::span<const double> samples, WeibullFitOptions opts = {});

/// Eq. 5 perplexity over the flattened <s> s1 <sep> s2 </s> sequence:
/// exp of the mean per-transition cross entropy under the distribution model.
double perplexity(const ConditionalLM& dist, const SentencePair& pair);

/// Negative log-likelihood over the same transitions; NLL = n * log(PP).
double nll(const ConditionalLM& dist, const SentencePair& pair);

enum class SourceMetric { perplexity, neg_log_likelihood, external };

struct OodCalibrator {
    WeibullParams params;
    SourceMetric source_metric = SourceMetric::perplexity;
    std::string external_id;  // set when source_metric == external
    int fit_sample_count = 0;

    bool fitted() const { return fit_sample_count > 0; }
};

/// Fits the Weibull calibrator on held-back metric values (>= 30 required).
OodCalibrator fit_calibrator(std::span<const double> samples, SourceMetric metric,
                             const std::string& external_id = "");

/// lambda for an externally computed metric value.
double lambda_from_value(const OodCalibrator& cal, double value);

/// lambda for a pair, computing the calibrator's own metric (perplexity or
/// nll) under the distribution model.
double lambda_of(const OodCalibrator& cal, const ConditionalLM& dist, const SentencePair& pair);

void save_calibrator(const OodCalibrator& cal, const std::string& path);
OodCalibrator load_calibrator(const std::string& path);
std::string calibrator_to_json(const OodCalibrator& cal);
OodCalibrator calibrator_from_json(const std::string& text);

}  // namespace gapstat
