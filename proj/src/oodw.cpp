#include "gapstat/oodw.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "gapstat/errors.hpp"

namespace gapstat {

using nlohmann::json;

namespace {

// log(1 - exp(-u)) for u > 0, stable across both regimes.
double log1mexp(double u) {
    if (u <= 0) return -std::numeric_limits<double>::infinity();
    if (u < 0.6931471805599453)  // ln 2
        return std::log(-std::expm1(-u));
    return std::log1p(-std::exp(-u));
}

double mean(std::span<const double> xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) {
    double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

// Nelder-Mead on the negative log-likelihood over (log a, log c, log scale).
struct Simplex {
    using Point = std::array<double, 3>;
    std::vector<Point> x;
    std::vector<double> f;
};

}  // namespace

double weibull_cdf(const WeibullParams& p, double x) {
    if (x <= p.loc) return 0.0;
    double z = (x - p.loc) / p.scale;
    double u = std::pow(z, p.c);
    // (1 - exp(-u))^a via exp(a * log1mexp(u)) keeps the tails accurate.
    return std::exp(p.a * log1mexp(u));
}

double weibull_logpdf(const WeibullParams& p, double x) {
    if (x <= p.loc) return -std::numeric_limits<double>::infinity();
    double z = (x - p.loc) / p.scale;
    double log_z = std::log(z);
    double u = std::exp(p.c * log_z);  // z^c
    return std::log(p.a) + std::log(p.c) - std::log(p.scale) + (p.c - 1.0) * log_z - u +
           (p.a - 1.0) * log1mexp(u);
}

double weibull_loglik(const WeibullParams& p, std::span<const double> samples) {
    double acc = 0.0;
    for (double x : samples) acc += weibull_logpdf(p, x);
    return acc;
}

WeibullParams fit_weibull(std::span<const double> samples, WeibullFitOptions opts) {
    require(samples.size() >= 30, ErrorKind::fit,
            "fit_weibull: need at least 30 samples, got " + std::to_string(samples.size()));
    for (double x : samples)
        require(std::isfinite(x), ErrorKind::fit, "fit_weibull: non-finite sample");

    auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
    double spread = *mx_it - *mn_it;
    require(spread > 0, ErrorKind::fit, "fit_weibull: degenerate samples (zero spread)");

    // Joint MLE of loc is ill-posed in Weibull families; pin it just below
    // the sample minimum so every sample stays in the support.
    double loc = *mn_it - 1e-6 * spread;
    double sd = stddev(samples);

    auto params_at = [&](const Simplex::Point& q) {
        return WeibullParams{std::exp(q[0]), std::exp(q[1]), loc, std::exp(q[2])};
    };
    auto objective = [&](const Simplex::Point& q) {
        return -weibull_loglik(params_at(q), samples);
    };

    Simplex s;
    Simplex::Point x0{std::log(1.0), std::log(1.5), std::log(sd)};
    s.x.push_back(x0);
    for (int i = 0; i < 3; ++i) {
        Simplex::Point xi = x0;
        xi[i] += 0.25;
        s.x.push_back(xi);
    }
    for (const auto& p : s.x) s.f.push_back(objective(p));

    auto order = [&] {
        std::array<int, 4> idx{0, 1, 2, 3};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return s.f[a] < s.f[b]; });
        Simplex t;
        for (int i : idx) {
            t.x.push_back(s.x[i]);
            t.f.push_back(s.f[i]);
        }
        s = std::move(t);
    };

    order();
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        if (s.f[3] - s.f[0] <= opts.rel_tolerance * (std::abs(s.f[0]) + 1e-12)) break;

        Simplex::Point centroid{0, 0, 0};
        for (int i = 0; i < 3; ++i)
            for (int d = 0; d < 3; ++d) centroid[d] += s.x[i][d] / 3.0;

        auto blend = [&](double coef) {
            Simplex::Point p;
            for (int d = 0; d < 3; ++d) p[d] = centroid[d] + coef * (centroid[d] - s.x[3][d]);
            return p;
        };

        Simplex::Point refl = blend(1.0);
        double f_refl = objective(refl);
        if (f_refl < s.f[0]) {
            Simplex::Point exp_pt = blend(2.0);
            double f_exp = objective(exp_pt);
            if (f_exp < f_refl) {
                s.x[3] = exp_pt;
                s.f[3] = f_exp;
            } else {
                s.x[3] = refl;
                s.f[3] = f_refl;
            }
        } else if (f_refl < s.f[2]) {
            s.x[3] = refl;
            s.f[3] = f_refl;
        } else {
            Simplex::Point contr = blend(f_refl < s.f[3] ? 0.5 : -0.5);
            double f_contr = objective(contr);
            if (f_contr < std::min(f_refl, s.f[3])) {
                s.x[3] = contr;
                s.f[3] = f_contr;
            } else {
                for (int i = 1; i < 4; ++i) {
                    for (int d = 0; d < 3; ++d) s.x[i][d] = s.x[0][d] + 0.5 * (s.x[i][d] - s.x[0][d]);
                    s.f[i] = objective(s.x[i]);
                }
            }
        }
        order();
    }

    // The optimizer never accepts a point worse than the incumbent, so the
    // fitted likelihood is at least the initialization's.
    return params_at(s.x[0]);
}

double perplexity(const ConditionalLM& dist, const SentencePair& pair) {
    require(dist.role == LmRole::distribution, ErrorKind::config,
            "perplexity: model must have role distribution");
    std::vector<double> lps = flattened_logprobs(dist, pair);
    double ce = 0.0;
    for (double lp : lps) ce -= lp;
    return std::exp(ce / static_cast<double>(lps.size()));
}

double nll(const ConditionalLM& dist, const SentencePair& pair) {
    require(dist.role == LmRole::distribution, ErrorKind::config,
            "nll: model must have role distribution");
    std::vector<double> lps = flattened_logprobs(dist, pair);
    double ce = 0.0;
    for (double lp : lps) ce -= lp;
    return ce;
}

OodCalibrator fit_calibrator(std::span<const double> samples, SourceMetric metric,
                             const std::string& external_id) {
    OodCalibrator cal;
    cal.params = fit_weibull(samples);
    cal.source_metric = metric;
    cal.external_id = external_id;
    cal.fit_sample_count = static_cast<int>(samples.size());
    return cal;
}

double lambda_from_value(const OodCalibrator& cal, double value) {
    require(cal.fitted(), ErrorKind::state, "calibrator is not fitted");
    return weibull_cdf(cal.params, value);
}

double lambda_of(const OodCalibrator& cal, const ConditionalLM& dist, const SentencePair& pair) {
    require(cal.fitted(), ErrorKind::state, "calibrator is not fitted");
    require(cal.source_metric != SourceMetric::external, ErrorKind::config,
            "lambda_of: external-metric calibrators need the metric value (see lambda_from_value)");
    double value = cal.source_metric == SourceMetric::perplexity ? perplexity(dist, pair)
                                                                 : nll(dist, pair);
    return weibull_cdf(cal.params, value);
}

namespace {
constexpr int kCalVersion = 1;

std::string metric_name(SourceMetric m) {
    switch (m) {
        case SourceMetric::perplexity: return "perplexity";
        case SourceMetric::neg_log_likelihood: return "neg_log_likelihood";
        case SourceMetric::external: return "external";
    }
    return "?";
}
}  // namespace

std::string calibrator_to_json(const OodCalibrator& cal) {
    json j;
    j["version"] = kCalVersion;
    j["source_metric"] = metric_name(cal.source_metric);
    if (cal.source_metric == SourceMetric::external) j["external_id"] = cal.external_id;
    j["a"] = cal.params.a;
    j["c"] = cal.params.c;
    j["loc"] = cal.params.loc;
    j["scale"] = cal.params.scale;
    j["fit_sample_count"] = cal.fit_sample_count;
    return j.dump();
}

OodCalibrator calibrator_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("invalid calibrator json: ") + e.what());
    }
    require(j.value("version", -1) == kCalVersion, ErrorKind::version,
            "unsupported calibrator version");
    OodCalibrator cal;
    std::string m = j.at("source_metric").get<std::string>();
    if (m == "perplexity")
        cal.source_metric = SourceMetric::perplexity;
    else if (m == "neg_log_likelihood")
        cal.source_metric = SourceMetric::neg_log_likelihood;
    else if (m == "external") {
        cal.source_metric = SourceMetric::external;
        cal.external_id = j.value("external_id", "");
    } else
        fail(ErrorKind::parse, "unknown source metric: " + m);
    cal.params.a = j.at("a").get<double>();
    cal.params.c = j.at("c").get<double>();
    cal.params.loc = j.at("loc").get<double>();
    cal.params.scale = j.at("scale").get<double>();
    cal.fit_sample_count = j.at("fit_sample_count").get<int>();
    return cal;
}

void save_calibrator(const OodCalibrator& cal, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot write " + path);
    out << calibrator_to_json(cal) << "\n";
    require(out.good(), ErrorKind::io, "write failed for " + path);
}

OodCalibrator load_calibrator(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return calibrator_from_json(ss.str());
}

}  // namespace gapstat
