#include "gapstat/oodmetrics.hpp"

#include <algorithm>
#include <cmath>

#include "gapstat/errors.hpp"

namespace gapstat {

double softmax_score(const DiscModel& m, const SentencePair& pair) {
    double p1 = predict_proba(m, pair);
    return 1.0 - std::max(p1, 1.0 - p1);
}

double energy_score(const DiscModel& m, const SentencePair& pair) {
    Eigen::Vector2d z = logits(m, pair);
    double mx = z.maxCoeff();
    return -(mx + std::log(std::exp(z[0] - mx) + std::exp(z[1] - mx)));
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    require(es.info() == Eigen::Success, ErrorKind::fit, "eigendecomposition failed");
    const Eigen::VectorXd& evals = es.eigenvalues();
    double lambda_max = evals.cwiseAbs().maxCoeff();
    double cutoff = 1e-10 * lambda_max;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(evals.size());
    for (Eigen::Index i = 0; i < evals.size(); ++i)
        if (std::abs(evals[i]) > cutoff && evals[i] > 0) inv[i] = 1.0 / evals[i];
    Eigen::MatrixXd pinv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
    // Symmetrize away round-off so the quadratic form stays exact.
    return 0.5 * (pinv + pinv.transpose());
}

MahaParams maha_fit(const DiscModel& m, const Dataset& val) {
    std::vector<Eigen::VectorXd> h0, h1;
    for (const SentencePair& p : val.pairs) {
        require(p.label.has_value(), ErrorKind::fit, "maha_fit: unlabeled pair " + p.id);
        Eigen::VectorXd h = Eigen::VectorXd(representation(m, p));
        (*p.label == 1 ? h1 : h0).push_back(std::move(h));
    }
    require(h0.size() >= 2 && h1.size() >= 2, ErrorKind::fit,
            "maha_fit: need at least 2 samples per class");

    auto mean_of = [&](const std::vector<Eigen::VectorXd>& hs) {
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(m.fmap.dim);
        for (const auto& h : hs) mu += h;
        return Eigen::VectorXd(mu / static_cast<double>(hs.size()));
    };

    MahaParams params;
    params.mu0 = mean_of(h0);
    params.mu1 = mean_of(h1);

    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(m.fmap.dim, m.fmap.dim);
    for (const auto& h : h0) {
        Eigen::VectorXd d = h - params.mu0;
        sigma.noalias() += d * d.transpose();
    }
    for (const auto& h : h1) {
        Eigen::VectorXd d = h - params.mu1;
        sigma.noalias() += d * d.transpose();
    }
    sigma /= static_cast<double>(h0.size() + h1.size());
    params.sigma_pinv = pseudo_inverse(sigma);
    return params;
}

double maha_score(const MahaParams& p, const DiscModel& m, const SentencePair& pair) {
    Eigen::VectorXd h = Eigen::VectorXd(representation(m, pair));
    require(h.size() == p.mu0.size(), ErrorKind::score,
            "maha_score: representation dimension mismatch");
    Eigen::VectorXd d0 = h - p.mu0;
    Eigen::VectorXd d1 = h - p.mu1;
    double q0 = d0.dot(p.sigma_pinv * d0);
    double q1 = d1.dot(p.sigma_pinv * d1);
    return -std::min(q0, q1);
}

double cosine_score(const DiscModel& m, const SentencePair& pair,
                    std::span<const Eigen::VectorXd> val_reps) {
    require(!val_reps.empty(), ErrorKind::score, "cosine_score: empty validation set");
    Eigen::VectorXd h = Eigen::VectorXd(representation(m, pair));
    double hn = h.norm();
    require(hn > 0, ErrorKind::score, "cosine_score: zero representation");
    double best = -1.0;
    for (const Eigen::VectorXd& r : val_reps) {
        double rn = r.norm();
        require(rn > 0, ErrorKind::score, "cosine_score: zero validation vector");
        best = std::max(best, h.dot(r) / (hn * rn));
    }
    return -best;
}

const char* ood_metric_name(OodMetric m) {
    switch (m) {
        case OodMetric::perplexity: return "perplexity";
        case OodMetric::nll: return "nll";
        case OodMetric::softmax: return "softmax";
        case OodMetric::energy: return "energy";
        case OodMetric::maha: return "maha";
        case OodMetric::cosine: return "cosine";
    }
    return "?";
}

OodMetric ood_metric_from_name(const std::string& name) {
    if (name == "perplexity") return OodMetric::perplexity;
    if (name == "nll") return OodMetric::nll;
    if (name == "softmax") return OodMetric::softmax;
    if (name == "energy") return OodMetric::energy;
    if (name == "maha") return OodMetric::maha;
    if (name == "cosine") return OodMetric::cosine;
    fail(ErrorKind::config, "unknown ood metric: " + name);
}

double oriented_metric_value(const CalibratedMetric& cm, const MetricModels& models,
                             const SentencePair& pair) {
    switch (cm.metric) {
        case OodMetric::perplexity:
            require(models.dist, ErrorKind::config, "perplexity metric needs the distribution model");
            return perplexity(*models.dist, pair);
        case OodMetric::nll:
            require(models.dist, ErrorKind::config, "nll metric needs the distribution model");
            return nll(*models.dist, pair);
        case OodMetric::softmax:
            require(models.disc, ErrorKind::config, "softmax metric needs the classifier");
            return softmax_score(*models.disc, pair);
        case OodMetric::energy:
            require(models.disc, ErrorKind::config, "energy metric needs the classifier");
            return energy_score(*models.disc, pair);
        case OodMetric::maha:
            require(models.disc && cm.maha, ErrorKind::state, "maha metric is not fitted");
            return -maha_score(*cm.maha, *models.disc, pair);
        case OodMetric::cosine:
            require(models.disc && !cm.cosine_refs.empty(), ErrorKind::state,
                    "cosine metric is not fitted");
            return cosine_score(*models.disc, pair, cm.cosine_refs);
    }
    fail(ErrorKind::config, "unknown ood metric");
}

CalibratedMetric metric_calibrator(OodMetric metric, const Dataset& dev,
                                   const MetricModels& models) {
    require(dev.pairs.size() >= 30, ErrorKind::fit,
            "metric_calibrator: need at least 30 dev pairs");
    CalibratedMetric cm;
    cm.metric = metric;

    // MAHA and COSINE need in-distribution reference data: first half of dev
    // for fitting, second half for the Weibull calibration.
    std::span<const SentencePair> cal_span(dev.pairs);
    if (metric == OodMetric::maha || metric == OodMetric::cosine) {
        require(models.disc, ErrorKind::config, "metric needs the classifier");
        std::size_t half = dev.pairs.size() / 2;
        if (metric == OodMetric::maha) {
            Dataset fit_half;
            fit_half.name = dev.name + ".maha_fit";
            fit_half.pairs.assign(dev.pairs.begin(),
                                  dev.pairs.begin() + static_cast<std::ptrdiff_t>(half));
            cm.maha = maha_fit(*models.disc, fit_half);
        } else {
            for (std::size_t i = 0; i < half; ++i)
                cm.cosine_refs.emplace_back(
                    Eigen::VectorXd(representation(*models.disc, dev.pairs[i])));
        }
        cal_span = cal_span.subspan(half);
    }

    std::vector<double> values;
    values.reserve(cal_span.size());
    for (const SentencePair& p : cal_span) values.push_back(oriented_metric_value(cm, models, p));

    SourceMetric src = metric == OodMetric::perplexity ? SourceMetric::perplexity
                       : metric == OodMetric::nll      ? SourceMetric::neg_log_likelihood
                                                       : SourceMetric::external;
    cm.calibrator = fit_calibrator(values, src, src == SourceMetric::external
                                                    ? ood_metric_name(metric)
                                                    : std::string());
    return cm;
}

double metric_lambda(const CalibratedMetric& cm, const MetricModels& models,
                     const SentencePair& pair) {
    return lambda_from_value(cm.calibrator, oriented_metric_value(cm, models, pair));
}

}  // namespace gapstat
