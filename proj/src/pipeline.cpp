#include "gapstat/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gapstat/errors.hpp"
#include "gapstat/log.hpp"

namespace gapstat {

namespace fs = std::filesystem;
using nlohmann::json;

const char* predictor_name(Predictor p) {
    switch (p) {
        case Predictor::idp: return "idp";
        case Predictor::oodp: return "oodp";
        case Predictor::gap: return "gap";
        case Predictor::gapx: return "gapx";
    }
    return "?";
}

Predictor predictor_from_name(const std::string& name) {
    if (name == "idp") return Predictor::idp;
    if (name == "oodp") return Predictor::oodp;
    if (name == "gap") return Predictor::gap;
    if (name == "gapx") return Predictor::gapx;
    fail(ErrorKind::config, "unknown predictor: " + name);
}

Artifacts train_artifacts(const Dataset& train, const Dataset& dev, const TrainOptions& opts,
                          TrainSummary* summary) {
    Artifacts a;
    a.pos = train_conditional(train.pairs, LmRole::positive, opts.order, opts.smoothing);
    a.neg = train_conditional(train.pairs, LmRole::negative, opts.order, opts.smoothing);
    a.dist = train_conditional(train.pairs, LmRole::distribution, opts.order, opts.smoothing);

    TrainSummary s;
    for (const SentencePair& p : train.pairs) {
        if (p.label && *p.label == 1) ++s.n_pos;
        if (p.label && *p.label == 0) ++s.n_neg;
    }
    auto mx = static_cast<double>(std::max(s.n_pos, s.n_neg));
    auto mn = static_cast<double>(std::min(s.n_pos, s.n_neg));
    s.imbalance_warning = mx > 0 && (mx - mn) / mx > 0.05;
    if (s.imbalance_warning)
        log::warn("positive/negative training sets differ by more than 5%; the class-prior "
                  "constant is still treated as 0");
    if (summary) *summary = s;

    require(dev.pairs.size() >= 30, ErrorKind::fit,
            "calibrator needs at least 30 dev pairs, got " + std::to_string(dev.pairs.size()));
    std::vector<double> values;
    values.reserve(dev.pairs.size());
    for (const SentencePair& p : dev.pairs)
        values.push_back(opts.lambda_metric == SourceMetric::perplexity ? perplexity(*a.dist, p)
                                                                        : nll(*a.dist, p));
    a.cal = fit_calibrator(values, opts.lambda_metric);

    DiscHyper hyper = opts.disc;
    hyper.seed = opts.seed;
    a.disc = train_disc(train, hyper);
    return a;
}

namespace {

constexpr int kManifestVersion = 1;

struct ArtifactFiles {
    const char* positive = "positive.lm.json";
    const char* negative = "negative.lm.json";
    const char* distribution = "distribution.lm.json";
    const char* calibrator = "calibrator.json";
    const char* disc = "disc.json";
};

}  // namespace

void save_artifacts(const Artifacts& a, const std::string& dir, const TrainOptions& opts,
                    const std::string& train_name) {
    require(a.pos && a.neg && a.dist && a.cal && a.disc, ErrorKind::state,
            "save_artifacts: incomplete artifact bundle");
    fs::create_directories(dir);
    ArtifactFiles files;
    save_lm(*a.pos, dir + "/" + files.positive);
    save_lm(*a.neg, dir + "/" + files.negative);
    save_lm(*a.dist, dir + "/" + files.distribution);
    save_calibrator(*a.cal, dir + "/" + files.calibrator);
    save_disc(*a.disc, dir + "/" + files.disc);

    json manifest;
    manifest["version"] = kManifestVersion;
    manifest["artifacts"] = {{"positive", files.positive},
                             {"negative", files.negative},
                             {"distribution", files.distribution},
                             {"calibrator", files.calibrator},
                             {"disc", files.disc}};
    manifest["train"] = {{"order", opts.order},
                         {"smoothing", opts.smoothing.kind == Smoothing::Kind::add_k
                                           ? "add_k"
                                           : "interpolated_wb"},
                         {"k", opts.smoothing.k},
                         {"lambda_metric", opts.lambda_metric == SourceMetric::perplexity
                                               ? "perplexity"
                                               : "neg_log_likelihood"},
                         {"seed", opts.seed},
                         {"train_file", train_name}};
    std::ofstream out(dir + "/manifest.json");
    require(out.good(), ErrorKind::io, "cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
    require(out.good(), ErrorKind::io, "manifest write failed in " + dir);
}

Artifacts load_artifacts(const std::string& dir, Predictor needed) {
    std::ifstream in(dir + "/manifest.json");
    require(in.good(), ErrorKind::io, "cannot open manifest in " + dir);
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("invalid manifest: ") + e.what());
    }
    require(manifest.value("version", -1) == kManifestVersion, ErrorKind::version,
            "unsupported manifest version");
    const json& files = manifest.at("artifacts");
    auto path_of = [&](const char* key) {
        return dir + "/" + files.at(key).get<std::string>();
    };

    Artifacts a;
    a.pos = load_lm(path_of("positive"));
    a.dist = load_lm(path_of("distribution"));
    a.cal = load_calibrator(path_of("calibrator"));
    if (needed == Predictor::idp || needed == Predictor::gap || needed == Predictor::gapx)
        a.neg = load_lm(path_of("negative"));
    if (needed == Predictor::gapx) a.disc = load_disc(path_of("disc"));
    return a;
}

std::vector<PredictorOutput> predict_pairs(const Artifacts& a, const Dataset& pairs,
                                           const PredictOptions& opts) {
    require(a.pos && a.dist && a.cal, ErrorKind::state,
            "predict: positive model, distribution model, and calibrator are required");
    if (opts.predictor != Predictor::oodp)
        require(a.neg.has_value(), ErrorKind::state, "predict: negative model is required");
    if (opts.predictor == Predictor::gapx)
        require(a.disc.has_value(), ErrorKind::state, "predict: classifier is required for gapx");
    validate_gap_config(opts.gap);

    std::vector<PredictorOutput> outs;
    outs.reserve(pairs.pairs.size());
    for (const SentencePair& p : pairs.pairs) {
        PredictorOutput o;
        o.id = p.id;
        o.pp = perplexity(*a.dist, p);
        o.lambda = opts.lambda_override ? opts.lambda_override(p) : lambda_of(*a.cal, *a.dist, p);

        switch (opts.predictor) {
            case Predictor::idp: {
                o.s = idp_score(*a.pos, *a.neg, p, opts.conv);
                o.predicted = o.s >= opts.gap.decision_threshold ? 1 : 0;
                break;
            }
            case Predictor::oodp: {
                double raw = oodp_score(*a.pos, p, opts.conv);
                o.s = opts.conv.oodp_threshold - raw;  // margin; positive = paraphrase
                o.predicted = raw < opts.conv.oodp_threshold ? 1 : 0;
                break;
            }
            case Predictor::gap: {
                o.s = gap_score(*a.pos, *a.neg, o.lambda, opts.gap, p, opts.conv);
                o.predicted = o.s >= opts.gap.decision_threshold ? 1 : 0;
                break;
            }
            case Predictor::gapx: {
                o.s = gap_score(*a.pos, *a.neg, o.lambda, opts.gap, p, opts.conv);
                double disc_p = predict_proba(*a.disc, p);
                o.s_star = gapx_score(o.s, disc_p, o.lambda, opts.gap);
                o.predicted = *o.s_star >= opts.gap.decision_threshold ? 1 : 0;
                break;
            }
        }

        if (opts.attributions) {
            AttributionOptions ao;
            switch (opts.predictor) {
                case Predictor::oodp: ao.mode = AttributionMode::oodp; break;
                case Predictor::idp: ao.mode = AttributionMode::idp; break;
                default:
                    ao.mode = AttributionMode::gap;
                    ao.lambda = o.lambda;
                    ao.c = opts.gap.c;
                    break;
            }
            const ConditionalLM* neg = a.neg ? &*a.neg : nullptr;
            o.per_token = per_word_attribution(*a.pos, neg, p, ao);
        }
        outs.push_back(std::move(o));
    }
    return outs;
}

std::function<double(double)> make_c_evaluator(const Artifacts& a, const Dataset& dev,
                                               const ScoreConventions& conv,
                                               const GapConfig& base) {
    for (const SentencePair& p : dev.pairs)
        require(p.label.has_value(), ErrorKind::config,
                "C sweep requires labeled dev pairs");
    return [&a, &dev, conv, base](double c) {
        PredictOptions opts;
        opts.predictor = Predictor::gap;
        opts.conv = conv;
        opts.gap = base;
        opts.gap.c = c;
        std::vector<PredictorOutput> outs = predict_pairs(a, dev, opts);
        return evaluate(outs, dev).macro_f1;
    };
}

}  // namespace gapstat
