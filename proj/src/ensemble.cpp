#include "gapstat/ensemble.hpp"

#include <cmath>

#include <json.hpp>

#include "gapstat/errors.hpp"

namespace gapstat {

using nlohmann::json;

void validate_gap_config(const GapConfig& cfg) {
    require(cfg.m_const >= 1000.0, ErrorKind::config, "M must be >= 1000");
    require(cfg.tau_threshold > 0.0 && cfg.tau_threshold < 1.0, ErrorKind::config,
            "tau threshold must be in (0, 1)");
    require(std::isfinite(cfg.c), ErrorKind::config, "C must be finite");
}

double gap_score(const ConditionalLM& pos, const ConditionalLM& neg, double lambda,
                 const GapConfig& cfg, const SentencePair& pair, const ScoreConventions& conv) {
    require(lambda >= 0.0 && lambda <= 1.0, ErrorKind::config, "lambda must be in [0, 1]");
    require(pos.role == LmRole::positive, ErrorKind::config,
            "gap_score: first model must have role positive");
    require(neg.role == LmRole::negative, ErrorKind::config,
            "gap_score: second model must have role negative");
    double llpos = avg_loglik(pos, pair, conv);
    double llneg = avg_loglik(neg, pair, conv);
    return llpos - (1.0 - lambda) * llneg - lambda * cfg.c;
}

int tau(double lambda, const GapConfig& cfg) {
    require(lambda >= 0.0 && lambda <= 1.0, ErrorKind::config, "lambda must be in [0, 1]");
    return lambda < cfg.tau_threshold ? 0 : 1;
}

double gapx_score(double gap_s, double disc_p, double lambda, const GapConfig& cfg) {
    require(disc_p >= 0.0 && disc_p <= 1.0, ErrorKind::config,
            "discriminative probability must be in [0, 1]");
    int t = tau(lambda, cfg);
    return cfg.m_const * (1 - t) * (disc_p - 0.5) + t * gap_s;
}

std::string predictor_output_to_jsonl(const PredictorOutput& out) {
    json j;
    j["id"] = out.id;
    j["S"] = out.s;
    j["lambda"] = out.lambda;
    j["PP"] = out.pp;
    j["S_star"] = out.s_star ? json(*out.s_star) : json(nullptr);
    j["predicted"] = out.predicted;
    if (out.per_token) {
        json toks = json::array();
        for (const auto& [tok, v] : *out.per_token) toks.push_back({{"token", tok}, {"score", v}});
        j["per_token"] = toks;
    }
    return j.dump();
}

PredictorOutput predictor_output_from_jsonl(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("invalid prediction json: ") + e.what());
    }
    PredictorOutput out;
    out.id = j.at("id").get<std::string>();
    out.s = j.at("S").get<double>();
    out.lambda = j.at("lambda").get<double>();
    out.pp = j.at("PP").get<double>();
    if (j.contains("S_star") && !j.at("S_star").is_null())
        out.s_star = j.at("S_star").get<double>();
    out.predicted = j.at("predicted").get<int>();
    if (j.contains("per_token")) {
        std::vector<std::pair<Token, double>> toks;
        for (const auto& t : j.at("per_token"))
            toks.emplace_back(t.at("token").get<std::string>(), t.at("score").get<double>());
        out.per_token = std::move(toks);
    }
    return out;
}

double choose_c_by_hint(StyleHint hint) {
    switch (hint) {
        case StyleHint::adversarial: return 1.0;
        case StyleHint::standard: return 3.0;
        case StyleHint::informal: return 5.0;
    }
    fail(ErrorKind::config, "unknown style hint");
}

double choose_c_on_dev(const std::vector<double>& candidates,
                       const std::function<double(double)>& dev_macro_f1) {
    require(!candidates.empty(), ErrorKind::config, "choose_c: empty candidate list");
    double best_c = 0.0;
    double best_f1 = -1.0;
    for (double c : candidates) {
        double f1 = dev_macro_f1(c);
        // Strict improvement required; ties keep the smaller constant.
        if (f1 > best_f1 || (f1 == best_f1 && c < best_c)) {
            best_f1 = f1;
            best_c = c;
        }
    }
    return best_c;
}

double choose_c(std::optional<StyleHint> hint, const std::vector<double>& candidates,
                const std::function<double(double)>& dev_macro_f1) {
    if (dev_macro_f1) return choose_c_on_dev(candidates, dev_macro_f1);
    require(hint.has_value(), ErrorKind::config,
            "choose_c: need validation data or a style hint");
    return choose_c_by_hint(*hint);
}

}  // namespace gapstat
