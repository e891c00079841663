#include "gapstat/scorer.hpp"

#include <cmath>

#include "gapstat/errors.hpp"

namespace gapstat {

namespace {

double direction_loglik(const ConditionalLM& lm, const TokenSeq& condition, const TokenSeq& target,
                        bool length_normalize) {
    SeqLogProb s = sequence_logprob(lm, condition, target);
    if (!length_normalize) return s.sum;
    return s.sum / static_cast<double>(s.per_token.size());
}

}  // namespace

double avg_loglik(const ConditionalLM& lm, const SentencePair& pair,
                  const ScoreConventions& conv) {
    double fwd = direction_loglik(lm, pair.s1, pair.s2, conv.length_normalize);
    if (!conv.symmetrize) return fwd;
    double bwd = direction_loglik(lm, pair.s2, pair.s1, conv.length_normalize);
    return 0.5 * (fwd + bwd);
}

double idp_score(const ConditionalLM& pos, const ConditionalLM& neg, const SentencePair& pair,
                 const ScoreConventions& conv) {
    require(pos.role == LmRole::positive, ErrorKind::config,
            "idp_score: first model must have role positive");
    require(neg.role == LmRole::negative, ErrorKind::config,
            "idp_score: second model must have role negative");
    return avg_loglik(pos, pair, conv) - avg_loglik(neg, pair, conv);
}

double oodp_score(const ConditionalLM& pos, const SentencePair& pair,
                  const ScoreConventions& conv) {
    require(pos.role == LmRole::positive, ErrorKind::config,
            "oodp_score: model must have role positive");
    return -avg_loglik(pos, pair, conv);
}

std::vector<std::pair<Token, double>> per_word_attribution(const ConditionalLM& pos,
                                                           const ConditionalLM* neg,
                                                           const SentencePair& pair,
                                                           const AttributionOptions& opts) {
    require(pos.role == LmRole::positive, ErrorKind::config,
            "per_word_attribution: pos model must have role positive");
    if (opts.mode != AttributionMode::oodp)
        require(neg != nullptr, ErrorKind::config,
                "per_word_attribution: idp/gap modes require a negative model");
    if (neg)
        require(neg->role == LmRole::negative, ErrorKind::config,
                "per_word_attribution: neg model must have role negative");

    SeqLogProb lp_pos = sequence_logprob(pos, pair.s1, pair.s2);
    SeqLogProb lp_neg;
    if (opts.mode != AttributionMode::oodp) lp_neg = sequence_logprob(*neg, pair.s1, pair.s2);

    std::size_t n = lp_pos.per_token.size();
    double c_share = opts.c / static_cast<double>(n);  // lambda*C split evenly over positions

    std::vector<std::pair<Token, double>> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Token tok = i < pair.s2.size() ? pair.s2[i] : Token(kEos);
        double contrib = 0.0;  // paraphrase-positive contribution of this position
        switch (opts.mode) {
            case AttributionMode::oodp:
                contrib = lp_pos.per_token[i];
                break;
            case AttributionMode::idp:
                contrib = lp_pos.per_token[i] - lp_neg.per_token[i];
                break;
            case AttributionMode::gap:
                contrib = lp_pos.per_token[i] - (1.0 - opts.lambda) * lp_neg.per_token[i] -
                          opts.lambda * c_share;
                break;
        }
        out.emplace_back(std::move(tok), -contrib);
    }
    return out;
}

}  // namespace gapstat
