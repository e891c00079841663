#include "gapstat/nglm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gapstat/errors.hpp"

namespace gapstat {

using nlohmann::json;

namespace {

constexpr char kCtxSep = '\x1f';  // unit separator; cannot appear in tokenized text

std::string join_context(std::span<const Token> ctx) {
    std::string key;
    for (std::size_t i = 0; i < ctx.size(); ++i) {
        if (i) key.push_back(kCtxSep);
        key += ctx[i];
    }
    return key;
}

TokenSeq flatten(const TokenSeq& s1, const TokenSeq& s2) {
    TokenSeq seq;
    seq.reserve(s1.size() + s2.size() + 3);
    seq.emplace_back(kBos);
    seq.insert(seq.end(), s1.begin(), s1.end());
    seq.emplace_back(kSep);
    seq.insert(seq.end(), s2.begin(), s2.end());
    seq.emplace_back(kEos);
    return seq;
}

// Probability of `next` given a context of length `len` ending at prefix end,
// interpolating recursively toward the uniform distribution (Witten-Bell).
double wb_prob(const ConditionalLM& lm, std::span<const Token> prefix, std::size_t len,
               const Token& next) {
    double uniform = 1.0 / static_cast<double>(lm.vocab_size());
    if (len == 0) {
        auto it = lm.counts.find(std::string());
        if (it == lm.counts.end() || it->second.total == 0) return uniform;
        const ContextCounts& cc = it->second;
        auto types = static_cast<double>(cc.c.size());
        auto n = static_cast<double>(cc.total);
        auto cit = cc.c.find(next);
        double c = cit == cc.c.end() ? 0.0 : static_cast<double>(cit->second);
        return (c + types * uniform) / (n + types);
    }
    std::string key = join_context(prefix.subspan(prefix.size() - len, len));
    auto it = lm.counts.find(key);
    double lower = wb_prob(lm, prefix, len - 1, next);
    if (it == lm.counts.end() || it->second.total == 0) return lower;
    const ContextCounts& cc = it->second;
    auto types = static_cast<double>(cc.c.size());
    auto n = static_cast<double>(cc.total);
    auto cit = cc.c.find(next);
    double c = cit == cc.c.end() ? 0.0 : static_cast<double>(cit->second);
    return (c + types * lower) / (n + types);
}

}  // namespace

ConditionalLM train_conditional(std::span<const SentencePair> pairs, LmRole role, int order,
                                Smoothing smoothing) {
    require(order >= 1, ErrorKind::config, "n-gram order must be >= 1");
    if (smoothing.kind == Smoothing::Kind::add_k)
        require(smoothing.k > 0, ErrorKind::config, "add_k smoothing requires k > 0");
    require(!pairs.empty(), ErrorKind::train, "empty training list");

    ConditionalLM lm;
    lm.order = order;
    lm.role = role;
    lm.smoothing = smoothing;
    lm.vocab = {{kBos, 0}, {kEos, 1}, {kSep, 2}, {kUnk, 3}};

    std::size_t used = 0;
    for (const SentencePair& p : pairs) {
        if (role == LmRole::positive && !(p.label && *p.label == 1)) continue;
        if (role == LmRole::negative && !(p.label && *p.label == 0)) continue;
        ++used;
        TokenSeq seq = flatten(p.s1, p.s2);
        for (const Token& t : seq)
            if (!lm.vocab.count(t))
                lm.vocab.emplace(t, static_cast<std::int32_t>(lm.vocab.size()));
        std::size_t max_ctx = static_cast<std::size_t>(order) - 1;
        for (std::size_t t = 1; t < seq.size(); ++t) {
            std::size_t longest = std::min(max_ctx, t);
            // Record every suffix level so add-k reads its exact level and
            // Witten-Bell can interpolate across levels.
            for (std::size_t len = 0; len <= longest; ++len) {
                std::string key = join_context(
                    std::span<const Token>(seq).subspan(t - len, len));
                ContextCounts& cc = lm.counts[key];
                ++cc.c[seq[t]];
                ++cc.total;
            }
        }
    }
    require(used > 0, ErrorKind::train,
            std::string("no training pairs match role ") + role_name(role));
    return lm;
}

double window_logprob(const ConditionalLM& lm, std::span<const Token> prefix, const Token& next) {
    const Token& event = lm.in_vocab(next) ? next : Token(kUnk);
    std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(lm.order) - 1, prefix.size());
    if (lm.smoothing.kind == Smoothing::Kind::interpolated_wb)
        return std::log(wb_prob(lm, prefix, len, event));

    double v = static_cast<double>(lm.vocab_size());
    double k = lm.smoothing.k;
    std::string key = join_context(prefix.subspan(prefix.size() - len, len));
    auto it = lm.counts.find(key);
    double c = 0.0, n = 0.0;
    if (it != lm.counts.end()) {
        n = static_cast<double>(it->second.total);
        auto cit = it->second.c.find(event);
        if (cit != it->second.c.end()) c = static_cast<double>(cit->second);
    }
    return std::log((c + k) / (n + k * v));
}

double token_logprob(const ConditionalLM& lm, const TokenSeq& condition, const TokenSeq& prefix,
                     const Token& next) {
    TokenSeq flat;
    flat.reserve(condition.size() + prefix.size() + 2);
    flat.emplace_back(kBos);
    flat.insert(flat.end(), condition.begin(), condition.end());
    flat.emplace_back(kSep);
    flat.insert(flat.end(), prefix.begin(), prefix.end());
    return window_logprob(lm, flat, next);
}

SeqLogProb sequence_logprob(const ConditionalLM& lm, const TokenSeq& condition,
                            const TokenSeq& target) {
    require(!target.empty(), ErrorKind::score, "sequence_logprob: empty target");
    TokenSeq flat;
    flat.reserve(condition.size() + target.size() + 2);
    flat.emplace_back(kBos);
    flat.insert(flat.end(), condition.begin(), condition.end());
    flat.emplace_back(kSep);

    SeqLogProb out;
    out.per_token.reserve(target.size() + 1);
    for (const Token& t : target) {
        double lp = window_logprob(lm, flat, t);
        out.per_token.push_back(lp);
        out.sum += lp;
        flat.push_back(lm.in_vocab(t) ? t : Token(kUnk));
    }
    double lp_end = window_logprob(lm, flat, kEos);
    out.per_token.push_back(lp_end);
    out.sum += lp_end;
    return out;
}

std::vector<double> flattened_logprobs(const ConditionalLM& lm, const SentencePair& pair) {
    TokenSeq seq = flatten(pair.s1, pair.s2);
    std::vector<double> lps;
    lps.reserve(seq.size() - 1);
    TokenSeq prefix;
    prefix.reserve(seq.size());
    prefix.push_back(seq[0]);
    for (std::size_t t = 1; t < seq.size(); ++t) {
        lps.push_back(window_logprob(lm, prefix, seq[t]));
        prefix.push_back(lm.in_vocab(seq[t]) ? seq[t] : Token(kUnk));
    }
    return lps;
}

const char* role_name(LmRole role) {
    switch (role) {
        case LmRole::positive: return "positive";
        case LmRole::negative: return "negative";
        case LmRole::distribution: return "distribution";
    }
    return "?";
}

LmRole role_from_name(const std::string& name) {
    if (name == "positive") return LmRole::positive;
    if (name == "negative") return LmRole::negative;
    if (name == "distribution") return LmRole::distribution;
    fail(ErrorKind::parse, "unknown model role: " + name);
}

namespace {
constexpr int kLmVersion = 1;
}

std::string lm_to_json(const ConditionalLM& lm) {
    json j;
    j["version"] = kLmVersion;
    j["role"] = role_name(lm.role);
    j["order"] = lm.order;
    if (lm.smoothing.kind == Smoothing::Kind::add_k)
        j["smoothing"] = {{"type", "add_k"}, {"k", lm.smoothing.k}};
    else
        j["smoothing"] = {{"type", "interpolated_wb"}};

    // std::map keeps serialization deterministic.
    std::map<std::string, std::int32_t> vocab(lm.vocab.begin(), lm.vocab.end());
    j["vocab"] = vocab;
    json counts = json::object();
    std::map<std::string, const ContextCounts*> ordered;
    for (const auto& [ctx, cc] : lm.counts) ordered.emplace(ctx, &cc);
    for (const auto& [ctx, cc] : ordered) {
        std::map<std::string, std::uint64_t> row(cc->c.begin(), cc->c.end());
        counts[ctx] = row;
    }
    j["counts"] = counts;
    return j.dump();
}

ConditionalLM lm_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("invalid model json: ") + e.what());
    }
    require(j.value("version", -1) == kLmVersion, ErrorKind::version,
            "unsupported model version");
    ConditionalLM lm;
    lm.role = role_from_name(j.at("role").get<std::string>());
    lm.order = j.at("order").get<int>();
    const json& sm = j.at("smoothing");
    if (sm.at("type") == "add_k")
        lm.smoothing = Smoothing::add_k(sm.at("k").get<double>());
    else if (sm.at("type") == "interpolated_wb")
        lm.smoothing = Smoothing::witten_bell();
    else
        fail(ErrorKind::parse, "unknown smoothing type");
    for (const auto& [tok, idx] : j.at("vocab").items())
        lm.vocab.emplace(tok, idx.get<std::int32_t>());
    for (const auto& [ctx, row] : j.at("counts").items()) {
        ContextCounts cc;
        for (const auto& [tok, c] : row.items()) {
            cc.c.emplace(tok, c.get<std::uint64_t>());
            cc.total += c.get<std::uint64_t>();
        }
        lm.counts.emplace(ctx, std::move(cc));
    }
    return lm;
}

void save_lm(const ConditionalLM& lm, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot write " + path);
    out << lm_to_json(lm) << "\n";
    require(out.good(), ErrorKind::io, "write failed for " + path);
}

ConditionalLM load_lm(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return lm_from_json(ss.str());
}

}  // namespace gapstat
