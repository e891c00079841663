#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gapstat/corpus.hpp"

namespace gapstat {

// Reserved tokens present in every vocabulary.
inline constexpr const char* kBos = "<s>";
inline constexpr const char* kEos = "</s>";
inline constexpr const char* kSep = "<sep>";
inline constexpr const char* kUnk = "<unk>";

enum class LmRole { positive, negative, distribution };

struct Smoothing {
    enum class Kind { add_k, interpolated_wb };
    Kind kind = Kind::add_k;
    double k = 0.1;  // used by add_k only

    static Smoothing add_k(double k) { return {Kind::add_k, k}; }
    static Smoothing witten_bell() { return {Kind::interpolated_wb, 0.0}; }
};

struct ContextCounts {
    std::unordered_map<Token, std::uint64_t> c;
    std::uint64_t total = 0;
};

/// Conditional autoregressive token-probability model backed by n-gram
/// counts over flattened <s> s1 <sep> s2 </s> sequences. Stands in for the
/// paired encoder-decoder scorers: conditioning on s1 is realized by the
/// flattening, and only positions inside the target side are scored.
///
/// Counts are stored for every context suffix length 0..order-1, so both
/// add-k (exact-context) and interpolated Witten-Bell (all levels) work
/// from the same table.
struct ConditionalLM {
    int order = 3;
    LmRole role = LmRole::positive;
    Smoothing smoothing;
    std::unordered_map<Token, std::int32_t> vocab;           // token -> index
    std::unordered_map<std::string, ContextCounts> counts;   // joined context -> counts

    std::size_t vocab_size() const { return vocab.size(); }
    bool in_vocab(const Token& t) const { return vocab.count(t) != 0; }
};

/// ScorerInterface: the pluggability seam for alternate backends. Any
/// implementation must keep the per-context probability simplex normalized.
class ScorerInterface {
  public:
    virtual ~ScorerInterface() = default;
    virtual double token_logprob(const TokenSeq& condition, const TokenSeq& prefix,
                                 const Token& next) const = 0;
};

ConditionalLM train_conditional(std::span<const SentencePair> pairs, LmRole role, int order,
                                Smoothing smoothing);

/// Flattens <s> ++ condition ++ <sep> ++ prefix and scores `next` from the
/// last (order-1) tokens. Out-of-vocabulary `next` maps to <unk>.
double token_logprob(const ConditionalLM& lm, const TokenSeq& condition, const TokenSeq& prefix,
                     const Token& next);

/// Low-level query: score `next` given an already flattened prefix.
double window_logprob(const ConditionalLM& lm, std::span<const Token> prefix, const Token& next);

struct SeqLogProb {
    double sum = 0.0;
    std::vector<double> per_token;  // length |target| + 1 (includes </s>)
};

SeqLogProb sequence_logprob(const ConditionalLM& lm, const TokenSeq& condition,
                            const TokenSeq& target);

/// Per-transition log probabilities of the full flattened sequence
/// <s> s1 <sep> s2 </s>; n = |s1| + |s2| + 2 scored transitions.
std::vector<double> flattened_logprobs(const ConditionalLM& lm, const SentencePair& pair);

class NgramScorer final : public ScorerInterface {
  public:
    explicit NgramScorer(const ConditionalLM& lm) : lm_(lm) {}
    double token_logprob(const TokenSeq& condition, const TokenSeq& prefix,
                         const Token& next) const override {
        return gapstat::token_logprob(lm_, condition, prefix, next);
    }

  private:
    const ConditionalLM& lm_;
};

// Versioned JSON serialization; load rejects unknown versions.
void save_lm(const ConditionalLM& lm, const std::string& path);
ConditionalLM load_lm(const std::string& path);
std::string lm_to_json(const ConditionalLM& lm);
ConditionalLM lm_from_json(const std::string& text);

const char* role_name(LmRole role);
LmRole role_from_name(const std::string& name);

}  // namespace gapstat
