#pragma once

#include <cstdint>
#include <string>

#include "gapstat/corpus.hpp"

namespace gapstat {

/// Negative-mining strategies mirroring how real datasets construct their
/// non-paraphrase pairs: word_swap scrambles a sentence into itself
/// (PAWS-style), topic_shuffle pairs different sentences about the same
/// topic (QQP-style), random_unrelated crosses topics.
enum class NegStrategy { word_swap, topic_shuffle, random_unrelated };

const char* neg_strategy_name(NegStrategy s);
NegStrategy neg_strategy_from_name(const std::string& name);

struct SynthSpec {
    NegStrategy strategy = NegStrategy::topic_shuffle;
    std::size_t pair_count = 200;     // total pairs; half positive, half negative
    std::size_t vocab_target = 160;   // approximate bound on distinct entity tokens
};

/// Balanced dataset from the embedded template bank (20 topics, question /
/// fronted-paraphrase / statement templates with synonym sets). Positives are
/// generated from a random stream independent of the negatives', so two specs
/// differing only in strategy produce identical positive sub-datasets.
Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed);

}  // namespace gapstat
