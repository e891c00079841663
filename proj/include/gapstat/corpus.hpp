#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gapstat {

using Token = std::string;
using TokenSeq = std::vector<Token>;

/// A labeled (or unlabeled) sentence pair. Token sequences are produced by
/// tokenize() and are non-empty for any pair accepted at load time.
struct SentencePair {
    std::string id;
    TokenSeq s1;
    TokenSeq s2;
    std::optional<int> label;  // 1 = paraphrase, 0 = non-paraphrase
    std::string raw_s1;
    std::string raw_s2;

    bool operator==(const SentencePair&) const = default;
};

enum class Provenance { loaded, synthetic };

struct Dataset {
    std::vector<SentencePair> pairs;
    std::string name;
    Provenance provenance = Provenance::loaded;

    std::size_t size() const { return pairs.size(); }
};

enum class PairFormat { tsv, jsonl };

/// Lowercases, splits punctuation into standalone tokens, collapses whitespace.
TokenSeq tokenize(std::string_view text);

Dataset load_pairs(const std::string& path, PairFormat format);
void save_pairs(const Dataset& d, const std::string& path);

/// Seeded, exhaustive, disjoint partition. Fractions must be positive and sum
/// to 1 within 1e-9.
std::array<Dataset, 3> split(const Dataset& d, std::uint64_t seed,
                             std::array<double, 3> fractions);

/// Maximum balanced subset: keeps all of the minority class and a seeded
/// subsample of the majority, preserving input order.
Dataset balance(const Dataset& d, std::uint64_t seed);

/// Throws if any id repeats or any token sequence is empty.
void validate_dataset(const Dataset& d);

}  // namespace gapstat
