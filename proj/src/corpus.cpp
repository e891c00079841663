#include "gapstat/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "gapstat/errors.hpp"

namespace gapstat {

using nlohmann::json;

TokenSeq tokenize(std::string_view text) {
    TokenSeq out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    };
    for (unsigned char ch : text) {
        if (std::isspace(ch)) {
            flush();
        } else if (std::ispunct(ch)) {
            flush();
            out.emplace_back(1, static_cast<char>(ch));
        } else {
            cur.push_back(static_cast<char>(std::tolower(ch)));
        }
    }
    flush();
    return out;
}

namespace {

std::optional<int> parse_label(const json& j, std::size_t line_no) {
    if (!j.contains("label") || j.at("label").is_null()) return std::nullopt;
    const json& l = j.at("label");
    if (l.is_number_integer()) {
        int v = l.get<int>();
        require(v == 0 || v == 1, ErrorKind::parse,
                "line " + std::to_string(line_no) + ": label must be 0 or 1");
        return v;
    }
    fail(ErrorKind::parse, "line " + std::to_string(line_no) + ": label must be an integer");
}

SentencePair make_pair(std::string id, std::string raw_s1, std::string raw_s2,
                       std::optional<int> label, std::size_t line_no) {
    SentencePair p;
    p.id = std::move(id);
    p.raw_s1 = std::move(raw_s1);
    p.raw_s2 = std::move(raw_s2);
    p.s1 = tokenize(p.raw_s1);
    p.s2 = tokenize(p.raw_s2);
    p.label = label;
    require(!p.s1.empty() && !p.s2.empty(), ErrorKind::parse,
            "line " + std::to_string(line_no) + ": sentence empty after tokenization");
    return p;
}

Dataset load_jsonl(std::istream& in, const std::string& name) {
    Dataset d;
    d.name = name;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            fail(ErrorKind::parse,
                 "line " + std::to_string(line_no) + ": invalid json: " + e.what());
        }
        require(j.is_object(), ErrorKind::parse,
                "line " + std::to_string(line_no) + ": expected a json object");
        for (const char* field : {"id", "s1", "s2"})
            require(j.contains(field) && j.at(field).is_string(), ErrorKind::parse,
                    "line " + std::to_string(line_no) + ": missing string field \"" +
                        field + "\"");
        d.pairs.push_back(make_pair(j.at("id").get<std::string>(),
                                    j.at("s1").get<std::string>(),
                                    j.at("s2").get<std::string>(),
                                    parse_label(j, line_no), line_no));
    }
    return d;
}

Dataset load_tsv(std::istream& in, const std::string& name) {
    Dataset d;
    d.name = name;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = line.find('\t', start);
            cells.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (line_no == 1 && !cells.empty() && cells[0] == "id") continue;  // header row
        require(cells.size() == 3 || cells.size() == 4, ErrorKind::parse,
                "line " + std::to_string(line_no) + ": expected 3 or 4 tab-separated fields, got " +
                    std::to_string(cells.size()));
        std::optional<int> label;
        if (cells.size() == 4 && !cells[3].empty()) {
            require(cells[3] == "0" || cells[3] == "1", ErrorKind::parse,
                    "line " + std::to_string(line_no) + ": label must be 0 or 1");
            label = cells[3] == "1" ? 1 : 0;
        }
        d.pairs.push_back(make_pair(cells[0], cells[1], cells[2], label, line_no));
    }
    return d;
}

}  // namespace

void validate_dataset(const Dataset& d) {
    std::unordered_set<std::string> seen;
    for (const SentencePair& p : d.pairs) {
        require(seen.insert(p.id).second, ErrorKind::parse, "duplicate pair id: " + p.id);
        require(!p.s1.empty() && !p.s2.empty(), ErrorKind::parse,
                "pair " + p.id + ": empty token sequence");
        if (p.label) require(*p.label == 0 || *p.label == 1, ErrorKind::parse,
                             "pair " + p.id + ": label must be 0 or 1");
    }
}

Dataset load_pairs(const std::string& path, PairFormat format) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open " + path);
    Dataset d = format == PairFormat::jsonl ? load_jsonl(in, path) : load_tsv(in, path);
    validate_dataset(d);
    return d;
}

void save_pairs(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot write " + path);
    for (const SentencePair& p : d.pairs) {
        json j{{"id", p.id}, {"s1", p.raw_s1}, {"s2", p.raw_s2}};
        if (p.label) j["label"] = *p.label;
        out << j.dump() << "\n";
    }
    require(out.good(), ErrorKind::io, "write failed for " + path);
}

std::array<Dataset, 3> split(const Dataset& d, std::uint64_t seed,
                             std::array<double, 3> fractions) {
    double sum = fractions[0] + fractions[1] + fractions[2];
    require(fractions[0] > 0 && fractions[1] > 0 && fractions[2] > 0, ErrorKind::config,
            "split fractions must be positive");
    require(std::abs(sum - 1.0) <= 1e-9, ErrorKind::config,
            "split fractions must sum to 1");

    std::vector<std::size_t> idx(d.pairs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);

    std::size_t n = idx.size();
    auto n_train = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
    auto n_dev = static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n)));
    n_train = std::min(n_train, n);
    n_dev = std::min(n_dev, n - n_train);

    std::array<Dataset, 3> parts;
    const char* suffix[3] = {".train", ".dev", ".test"};
    std::size_t bounds[4] = {0, n_train, n_train + n_dev, n};
    for (int k = 0; k < 3; ++k) {
        parts[k].name = d.name + suffix[k];
        parts[k].provenance = d.provenance;
        for (std::size_t i = bounds[k]; i < bounds[k + 1]; ++i)
            parts[k].pairs.push_back(d.pairs[idx[i]]);
    }
    return parts;
}

Dataset balance(const Dataset& d, std::uint64_t seed) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < d.pairs.size(); ++i) {
        require(d.pairs[i].label.has_value(), ErrorKind::config,
                "balance requires labeled pairs (pair " + d.pairs[i].id + " unlabeled)");
        (*d.pairs[i].label == 1 ? pos : neg).push_back(i);
    }
    require(!pos.empty() && !neg.empty(), ErrorKind::config,
            "balance requires both label classes to be present");

    std::size_t keep = std::min(pos.size(), neg.size());
    std::mt19937_64 rng(seed);
    auto subsample = [&](std::vector<std::size_t>& v) {
        if (v.size() == keep) return;
        std::shuffle(v.begin(), v.end(), rng);
        v.resize(keep);
        std::sort(v.begin(), v.end());
    };
    subsample(pos);
    subsample(neg);

    std::vector<bool> kept(d.pairs.size(), false);
    for (std::size_t i : pos) kept[i] = true;
    for (std::size_t i : neg) kept[i] = true;

    Dataset out;
    out.name = d.name;
    out.provenance = d.provenance;
    for (std::size_t i = 0; i < d.pairs.size(); ++i)
        if (kept[i]) out.pairs.push_back(d.pairs[i]);
    return out;
}

}  // namespace gapstat
