#include "gapstat/rca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "gapstat/errors.hpp"
#include "gapstat/eval.hpp"
#include "gapstat/log.hpp"

namespace gapstat {

using nlohmann::json;

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

struct Perf {
    double auroc = 0.0;
    double acc = 0.0;
};

Perf test_performance(const DiscModel& m, const Dataset& test) {
    std::vector<double> scores;
    std::vector<int> preds, labels;
    for (const SentencePair& p : test.pairs) {
        require(p.label.has_value(), ErrorKind::rca, "rca: unlabeled test pair " + p.id);
        double prob = predict_proba(m, p);
        scores.push_back(prob);
        preds.push_back(prob >= 0.5 ? 1 : 0);
        labels.push_back(*p.label);
    }
    return {auroc(scores, labels), accuracy(preds, labels)};
}

Dataset subsample(const Dataset& d, std::size_t n, std::uint64_t seed, const char* name) {
    std::vector<std::size_t> idx(d.pairs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    Dataset out;
    out.name = name;
    out.provenance = d.provenance;
    for (std::size_t i : idx) out.pairs.push_back(d.pairs[i]);
    return out;
}

Dataset relabel_with(const DiscModel& m, const Dataset& pool) {
    Dataset out;
    out.name = pool.name + ".relabeled";
    out.provenance = pool.provenance;
    for (const SentencePair& p : pool.pairs) {
        SentencePair q = p;
        q.label = predict_proba(m, p) >= 0.5 ? 1 : 0;
        out.pairs.push_back(std::move(q));
    }
    return out;
}

// A severe shift can make the relabeled pool single-class; fall back to a
// constant prior model so the measurement stays defined (its AUROC is 0.5).
DiscModel train_or_prior(const RcaTrainer& trainer, const Dataset& data, std::uint64_t seed) {
    bool has0 = false, has1 = false;
    for (const SentencePair& p : data.pairs) (p.label == 1 ? has1 : has0) = true;
    if (has0 && has1) return trainer.train(data, seed);
    log::warn("rca: relabeled pool is single-class; using a prior-only model");
    DiscModel m;
    m.prior_only = true;
    m.w = Eigen::MatrixXd::Zero(2, 0);
    double p1 = has1 ? 1.0 - 1e-6 : 1e-6;
    m.b = {std::log1p(-p1), std::log(p1)};
    return m;
}

double percentile90(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    std::size_t rank = static_cast<std::size_t>(
        std::ceil(0.9 * static_cast<double>(xs.size())));
    rank = std::clamp<std::size_t>(rank, 1, xs.size());
    return xs[rank - 1];
}

}  // namespace

DiscModel RcaTrainer::train(const Dataset& data, std::uint64_t seed) const {
    int candidates = selection_dev ? std::max(1, seed_candidates) : 1;
    DiscModel best;
    double best_score = -1.0;
    for (int i = 0; i < candidates; ++i) {
        DiscHyper h = hyper;
        h.seed = mix_seed(seed, static_cast<std::uint64_t>(i));
        DiscModel m = train_disc(data, h);
        if (candidates == 1) return m;
        double score = test_performance(m, *selection_dev).auroc;
        if (score > best_score) {
            best_score = score;
            best = std::move(m);
        }
    }
    return best;
}

double rca(const Dataset& source_train, const Dataset& source_test, const Dataset& target_pool,
           const RcaTrainer& trainer, long relabel_count, std::uint64_t seed) {
    require(relabel_count > 0, ErrorKind::config, "rca: relabel_count must be positive");
    require(static_cast<long>(target_pool.pairs.size()) >= relabel_count, ErrorKind::rca,
            "rca: target pool smaller than relabel_count");
    require(static_cast<long>(source_train.pairs.size()) >= relabel_count, ErrorKind::rca,
            "rca: source train smaller than relabel_count");

    auto n = static_cast<std::size_t>(relabel_count);
    DiscModel m1 = trainer.train(source_train, mix_seed(seed, 11));

    Dataset target_slice = subsample(target_pool, n, mix_seed(seed, 12), "rca.target");
    Dataset relabeled_target = relabel_with(m1, target_slice);
    DiscModel m2 = train_or_prior(trainer, relabeled_target, mix_seed(seed, 13));

    Dataset source_slice = subsample(source_train, n, mix_seed(seed, 14), "rca.source");
    Dataset relabeled_source = relabel_with(m1, source_slice);
    DiscModel m3 = train_or_prior(trainer, relabeled_source, mix_seed(seed, 15));

    double drop = test_performance(m3, source_test).auroc - test_performance(m2, source_test).auroc;
    return 100.0 * drop;
}

namespace {

// Like rca() but also reporting the accuracy drop.
std::pair<double, double> rca_with_acc(const Dataset& source_train, const Dataset& source_test,
                                       const Dataset& target_pool, const RcaTrainer& trainer,
                                       long relabel_count, std::uint64_t seed) {
    auto n = static_cast<std::size_t>(relabel_count);
    DiscModel m1 = trainer.train(source_train, mix_seed(seed, 11));
    Dataset target_slice = subsample(target_pool, n, mix_seed(seed, 12), "rca.target");
    DiscModel m2 = train_or_prior(trainer, relabel_with(m1, target_slice), mix_seed(seed, 13));
    Dataset source_slice = subsample(source_train, n, mix_seed(seed, 14), "rca.source");
    DiscModel m3 = train_or_prior(trainer, relabel_with(m1, source_slice), mix_seed(seed, 15));
    Perf p2 = test_performance(m2, source_test);
    Perf p3 = test_performance(m3, source_test);
    return {100.0 * (p3.auroc - p2.auroc), 100.0 * (p3.acc - p2.acc)};
}

}  // namespace

RcaResult rca_star(const SourceSplits& source, const Dataset& target_pool,
                   const RcaTrainer& trainer, std::uint64_t seed) {
    require(source.train && source.test && source.dev, ErrorKind::config,
            "rca_star: missing source splits");
    long pool = std::min<long>({static_cast<long>(target_pool.pairs.size()),
                                static_cast<long>(source.dev->pairs.size()),
                                static_cast<long>(source.train->pairs.size()),
                                1000});
    require(pool > 0, ErrorKind::rca, "rca_star: empty pools");

    RcaResult r;
    r.relabel_count = pool;
    r.seed = seed;
    // Same derived seed for both runs: the pool is the only difference.
    auto [st, st_acc] = rca_with_acc(*source.train, *source.test, target_pool, trainer, pool, seed);
    auto [ss, ss_acc] = rca_with_acc(*source.train, *source.test, *source.dev, trainer, pool, seed);
    r.rca_st = st;
    r.rca_ss = ss;
    r.rca_st_acc = st_acc;
    r.rca_ss_acc = ss_acc;
    r.rca_star = r.rca_st - r.rca_ss;
    return r;
}

RcaCalibration rca_calibrate(const Dataset& d, const RcaTrainer& trainer, int reps, long pool,
                             std::uint64_t seed) {
    require(reps >= 1, ErrorKind::config, "rca_calibrate: reps must be >= 1");
    long n = static_cast<long>(d.pairs.size());
    long pool_eff = pool;
    if (n < 4 * pool) {
        pool_eff = n / 4;
        log::warn("rca_calibrate: dataset too small for pool " + std::to_string(pool) +
                  "; shrinking to " + std::to_string(pool_eff));
    }
    require(pool_eff >= 2, ErrorKind::rca, "rca_calibrate: dataset too small");

    RcaCalibration cal;
    cal.reps = reps;
    cal.pool = pool_eff;
    cal.low_confidence = reps < 10;
    if (cal.low_confidence)
        log::warn("rca_calibrate: fewer than 10 repetitions; calibration is low-confidence");

    for (int rep = 0; rep < reps; ++rep) {
        std::uint64_t rep_seed = mix_seed(seed, 100 + static_cast<std::uint64_t>(rep));
        std::vector<std::size_t> idx(d.pairs.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::mt19937_64 rng(rep_seed);
        std::shuffle(idx.begin(), idx.end(), rng);

        auto take = [&](std::size_t from, std::size_t count, const char* name) {
            Dataset out;
            out.name = d.name + name;
            out.provenance = d.provenance;
            for (std::size_t i = from; i < from + count; ++i) out.pairs.push_back(d.pairs[idx[i]]);
            return out;
        };
        auto np = static_cast<std::size_t>(pool_eff);
        Dataset held = take(0, np, ".held");
        std::size_t rest = d.pairs.size() - np;
        std::size_t n_test = std::max<std::size_t>(1, rest / 4);
        std::size_t n_dev = std::max<std::size_t>(1, rest / 4);
        Dataset test = take(np, n_test, ".test");
        Dataset dev = take(np + n_test, n_dev, ".dev");
        Dataset train = take(np + n_test + n_dev, rest - n_test - n_dev, ".train");

        RcaTrainer t = trainer;
        t.selection_dev = trainer.selection_dev ? trainer.selection_dev : &dev;
        SourceSplits splits{&train, &test, &dev};
        cal.samples.push_back(rca_star(splits, held, t, rep_seed).rca_star);
    }

    double m = std::accumulate(cal.samples.begin(), cal.samples.end(), 0.0) /
               static_cast<double>(cal.samples.size());
    double var = 0.0;
    for (double x : cal.samples) var += (x - m) * (x - m);
    cal.mean = m;
    cal.std_dev = std::sqrt(var / static_cast<double>(cal.samples.size()));
    cal.ood_threshold = percentile90(cal.samples);
    return cal;
}

std::string rca_result_to_json(const RcaResult& r) {
    json j{{"rca_st", r.rca_st},
           {"rca_ss", r.rca_ss},
           {"rca_star", r.rca_star},
           {"rca_st_acc", r.rca_st_acc},
           {"rca_ss_acc", r.rca_ss_acc},
           {"relabel_count", r.relabel_count},
           {"seed", r.seed}};
    return j.dump();
}

std::string rca_calibration_to_json(const RcaCalibration& c) {
    json j{{"samples", c.samples},     {"mean", c.mean},
           {"std", c.std_dev},         {"ood_threshold", c.ood_threshold},
           {"reps", c.reps},           {"pool", c.pool},
           {"low_confidence", c.low_confidence}};
    return j.dump();
}

}  // namespace gapstat
