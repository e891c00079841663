#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gapstat/corpus.hpp"
#include "gapstat/disc.hpp"

namespace gapstat {

/// Discriminative training procedure used inside RCA: the log-linear trainer,
/// run with a few seeds and selected on a dev set by AUROC when one is given.
struct RcaTrainer {
    DiscHyper hyper;
    int seed_candidates = 3;
    const Dataset* selection_dev = nullptr;

    DiscModel train(const Dataset& data, std::uint64_t seed) const;
};

struct RcaResult {
    double rca_st = 0.0;   // performance drop against the target pool, AUROC points
    double rca_ss = 0.0;   // self-shift baseline
    double rca_star = 0.0; // rca_st - rca_ss
    double rca_st_acc = 0.0;  // same drops in accuracy points, for transparency
    double rca_ss_acc = 0.0;
    long relabel_count = 0;
    std::uint64_t seed = 0;
};

struct RcaCalibration {
    std::vector<double> samples;  // self RCA* measurements
    double mean = 0.0;
    double std_dev = 0.0;
    double ood_threshold = 0.0;   // empirical 90th percentile
    int reps = 0;
    long pool = 0;
    bool low_confidence = false;  // fewer than 10 repetitions
};

/// Trains M1 on source, relabels `relabel_count` target samples with it,
/// trains M2 on the relabeled data, and builds the M3 control the same way
/// from relabeled source data. Returns AUROC(M3) - AUROC(M2) on the source
/// test set, in percentage points.
double rca(const Dataset& source_train, const Dataset& source_test, const Dataset& target_pool,
           const RcaTrainer& trainer, long relabel_count, std::uint64_t seed);

struct SourceSplits {
    const Dataset* train = nullptr;
    const Dataset* test = nullptr;
    const Dataset* dev = nullptr;
};

/// Runs rca twice with the same derived seeds: once against the target pool
/// and once against the source dev (the self-shift run).
RcaResult rca_star(const SourceSplits& source, const Dataset& target_pool,
                   const RcaTrainer& trainer, std::uint64_t seed);

/// Repeated self-shift measurements on held-back slices of `d`. The pool
/// auto-shrinks to n/4 with a warning when the dataset is too small for the
/// requested size.
RcaCalibration rca_calibrate(const Dataset& d, const RcaTrainer& trainer, int reps, long pool,
                             std::uint64_t seed);

std::string rca_result_to_json(const RcaResult& r);
std::string rca_calibration_to_json(const RcaCalibration& c);

}  // namespace gapstat
