#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "gapstat/corpus.hpp"

namespace gapstat {

using SparseVec = Eigen::SparseVector<double>;

struct FeatureMap {
    std::unordered_map<std::string, int> index;
    int dim = 0;
};

struct DiscHyper {
    double l2 = 1e-4;
    int epochs = 300;
    double learning_rate = 2.0;
    std::uint64_t seed = 0;
};

/// Regularized log-linear classifier over pair features. Supplies
/// P(Y=1|s1,s2) plus the logits and representation the OOD baselines need.
struct DiscModel {
    FeatureMap fmap;
    Eigen::MatrixXd w;   // 2 x dim class weights
    Eigen::Vector2d b;   // per-class bias
    DiscHyper hyper;
    // Degenerate fallback used by RCA when relabeled data collapses to one
    // class: zero weights and a prior-logit bias.
    bool prior_only = false;
};

/// Feature names are sorted, so the map is independent of pair order.
FeatureMap build_feature_map(std::span<const SentencePair> pairs);

/// Unigrams of s1, unigrams of s2, shared-token indicators, and a length
/// difference bucket; TF-weighted and L2-normalized. Unknown features drop.
SparseVec featurize(const SentencePair& pair, const FeatureMap& map);

/// Full-batch gradient descent on L2-regularized cross entropy. If a step
/// raises the loss it is rolled back and the learning rate halves (at most
/// 10 times). Identical (data, hyper, seed) gives identical weights.
DiscModel train_disc(const Dataset& train, const DiscHyper& hyper);

double predict_proba(const DiscModel& m, const SentencePair& pair);
Eigen::Vector2d logits(const DiscModel& m, const SentencePair& pair);
SparseVec representation(const DiscModel& m, const SentencePair& pair);

/// Loss and gradient at explicit parameters; exposed so tests can check the
/// analytic gradient against finite differences.
struct LossGrad {
    double loss = 0.0;
    Eigen::MatrixXd grad_w;
    Eigen::Vector2d grad_b;
};
LossGrad disc_loss_grad(const Eigen::MatrixXd& w, const Eigen::Vector2d& b,
                        const std::vector<SparseVec>& features, const std::vector<int>& labels,
                        double l2);

void save_disc(const DiscModel& m, const std::string& path);
DiscModel load_disc(const std::string& path);
std::string disc_to_json(const DiscModel& m);
DiscModel disc_from_json(const std::string& text);

}  // namespace gapstat
