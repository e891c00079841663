#include "gapstat/disc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gapstat/errors.hpp"
#include "gapstat/log.hpp"

namespace gapstat {

using nlohmann::json;

namespace {

int length_diff_bucket(std::size_t a, std::size_t b) {
    std::size_t d = a > b ? a - b : b - a;
    if (d == 0) return 0;
    if (d == 1) return 1;
    if (d == 2) return 2;
    if (d <= 4) return 3;
    if (d <= 7) return 4;
    return 5;
}

// Raw (unnormalized) feature counts for one pair.
std::map<std::string, double> raw_features(const SentencePair& pair) {
    std::map<std::string, double> f;
    for (const Token& t : pair.s1) f["s1:" + t] += 1.0;
    for (const Token& t : pair.s2) f["s2:" + t] += 1.0;
    std::set<Token> s1_set(pair.s1.begin(), pair.s1.end());
    std::set<Token> s2_set(pair.s2.begin(), pair.s2.end());
    for (const Token& t : s1_set)
        if (s2_set.count(t)) f["sh:" + t] = 1.0;
    f["ld:" + std::to_string(length_diff_bucket(pair.s1.size(), pair.s2.size()))] = 1.0;
    return f;
}

Eigen::Vector2d softmax2(const Eigen::Vector2d& z) {
    double m = z.maxCoeff();
    Eigen::Vector2d e = (z.array() - m).exp();
    return e / e.sum();
}

}  // namespace

FeatureMap build_feature_map(std::span<const SentencePair> pairs) {
    std::set<std::string> names;
    for (const SentencePair& p : pairs)
        for (const auto& [name, v] : raw_features(p)) names.insert(name);
    FeatureMap map;
    for (const std::string& name : names) map.index.emplace(name, map.dim++);
    return map;
}

SparseVec featurize(const SentencePair& pair, const FeatureMap& map) {
    SparseVec h(map.dim);
    double norm_sq = 0.0;
    for (const auto& [name, v] : raw_features(pair)) {
        auto it = map.index.find(name);
        if (it == map.index.end()) continue;
        h.insert(it->second) = v;
        norm_sq += v * v;
    }
    if (norm_sq > 0) h /= std::sqrt(norm_sq);
    return h;
}

LossGrad disc_loss_grad(const Eigen::MatrixXd& w, const Eigen::Vector2d& b,
                        const std::vector<SparseVec>& features, const std::vector<int>& labels,
                        double l2) {
    auto n = static_cast<double>(features.size());
    LossGrad out;
    out.grad_w = Eigen::MatrixXd::Zero(w.rows(), w.cols());
    out.grad_b = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < features.size(); ++i) {
        const SparseVec& h = features[i];
        Eigen::Vector2d z = w * h + b;
        Eigen::Vector2d p = softmax2(z);
        int y = labels[i];
        out.loss -= std::log(std::max(p[y], 1e-300));
        Eigen::Vector2d delta = p;
        delta[y] -= 1.0;
        for (SparseVec::InnerIterator it(h); it; ++it) {
            out.grad_w(0, it.index()) += delta[0] * it.value();
            out.grad_w(1, it.index()) += delta[1] * it.value();
        }
        out.grad_b += delta;
    }
    out.loss /= n;
    out.grad_w /= n;
    out.grad_b /= n;
    out.loss += l2 * w.squaredNorm();
    out.grad_w += 2.0 * l2 * w;
    return out;
}

DiscModel train_disc(const Dataset& train, const DiscHyper& hyper) {
    require(!train.pairs.empty(), ErrorKind::train, "train_disc: empty training set");
    std::vector<int> labels;
    labels.reserve(train.pairs.size());
    bool has0 = false, has1 = false;
    for (const SentencePair& p : train.pairs) {
        require(p.label.has_value(), ErrorKind::train,
                "train_disc: unlabeled pair " + p.id);
        labels.push_back(*p.label);
        (*p.label == 1 ? has1 : has0) = true;
    }
    require(has0 && has1, ErrorKind::train, "train_disc: both classes must be present");

    DiscModel m;
    m.hyper = hyper;
    m.fmap = build_feature_map(train.pairs);
    std::vector<SparseVec> feats;
    feats.reserve(train.pairs.size());
    for (const SentencePair& p : train.pairs) feats.push_back(featurize(p, m.fmap));

    std::mt19937_64 rng(hyper.seed);
    std::normal_distribution<double> init(0.0, 0.01);
    m.w = Eigen::MatrixXd::Zero(2, m.fmap.dim);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < m.fmap.dim; ++c) m.w(r, c) = init(rng);
    m.b = {init(rng), init(rng)};

    double lr = hyper.learning_rate;
    int halvings = 0;
    LossGrad cur = disc_loss_grad(m.w, m.b, feats, labels, hyper.l2);
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        Eigen::MatrixXd w_next = m.w - lr * cur.grad_w;
        Eigen::Vector2d b_next = m.b - lr * cur.grad_b;
        LossGrad next = disc_loss_grad(w_next, b_next, feats, labels, hyper.l2);
        if (next.loss > cur.loss) {
            ++halvings;
            if (halvings > 10) break;
            lr *= 0.5;
            continue;  // roll the step back
        }
        m.w = std::move(w_next);
        m.b = b_next;
        cur = std::move(next);
    }
    log::debug("train_disc: final loss " + std::to_string(cur.loss) + ", lr " +
               std::to_string(lr));
    return m;
}

Eigen::Vector2d logits(const DiscModel& m, const SentencePair& pair) {
    if (m.prior_only) return m.b;
    SparseVec h = featurize(pair, m.fmap);
    return m.w * h + m.b;
}

double predict_proba(const DiscModel& m, const SentencePair& pair) {
    return softmax2(logits(m, pair))[1];
}

SparseVec representation(const DiscModel& m, const SentencePair& pair) {
    return featurize(pair, m.fmap);
}

namespace {
constexpr int kDiscVersion = 1;
}

std::string disc_to_json(const DiscModel& m) {
    json j;
    j["version"] = kDiscVersion;
    std::map<std::string, int> fmap(m.fmap.index.begin(), m.fmap.index.end());
    j["feature_map"] = fmap;
    std::vector<std::vector<double>> w(2, std::vector<double>(m.fmap.dim));
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < m.fmap.dim; ++c) w[r][c] = m.w(r, c);
    j["weights"] = w;
    j["bias"] = {m.b[0], m.b[1]};
    j["hyper"] = {{"l2", m.hyper.l2},
                  {"epochs", m.hyper.epochs},
                  {"learning_rate", m.hyper.learning_rate},
                  {"seed", m.hyper.seed}};
    j["prior_only"] = m.prior_only;
    return j.dump();
}

DiscModel disc_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("invalid classifier json: ") + e.what());
    }
    require(j.value("version", -1) == kDiscVersion, ErrorKind::version,
            "unsupported classifier version");
    DiscModel m;
    for (const auto& [name, idx] : j.at("feature_map").items())
        m.fmap.index.emplace(name, idx.get<int>());
    m.fmap.dim = static_cast<int>(m.fmap.index.size());
    auto w = j.at("weights").get<std::vector<std::vector<double>>>();
    require(w.size() == 2, ErrorKind::parse, "weights must have two rows");
    m.w = Eigen::MatrixXd::Zero(2, m.fmap.dim);
    for (int r = 0; r < 2; ++r) {
        require(static_cast<int>(w[r].size()) == m.fmap.dim, ErrorKind::parse,
                "weight row width mismatch");
        for (int c = 0; c < m.fmap.dim; ++c) m.w(r, c) = w[r][c];
    }
    auto b = j.at("bias").get<std::vector<double>>();
    require(b.size() == 2, ErrorKind::parse, "bias must have two entries");
    m.b = {b[0], b[1]};
    const json& h = j.at("hyper");
    m.hyper.l2 = h.at("l2").get<double>();
    m.hyper.epochs = h.at("epochs").get<int>();
    m.hyper.learning_rate = h.at("learning_rate").get<double>();
    m.hyper.seed = h.at("seed").get<std::uint64_t>();
    m.prior_only = j.value("prior_only", false);
    return m;
}

void save_disc(const DiscModel& m, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot write " + path);
    out << disc_to_json(m) << "\n";
    require(out.good(), ErrorKind::io, "write failed for " + path);
}

DiscModel load_disc(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return disc_from_json(ss.str());
}

}  // namespace gapstat
