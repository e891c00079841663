#include <doctest.h>

#include <cmath>
#include <random>

#include "gapstat/disc.hpp"
#include "gapstat/errors.hpp"

using namespace gapstat;

namespace {

SentencePair mk(const std::string& id, const TokenSeq& s1, const TokenSeq& s2, int label) {
    SentencePair p;
    p.id = id;
    p.s1 = s1;
    p.s2 = s2;
    p.label = label;
    return p;
}

// Disjoint vocabularies per class make the features linearly separable.
Dataset separable_toy() {
    Dataset d;
    d.name = "toy";
    d.pairs = {
        mk("p1", {"alpha", "beta"}, {"alpha", "beta"}, 1),
        mk("p2", {"beta", "alpha"}, {"alpha"}, 1),
        mk("n1", {"gamma", "delta"}, {"epsilon"}, 0),
        mk("n2", {"delta"}, {"gamma", "epsilon"}, 0),
    };
    return d;
}

}  // namespace

TEST_CASE("featurize blocks and normalization") {
    Dataset d = separable_toy();
    FeatureMap map = build_feature_map(d.pairs);

    SUBCASE("identical sentences fill the shared block") {
        SentencePair p = mk("x", {"alpha", "beta"}, {"alpha", "beta"}, 1);
        SparseVec h = featurize(p, map);
        CHECK(h.coeff(map.index.at("sh:alpha")) > 0.0);
        CHECK(h.coeff(map.index.at("sh:beta")) > 0.0);
    }
    SUBCASE("disjoint sentences leave the shared block empty") {
        SentencePair p = mk("x", {"alpha"}, {"gamma"}, 0);
        SparseVec h = featurize(p, map);
        CHECK(h.coeff(map.index.at("sh:alpha")) == 0.0);
    }
    SUBCASE("unit norm for any non-empty pair") {
        std::mt19937_64 rng(2);
        std::vector<Token> words{"alpha", "beta", "gamma", "delta", "epsilon"};
        for (int i = 0; i < 40; ++i) {
            TokenSeq s1, s2;
            for (std::size_t j = 0; j <= rng() % 5; ++j) s1.push_back(words[rng() % 5]);
            for (std::size_t j = 0; j <= rng() % 5; ++j) s2.push_back(words[rng() % 5]);
            SparseVec h = featurize(mk("x", s1, s2, 0), map);
            double norm = 0.0;
            for (SparseVec::InnerIterator it(h); it; ++it) norm += it.value() * it.value();
            CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("separable toy data trains to accuracy 1.0") {
    Dataset d = separable_toy();
    DiscHyper hyper;
    hyper.epochs = 200;
    DiscModel m = train_disc(d, hyper);
    for (const SentencePair& p : d.pairs) {
        int pred = predict_proba(m, p) >= 0.5 ? 1 : 0;
        CHECK(pred == *p.label);
    }
}

TEST_CASE("strong regularization shrinks the weights") {
    Dataset d = separable_toy();
    DiscHyper strong;
    strong.l2 = 1e3;
    strong.epochs = 200;
    DiscHyper weak;
    weak.l2 = 1e-3;
    weak.epochs = 200;
    DiscModel ms = train_disc(d, strong);
    DiscModel mw = train_disc(d, weak);
    CHECK(ms.w.norm() < mw.w.norm());
}

TEST_CASE("analytic gradient matches central finite differences") {
    Dataset d = separable_toy();
    FeatureMap map = build_feature_map(d.pairs);
    std::vector<SparseVec> feats;
    std::vector<int> labels;
    for (const SentencePair& p : d.pairs) {
        feats.push_back(featurize(p, map));
        labels.push_back(*p.label);
    }

    std::mt19937_64 rng(31);
    std::normal_distribution<double> gauss(0.0, 0.5);
    const double eps = 1e-6;
    const double l2 = 0.01;
    for (int point = 0; point < 5; ++point) {
        Eigen::MatrixXd w(2, map.dim);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < map.dim; ++c) w(r, c) = gauss(rng);
        Eigen::Vector2d b{gauss(rng), gauss(rng)};
        LossGrad lg = disc_loss_grad(w, b, feats, labels, l2);

        for (int probe = 0; probe < 6; ++probe) {
            int r = static_cast<int>(rng() % 2);
            int c = static_cast<int>(rng() % static_cast<std::uint64_t>(map.dim));
            Eigen::MatrixXd wp = w, wm = w;
            wp(r, c) += eps;
            wm(r, c) -= eps;
            double fd = (disc_loss_grad(wp, b, feats, labels, l2).loss -
                         disc_loss_grad(wm, b, feats, labels, l2).loss) /
                        (2 * eps);
            double rel = std::abs(fd - lg.grad_w(r, c)) /
                         std::max(1e-8, std::abs(fd) + std::abs(lg.grad_w(r, c)));
            CHECK(rel < 1e-5);
        }
        for (int r = 0; r < 2; ++r) {
            Eigen::Vector2d bp = b, bm = b;
            bp[r] += eps;
            bm[r] -= eps;
            double fd = (disc_loss_grad(w, bp, feats, labels, l2).loss -
                         disc_loss_grad(w, bm, feats, labels, l2).loss) /
                        (2 * eps);
            double rel = std::abs(fd - lg.grad_b[r]) /
                         std::max(1e-8, std::abs(fd) + std::abs(lg.grad_b[r]));
            CHECK(rel < 1e-5);
        }
    }
}

TEST_CASE("predict_proba closed forms") {
    Dataset d = separable_toy();
    DiscModel m = train_disc(d, DiscHyper{});
    SUBCASE("zero weights give 0.5") {
        DiscModel z = m;
        z.w.setZero();
        z.b.setZero();
        CHECK(predict_proba(z, d.pairs[0]) == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("logit difference of ln 3 gives p = 0.75") {
        DiscModel z = m;
        z.w.setZero();
        z.b = {2.0, 2.0 + std::log(3.0)};
        CHECK(predict_proba(z, d.pairs[0]) == doctest::Approx(0.75).epsilon(1e-12));
    }
    SUBCASE("probabilities of the two classes sum to 1") {
        for (const SentencePair& p : d.pairs) {
            Eigen::Vector2d z = logits(m, p);
            double e0 = std::exp(z[0] - z.maxCoeff());
            double e1 = std::exp(z[1] - z.maxCoeff());
            double p1 = e1 / (e0 + e1);
            CHECK(p1 + e0 / (e0 + e1) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(predict_proba(m, p) == doctest::Approx(p1).epsilon(1e-12));
        }
    }
    SUBCASE("bias shift leaves the probability unchanged") {
        DiscModel z = m;
        z.b.array() += 17.0;
        CHECK(predict_proba(z, d.pairs[1]) ==
              doctest::Approx(predict_proba(m, d.pairs[1])).epsilon(1e-9));
    }
}

TEST_CASE("representation is independent of the trained weights") {
    Dataset d = separable_toy();
    DiscHyper h1;
    h1.seed = 1;
    DiscHyper h2;
    h2.seed = 2;
    DiscModel m1 = train_disc(d, h1);
    DiscModel m2 = train_disc(d, h2);
    SparseVec a = representation(m1, d.pairs[0]);
    SparseVec b = representation(m2, d.pairs[0]);
    CHECK(Eigen::VectorXd(a) == Eigen::VectorXd(b));
}

TEST_CASE("seeded determinism is bit-exact") {
    Dataset d = separable_toy();
    DiscHyper hyper;
    hyper.seed = 77;
    DiscModel a = train_disc(d, hyper);
    DiscModel b = train_disc(d, hyper);
    CHECK(a.w == b.w);
    CHECK(a.b == b.b);
}

TEST_CASE("single-class data is a train error") {
    Dataset d;
    d.name = "one";
    d.pairs = {mk("a", {"x"}, {"y"}, 1), mk("b", {"y"}, {"x"}, 1)};
    CHECK_THROWS_AS(train_disc(d, DiscHyper{}), Error);
}

TEST_CASE("classifier serialization round-trips") {
    Dataset d = separable_toy();
    DiscModel m = train_disc(d, DiscHyper{});
    DiscModel back = disc_from_json(disc_to_json(m));
    CHECK(back.w == m.w);
    CHECK(back.b == m.b);
    CHECK(back.fmap.index == m.fmap.index);
    CHECK(predict_proba(back, d.pairs[2]) == predict_proba(m, d.pairs[2]));

    std::string bad = disc_to_json(m);
    bad.replace(bad.find("\"version\":1"), 11, "\"version\":9");
    try {
        disc_from_json(bad);
        FAIL("expected version error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::version);
    }
}
