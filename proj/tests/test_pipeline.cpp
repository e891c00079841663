#include <doctest.h>

#include <filesystem>

#include "gapstat/errors.hpp"
#include "gapstat/pipeline.hpp"
#include "gapstat/synth.hpp"

using namespace gapstat;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    Dataset train, dev, test;
    Artifacts artifacts;
    TrainOptions opts;

    Fixture() {
        Dataset d = synth_generate({NegStrategy::topic_shuffle, 600, 160}, 17);
        auto parts = split(d, 4, {0.6, 0.2, 0.2});
        train = parts[0];
        dev = parts[1];
        test = parts[2];
        opts.seed = 9;
        artifacts = train_artifacts(train, dev, opts);
    }
};

}  // namespace

TEST_CASE("train_artifacts produces the full bundle") {
    Fixture f;
    CHECK(f.artifacts.pos.has_value());
    CHECK(f.artifacts.neg.has_value());
    CHECK(f.artifacts.dist.has_value());
    CHECK(f.artifacts.cal.has_value());
    CHECK(f.artifacts.disc.has_value());
    CHECK(f.artifacts.pos->role == LmRole::positive);
    CHECK(f.artifacts.neg->role == LmRole::negative);
    CHECK(f.artifacts.dist->role == LmRole::distribution);
}

TEST_CASE("imbalance warning fires above five percent") {
    Dataset d = synth_generate({NegStrategy::topic_shuffle, 400, 160}, 3);
    // drop a third of the negatives
    Dataset skewed;
    skewed.name = "skewed";
    int dropped = 0;
    for (const auto& p : d.pairs) {
        if (*p.label == 0 && dropped < 60) {
            ++dropped;
            continue;
        }
        skewed.pairs.push_back(p);
    }
    auto parts = split(skewed, 1, {0.7, 0.2, 0.1});
    TrainSummary summary;
    TrainOptions opts;
    train_artifacts(parts[0], parts[1], opts, &summary);
    CHECK(summary.imbalance_warning);
}

TEST_CASE("artifact save/load round-trip with per-predictor laziness") {
    Fixture f;
    fs::path dir = fs::temp_directory_path() / "gapstat_artifacts_test";
    fs::remove_all(dir);
    save_artifacts(f.artifacts, dir.string(), f.opts, "train");

    for (const char* file : {"positive.lm.json", "negative.lm.json", "distribution.lm.json",
                             "calibrator.json", "disc.json", "manifest.json"})
        CHECK(fs::exists(dir / file));

    // OODP must work without the negative model file.
    fs::remove(dir / "negative.lm.json");
    Artifacts oodp_a = load_artifacts(dir.string(), Predictor::oodp);
    PredictOptions opts;
    opts.predictor = Predictor::oodp;
    std::vector<PredictorOutput> outs = predict_pairs(oodp_a, f.test, opts);
    CHECK(outs.size() == f.test.size());
    CHECK_THROWS_AS(load_artifacts(dir.string(), Predictor::idp), Error);
    fs::remove_all(dir);
}

TEST_CASE("predictor output schema per predictor") {
    Fixture f;
    Dataset small;
    small.name = "small";
    small.pairs.assign(f.test.pairs.begin(), f.test.pairs.begin() + 10);

    PredictOptions opts;
    opts.predictor = Predictor::idp;
    for (const auto& o : predict_pairs(f.artifacts, small, opts)) {
        CHECK_FALSE(o.s_star.has_value());
        CHECK(o.pp > 0.0);
        CHECK(o.lambda >= 0.0);
        CHECK(o.lambda <= 1.0);
    }
    opts.predictor = Predictor::gapx;
    for (const auto& o : predict_pairs(f.artifacts, small, opts)) {
        CHECK(o.s_star.has_value());
        CHECK(o.predicted == (*o.s_star >= 0.0 ? 1 : 0));
    }
}

TEST_CASE("forcing lambda to zero collapses gap onto idp") {
    Fixture f;
    Dataset small;
    small.name = "small";
    small.pairs.assign(f.test.pairs.begin(), f.test.pairs.begin() + 25);

    PredictOptions idp;
    idp.predictor = Predictor::idp;
    PredictOptions gap0;
    gap0.predictor = Predictor::gap;
    gap0.lambda_override = [](const SentencePair&) { return 0.0; };

    auto a = predict_pairs(f.artifacts, small, idp);
    auto b = predict_pairs(f.artifacts, small, gap0);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].s == doctest::Approx(b[i].s).epsilon(1e-12));
        CHECK(a[i].predicted == b[i].predicted);
    }
}

TEST_CASE("attribution emission follows the predictor") {
    Fixture f;
    Dataset one;
    one.name = "one";
    one.pairs = {f.test.pairs[0]};
    PredictOptions opts;
    opts.predictor = Predictor::gap;
    opts.attributions = true;
    auto outs = predict_pairs(f.artifacts, one, opts);
    REQUIRE(outs.size() == 1);
    REQUIRE(outs[0].per_token.has_value());
    CHECK(outs[0].per_token->size() == one.pairs[0].s2.size() + 1);
}

TEST_CASE("c evaluator sweeps run the real gap pipeline") {
    Fixture f;
    GapConfig base;
    auto eval_c = make_c_evaluator(f.artifacts, f.dev, ScoreConventions{}, base);
    double f1_small = eval_c(1.0);
    double f1_large = eval_c(5.0);
    CHECK(f1_small >= 0.0);
    CHECK(f1_small <= 1.0);
    CHECK(f1_large >= 0.0);
    CHECK(f1_large <= 1.0);
    double chosen = choose_c_on_dev(default_c_candidates(), eval_c);
    CHECK(chosen >= 1.0);
    CHECK(chosen <= 5.0);
}
