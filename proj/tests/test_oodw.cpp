#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gapstat/errors.hpp"
#include "gapstat/oodw.hpp"

using namespace gapstat;

namespace {

SentencePair mk(const TokenSeq& s1, const TokenSeq& s2) {
    SentencePair p;
    static int n = 0;
    p.id = "w" + std::to_string(n++);
    p.s1 = s1;
    p.s2 = s2;
    return p;
}

ConditionalLM uniform_model() {
    // No counts at all: every add-k estimate is exactly 1/V.
    ConditionalLM lm;
    lm.order = 3;
    lm.role = LmRole::distribution;
    lm.smoothing = Smoothing::add_k(1.0);
    lm.vocab = {{kBos, 0}, {kEos, 1}, {kSep, 2}, {kUnk, 3}, {"a", 4}, {"b", 5}};
    return lm;
}

std::vector<double> sample_exp_weibull(const WeibullParams& p, std::size_t n,
                                       std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(1e-12, 1.0 - 1e-12);
    std::vector<double> xs;
    xs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = u(rng);
        xs.push_back(p.loc + p.scale * std::pow(-std::log(1.0 - std::pow(v, 1.0 / p.a)), 1.0 / p.c));
    }
    return xs;
}

}  // namespace

TEST_CASE("uniform model gives PP = V exactly") {
    ConditionalLM lm = uniform_model();
    SentencePair pair = mk({"a"}, {"b", "a"});
    CHECK(perplexity(lm, pair) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("exp-mean-log equals the n-th root of the probability product") {
    ConditionalLM lm = uniform_model();
    lm.counts[""].c = {{"a", 3}, {"b", 1}};
    lm.counts[""].total = 4;
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        TokenSeq s1, s2;
        for (int i = 0; i < 5; ++i) s1.push_back(rng() % 2 ? "a" : "b");
        for (int i = 0; i < 5; ++i) s2.push_back(rng() % 2 ? "a" : "b");
        SentencePair pair = mk(s1, s2);
        std::vector<double> lps = flattened_logprobs(lm, pair);
        double product = 1.0;
        for (double lp : lps) product *= std::exp(lp);
        double root = std::pow(1.0 / product, 1.0 / static_cast<double>(lps.size()));
        CHECK(perplexity(lm, pair) == doctest::Approx(root).epsilon(1e-9));
    }
}

TEST_CASE("a near-deterministic model has PP near 1 on its training sequence") {
    // P = 1 exactly is unreachable with positive k; huge counts and a tiny k
    // approximate the degenerate case.
    ConditionalLM lm;
    lm.order = 3;
    lm.role = LmRole::distribution;
    lm.smoothing = Smoothing::add_k(1e-12);
    lm.vocab = {{kBos, 0}, {kEos, 1}, {kSep, 2}, {kUnk, 3}, {"a", 4}, {"b", 5}};
    const std::uint64_t big = 1'000'000'000ull;
    auto put = [&](const std::string& ctx, const std::string& tok) {
        lm.counts[ctx].c[tok] = big;
        lm.counts[ctx].total = big;
    };
    const char us = '\x1f';
    put(kBos, "a");
    put(std::string(kBos) + us + "a", kSep);
    put(std::string("a") + us + kSep, "b");
    put(std::string(kSep) + us + "b", kEos);
    SentencePair pair = mk({"a"}, {"b"});
    CHECK(perplexity(lm, pair) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("nll relates to perplexity by NLL = n log PP") {
    ConditionalLM lm = uniform_model();
    SentencePair pair = mk({"a", "b"}, {"b"});
    double n = static_cast<double>(pair.s1.size() + pair.s2.size() + 2);
    CHECK(nll(lm, pair) == doctest::Approx(n * std::log(perplexity(lm, pair))).epsilon(1e-9));
    // uniform closed form
    CHECK(nll(lm, pair) == doctest::Approx(n * std::log(6.0)).epsilon(1e-9));
}

TEST_CASE("longer pair with identical statistics grows NLL but not PP") {
    ConditionalLM lm = uniform_model();
    SentencePair small = mk({"a"}, {"b"});
    SentencePair big = mk({"a", "a", "a"}, {"b", "b", "b"});
    CHECK(perplexity(lm, small) == doctest::Approx(perplexity(lm, big)).epsilon(1e-12));
    CHECK(nll(lm, big) > nll(lm, small));
}

TEST_CASE("perplexity requires the distribution role") {
    ConditionalLM lm = uniform_model();
    lm.role = LmRole::positive;
    CHECK_THROWS_AS(perplexity(lm, mk({"a"}, {"b"})), Error);
}

TEST_CASE("weibull cdf closed forms") {
    SUBCASE("x at loc is 0") {
        WeibullParams p{2.0, 1.3, 5.0, 2.0};
        CHECK(weibull_cdf(p, 5.0) == 0.0);
        CHECK(weibull_cdf(p, 4.0) == 0.0);
    }
    SUBCASE("a = c = 1 is the exponential distribution") {
        WeibullParams p{1.0, 1.0, 0.0, 1.0};
        CHECK(weibull_cdf(p, std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("nondecreasing in x for random parameters") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(0.1, 3.0);
        for (int i = 0; i < 1000; ++i) {
            WeibullParams p{u(rng), u(rng), u(rng) - 1.5, u(rng)};
            double x1 = p.loc + u(rng);
            double x2 = x1 + u(rng);
            CHECK(weibull_cdf(p, x2) >= weibull_cdf(p, x1));
        }
    }
    SUBCASE("cdf approaches 1 in the upper tail") {
        WeibullParams p{1.7, 2.2, 1.0, 3.0};
        CHECK(weibull_cdf(p, 1e6) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("weibull fit recovers synthetic parameters") {
    WeibullParams truth{1.0, 2.0, 0.0, 3.0};
    std::vector<double> xs = sample_exp_weibull(truth, 5000, 1234);
    WeibullParams fit = fit_weibull(xs);
    CHECK(fit.c > 1.7);
    CHECK(fit.c < 2.3);
    CHECK(fit.scale > 2.6);
    CHECK(fit.scale < 3.4);

    // Optimizer never ends below its starting point.
    double sd = 0.0, m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    for (double x : xs) sd += (x - m) * (x - m);
    sd = std::sqrt(sd / static_cast<double>(xs.size()));
    WeibullParams init{1.0, 1.5, fit.loc, sd};
    CHECK(weibull_loglik(fit, xs) >= weibull_loglik(init, xs));
}

TEST_CASE("weibull fit input contracts") {
    std::vector<double> few(10, 1.0);
    CHECK_THROWS_AS(fit_weibull(few), Error);
    std::vector<double> flat(50, 2.5);
    CHECK_THROWS_AS(fit_weibull(flat), Error);
    std::vector<double> bad(50, 1.0);
    for (std::size_t i = 0; i < bad.size(); ++i) bad[i] = static_cast<double>(i);
    bad[7] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(fit_weibull(bad), Error);
}

TEST_CASE("lambda boundaries and monotonicity") {
    WeibullParams truth{1.0, 1.8, 0.0, 2.0};
    std::vector<double> xs = sample_exp_weibull(truth, 1000, 77);
    OodCalibrator cal = fit_calibrator(xs, SourceMetric::perplexity);

    SUBCASE("metric at loc gives lambda 0") {
        CHECK(lambda_from_value(cal, cal.params.loc) == 0.0);
    }
    SUBCASE("beyond every calibration sample, lambda at least matches the max sample's cdf") {
        double mx = *std::max_element(xs.begin(), xs.end());
        double lam = lambda_from_value(cal, mx + 1.0);
        CHECK(lam >= lambda_from_value(cal, mx));
        CHECK(lam > 0.9);
    }
    SUBCASE("median sample maps near the empirical half point") {
        std::vector<double> sorted = xs;
        std::sort(sorted.begin(), sorted.end());
        double median = sorted[sorted.size() / 2];
        CHECK(lambda_from_value(cal, median) == doctest::Approx(0.5).epsilon(0.3));
    }
    SUBCASE("lambda is nondecreasing in the metric") {
        double prev = 0.0;
        for (double x = 0.0; x < 12.0; x += 0.25) {
            double lam = lambda_from_value(cal, x);
            CHECK(lam >= prev - 1e-15);
            CHECK(lam >= 0.0);
            CHECK(lam <= 1.0);
            prev = lam;
        }
    }
}

TEST_CASE("unfitted calibrator is a state error") {
    OodCalibrator cal;
    CHECK_THROWS_AS(lambda_from_value(cal, 1.0), Error);
}

TEST_CASE("calibrator serialization round-trips and rejects unknown versions") {
    WeibullParams truth{1.0, 1.8, 0.2, 2.0};
    std::vector<double> xs = sample_exp_weibull(truth, 500, 5);
    OodCalibrator cal = fit_calibrator(xs, SourceMetric::neg_log_likelihood);
    OodCalibrator back = calibrator_from_json(calibrator_to_json(cal));
    CHECK(back.params.a == cal.params.a);
    CHECK(back.params.c == cal.params.c);
    CHECK(back.params.loc == cal.params.loc);
    CHECK(back.params.scale == cal.params.scale);
    CHECK(back.source_metric == cal.source_metric);
    CHECK(back.fit_sample_count == cal.fit_sample_count);

    std::string bad = calibrator_to_json(cal);
    bad.replace(bad.find("\"version\":1"), 11, "\"version\":9");
    try {
        calibrator_from_json(bad);
        FAIL("expected version error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::version);
    }
}
