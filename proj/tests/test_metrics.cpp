#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "survkit/error.hpp"
#include "survkit/metrics.hpp"
#include "survkit/report.hpp"

using namespace survkit;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Usage;
}

struct Sample {
    std::vector<double> score;
    Events event;
    std::vector<double> time;
};

// Small integer grids so both times and scores tie often.
Sample tied_sample(std::mt19937_64& rng, std::size_t n) {
    Sample s;
    for (std::size_t i = 0; i < n; ++i) {
        s.score.push_back(static_cast<double>(rng() % 5));
        s.time.push_back(static_cast<double>(1 + rng() % 8));
        s.event.push_back(rng() % 3 != 0);
    }
    s.event[0] = 1;
    s.time[0] = 1.0;
    s.time[1 % n] = 9.0;
    return s;
}

MetricOptions at(std::vector<double> times, std::optional<std::size_t> b = 0) {
    MetricOptions o;
    o.new_time = std::move(times);
    o.bootstrap = b;
    return o;
}

MetricResult with_se(const char* metric, double estimate, double se) {
    MetricResult r;
    r.metric = metric;
    r.estimate = estimate;
    r.se = se;
    return r;
}

}  // namespace

TEST_CASE("AUC fixtures") {
    Events e{1, 1, 0, 0, 0};
    std::vector<double> t{1, 2, 3, 4, 5};
    auto r = auc(RiskScores::independent(std::vector<double>{5, 3, 4, 2, 1}), e, t, at({2.5}));
    CHECK(r.estimate == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    REQUIRE(r.per_time.size() == 1);
    CHECK(r.times == std::vector<double>{2.5});

    CHECK(auc(RiskScores::independent(std::vector<double>{9, 8, 3, 2, 1}), e, t, at({2.5})).estimate == 1.0);
    CHECK(auc(RiskScores::independent(std::vector<double>(5, 0.7)), e, t, at({2.5})).estimate == 0.5);
}

TEST_CASE("AUC errors") {
    Events e{1, 1, 0, 0, 0};
    std::vector<double> t{1, 2, 3, 4, 5};
    auto s = RiskScores::independent(std::vector<double>{5, 3, 4, 2, 1});
    CHECK(code_of([&] { auc(s, e, t, at({0.5})); }) == ErrorCode::NoCases);
    CHECK(code_of([&] { auc(s, e, t, at({5.0})); }) == ErrorCode::NoControls);
    CHECK(code_of([&] { auc(RiskScores::dependent(Matrix(5, 2)), e, t, at({})); }) == ErrorCode::ShapeMismatch);
    CHECK(code_of([&] { auc(RiskScores::dependent(Matrix(5, 2)), e, t, at({1.5})); }) == ErrorCode::ShapeMismatch);
    CHECK(code_of([&] { auc(s, e, t, at({2.0, 1.5})); }) != ErrorCode::Usage);
}

TEST_CASE("C-index fixtures") {
    Events e{1, 0, 1, 0};
    std::vector<double> t{2, 3, 1, 5};
    auto r = concordance_index(RiskScores::independent(std::vector<double>{0.3, 0.1, 0.9, 0.2}), e, t);
    CHECK(r.estimate == 1.0);
    REQUIRE(r.se);
    CHECK(*r.se >= 0.0);

    Events all(6, 1);
    std::vector<double> t6{1, 2, 3, 4, 5, 6}, neg{-1, -2, -3, -4, -5, -6};
    CHECK(concordance_index(RiskScores::independent(neg), all, t6).estimate == 1.0);
    CHECK(concordance_index(RiskScores::independent(std::vector<double>(6, 1.0)), Events{1, 0, 1, 1, 0, 1}, t6)
              .estimate == 0.5);

    CHECK(code_of([&] {
              concordance_index(RiskScores::independent(std::vector<double>{1, 2}), Events{0, 0},
                                std::vector<double>{1, 2});
          }) == ErrorCode::NoComparablePairs);
}

TEST_CASE("C-index and AUC match brute-force enumeration with ties") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        auto s = tied_sample(rng, 2 + rng() % 49);
        auto scores = RiskScores::independent(s.score);
        CHECK(std::abs(concordance_index(scores, s.event, s.time).estimate - oracle::cindex(s.score, s.event, s.time)) <
              1e-12);
        auto times = default_evaluation_times(s.event, s.time);
        if (times.empty()) continue;
        auto r = auc(scores, s.event, s.time, at(times));
        REQUIRE(r.per_time.size() == times.size());
        for (std::size_t k = 0; k < times.size(); ++k)
            CHECK(std::abs(r.per_time[k] - oracle::auc(s.score, s.event, s.time, times[k])) < 1e-12);
    }
}

TEST_CASE("weighted C-index and SE match the weighted enumeration") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        auto s = tied_sample(rng, 3 + rng() % 40);
        const std::size_t n = s.score.size();
        auto plain = [&](std::size_t i, std::size_t j) { return std::pair{s.score[i], s.score[j]}; };
        auto scores = RiskScores::independent(s.score);

        auto unweighted = oracle::weighted_cindex(plain, s.event, s.time, std::vector<double>(n, 1.0));
        auto r0 = concordance_index(scores, s.event, s.time);
        CHECK(std::abs(r0.estimate - unweighted.c) < 1e-12);
        CHECK(std::abs(*r0.se - unweighted.se) < 1e-12);

        auto g = censoring_distribution(s.event, s.time);
        std::vector<double> pw(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double gi = g.left_limit(s.time[i]);
            pw[i] = gi > 0 ? 1.0 / (gi * gi) : 0.0;
        }
        MetricOptions ipcw;
        ipcw.weighting = Weighting::ipcw();
        try {
            auto r1 = concordance_index(scores, s.event, s.time, ipcw);
            auto want = oracle::weighted_cindex(plain, s.event, s.time, pw);
            CHECK(std::abs(r1.estimate - want.c) < 1e-12);
            CHECK(std::abs(*r1.se - want.se) < 1e-12);
            CHECK(r1.weighting == "ipcw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DegenerateCensoring);
        }

        std::vector<double> w(n);
        for (auto& v : w) v = 0.5 + static_cast<double>(rng() % 4);
        MetricOptions custom;
        custom.weighting = Weighting::with(w);
        std::vector<double> w2(n);
        for (std::size_t i = 0; i < n; ++i) w2[i] = w[i] * w[i];
        auto r2 = concordance_index(scores, s.event, s.time, custom);
        auto want2 = oracle::weighted_cindex(plain, s.event, s.time, w2);
        CHECK(std::abs(r2.estimate - want2.c) < 1e-12);
        CHECK(std::abs(*r2.se - want2.se) < 1e-12);
    }
}

TEST_CASE("time-dependent C-index compares in the case's column") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        auto s = tied_sample(rng, 3 + rng() % 20);
        const std::size_t n = s.score.size();
        Matrix m(n, n);
        for (auto& v : m.flat()) v = static_cast<double>(rng() % 4);
        auto r = concordance_index(RiskScores::dependent(m), s.event, s.time);
        auto want = oracle::weighted_cindex([&](std::size_t i, std::size_t j) { return std::pair{m(i, i), m(j, i)}; },
                                            s.event, s.time, std::vector<double>(n, 1.0));
        CHECK(std::abs(r.estimate - want.c) < 1e-12);
        CHECK(std::abs(*r.se - want.se) < 1e-12);
    }
    CHECK(code_of([] {
              concordance_index(RiskScores::dependent(Matrix(3, 2)), Events{1, 1, 1}, std::vector<double>{1, 2, 3});
          }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("weighted and time-dependent AUC match enumeration") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        auto s = tied_sample(rng, 3 + rng() % 40);
        const std::size_t n = s.score.size();
        auto times = default_evaluation_times(s.event, s.time);
        if (times.empty()) continue;

        std::vector<double> w(n);
        for (auto& v : w) v = 0.25 + static_cast<double>(rng() % 5);
        MetricOptions custom = at(times);
        custom.weighting = Weighting::with(w);
        auto r = auc(RiskScores::independent(s.score), s.event, s.time, custom);
        for (std::size_t k = 0; k < times.size(); ++k)
            CHECK(std::abs(r.per_time[k] - oracle::weighted_auc(s.score, s.event, s.time, w, times[k])) < 1e-12);

        MetricOptions ipcw = at(times);
        ipcw.weighting = Weighting::ipcw();
        auto g = censoring_distribution(s.event, s.time);
        try {
            auto ri = auc(RiskScores::independent(s.score), s.event, s.time, ipcw);
            for (std::size_t k = 0; k < times.size(); ++k) {
                auto wk = ipcw_weights(g, s.event, s.time, times[k]).weights;
                CHECK(std::abs(ri.per_time[k] - oracle::weighted_auc(s.score, s.event, s.time, wk, times[k])) < 1e-12);
            }
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DegenerateCensoring);
        }

        Matrix m(n, times.size());
        for (auto& v : m.flat()) v = static_cast<double>(rng() % 4);
        auto rd = auc(RiskScores::dependent(m), s.event, s.time, at(times));
        for (std::size_t k = 0; k < times.size(); ++k)
            CHECK(std::abs(rd.per_time[k] - oracle::auc(m.col(k), s.event, s.time, times[k])) < 1e-12);
    }
}

TEST_CASE("AUC summary over several times is the normalized trapezoid") {
    std::mt19937_64 rng(10);
    auto s = tied_sample(rng, 40);
    auto times = default_evaluation_times(s.event, s.time);
    REQUIRE(times.size() >= 2);
    auto r = auc(RiskScores::independent(s.score), s.event, s.time, at(times));
    CHECK(r.estimate == doctest::Approx(trapezoid_mean(r.times, r.per_time)).epsilon(1e-15));
}

TEST_CASE("rank metrics are invariant to increasing transforms") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        auto s = tied_sample(rng, 5 + rng() % 40);
        std::vector<double> moved;
        for (double v : s.score) moved.push_back(std::exp(v) * 3.0 - 7.0);
        CHECK(concordance_index(RiskScores::independent(s.score), s.event, s.time).estimate ==
              concordance_index(RiskScores::independent(moved), s.event, s.time).estimate);
        auto times = default_evaluation_times(s.event, s.time);
        if (times.empty()) continue;
        CHECK(auc(RiskScores::independent(s.score), s.event, s.time, at(times)).per_time ==
              auc(RiskScores::independent(moved), s.event, s.time, at(times)).per_time);
    }
}

TEST_CASE("single-time AUC equals the rank-sum AUC") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 10 + rng() % 40;
        Events e(n, 1);
        std::vector<double> t, s;
        for (std::size_t i = 0; i < n; ++i) {
            t.push_back(static_cast<double>(i + 1));
            s.push_back(std::round(z(rng) * 2.0));
        }
        const std::size_t k = 1 + rng() % (n - 1);
        const double horizon = static_cast<double>(k) + 0.5;
        std::vector<double> cases(s.begin(), s.begin() + k), controls(s.begin() + k, s.end());
        auto r = auc(RiskScores::independent(s), e, t, at({horizon}));
        CHECK(std::abs(r.estimate - oracle::rank_sum_auc(cases, controls)) < 1e-12);
    }
}

TEST_CASE("Brier fixtures") {
    Events e{1, 1, 1};
    std::vector<double> t{1, 2, 3};
    auto bs = [&](Matrix m, std::vector<double> times) {
        return brier(SurvivalProbabilities{std::move(m)}, e, t, at(std::move(times))).estimate;
    };
    CHECK(bs(Matrix{{0.2}, {0.7}, {0.9}}, {1.5}) == doctest::Approx((0.04 + 0.09 + 0.01) / 3.0).epsilon(1e-14));
    CHECK(bs(Matrix{{0.0}, {1.0}, {1.0}}, {1.5}) == 0.0);
    CHECK(bs(Matrix{{0.5}, {0.5}, {0.5}}, {1.5}) == 0.25);

    CHECK(code_of([&] { bs(Matrix(3, 2), {1.5}); }) == ErrorCode::ShapeMismatch);
    CHECK(code_of([&] { brier(SurvivalProbabilities{Matrix(3, 1)}, e, t, {}); }) != ErrorCode::Usage);
}

TEST_CASE("Brier with hard predictions is the misclassification rate") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng() % 40;
        Events e(n, 1);
        std::vector<double> t;
        Matrix s(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            t.push_back(static_cast<double>(1 + rng() % 10));
            s(i, 0) = static_cast<double>(rng() % 2);
        }
        const double horizon = 5.5;
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < n; ++i) wrong += (t[i] > horizon) != (s(i, 0) == 1.0);
        CHECK(brier(SurvivalProbabilities{s}, e, t, at({horizon})).estimate ==
              doctest::Approx(static_cast<double>(wrong) / n).epsilon(1e-14));
    }
}

TEST_CASE("IPCW Brier matches the weighted formula") {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        auto s = tied_sample(rng, 5 + rng() % 30);
        const std::size_t n = s.score.size();
        std::vector<double> times{2.5, 4.5};
        Matrix surv(n, 2);
        for (std::size_t i = 0; i < n; ++i) {
            surv(i, 0) = u(rng);
            surv(i, 1) = surv(i, 0) * u(rng);
        }
        MetricOptions o = at(times);
        o.weighting = Weighting::ipcw();
        auto g = censoring_distribution(s.event, s.time);
        try {
            auto r = brier(SurvivalProbabilities{surv}, s.event, s.time, o);
            for (std::size_t k = 0; k < 2; ++k) {
                auto w = ipcw_weights(g, s.event, s.time, times[k]).weights;
                CHECK(std::abs(r.per_time[k] - oracle::brier_at(surv.col(k), s.event, s.time, w, times[k])) < 1e-12);
            }
            CHECK(r.estimate == doctest::Approx(brier_integral(r)));
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DegenerateCensoring);
        }
    }
}

TEST_CASE("integrated Brier score") {
    std::vector<double> t{1, 2, 3};
    CHECK(trapezoid_mean(t, std::vector<double>{0.1, 0.3, 0.2}) == doctest::Approx(0.225).epsilon(1e-14));
    CHECK(trapezoid_mean(t, std::vector<double>{0.4, 0.4, 0.4}) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(trapezoid_mean(std::vector<double>{0, 1}, std::vector<double>{0.0, 0.5}) == 0.25);
    MetricResult r;
    r.times = {2.0};
    r.per_time = {0.1};
    CHECK(code_of([&] { brier_integral(r); }) == ErrorCode::TooFewTimes);
}

TEST_CASE("confidence intervals") {
    auto [lo, hi] = confidence_interval(with_se("cindex", 0.8, 0.05));
    CHECK(lo == doctest::Approx(0.702).epsilon(1e-4));
    CHECK(hi == doctest::Approx(0.898).epsilon(1e-4));
    CHECK(lo == doctest::Approx(0.8 - 1.959964 * 0.05).epsilon(1e-9));

    auto zero = confidence_interval(with_se("cindex", 0.8, 0.0));
    CHECK(zero.first == 0.8);
    CHECK(zero.second == 0.8);
    auto one = confidence_interval(with_se("cindex", 0.8, 0.05), 1.0);
    CHECK(one.first == 0.8);
    CHECK(one.second == 0.8);

    auto clamp = confidence_interval(with_se("cindex", 0.98, 0.05));
    CHECK(clamp.second == 1.0);

    MetricResult bare;
    bare.metric = "auc";
    bare.estimate = 0.7;
    CHECK(code_of([&] { confidence_interval(bare); }) == ErrorCode::MissingVariance);
}

TEST_CASE("percentile bootstrap is reproducible and brackets the estimate") {
    std::mt19937_64 rng(15);
    auto s = tied_sample(rng, 60);
    auto run = [&](std::uint64_t seed) {
        MetricOptions o = at({4.5}, 200);
        o.seed = seed;
        return auc(RiskScores::independent(s.score), s.event, s.time, o);
    };
    auto a = run(3), b = run(3), c = run(4);
    CHECK(a.replicates.size() == 200);
    CHECK(a.bootstrap == 200);
    for (std::size_t k = 0; k < a.replicates.size(); ++k) {
        CHECK(std::bit_cast<std::uint64_t>(a.replicates[k]) == std::bit_cast<std::uint64_t>(b.replicates[k]));
    }
    CHECK(a.replicates != c.replicates);
    auto [lo, hi] = confidence_interval(a);
    CHECK(lo <= a.estimate);
    CHECK(a.estimate <= hi);
    CHECK(lo >= 0.0);
    CHECK(hi <= 1.0);
    CHECK(confidence_interval(a) == confidence_interval(b));
}

TEST_CASE("p-values") {
    CHECK(p_value(with_se("cindex", 0.5, 0.1)) == 0.5);
    CHECK(p_value(with_se("cindex", 0.5 + 1.644854 * 0.1, 0.1)) == doctest::Approx(0.05).epsilon(1e-6));
    CHECK(p_value(with_se("cindex", 0.5 + 1.959964 * 0.1, 0.1), Alternative::TwoSided) ==
          doctest::Approx(0.05).epsilon(1e-6));
    CHECK(p_value(with_se("cindex", 0.5 - 1.959964 * 0.1, 0.1), Alternative::TwoSided) ==
          doctest::Approx(0.05).epsilon(1e-6));
    CHECK(p_value(with_se("cindex", 0.5 - 1.644854 * 0.1, 0.1), Alternative::Less) ==
          doctest::Approx(0.05).epsilon(1e-6));
    CHECK(code_of([] { p_value(with_se("cindex", 0.7, 0.0)); }) == ErrorCode::ZeroVariance);
    MetricResult bare;
    bare.estimate = 0.7;
    CHECK(code_of([&] { p_value(bare); }) == ErrorCode::MissingVariance);

    CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(normal_cdf(0.0) == 0.5);
    for (auto a : {Alternative::TwoSided, Alternative::Greater, Alternative::Less})
        CHECK(parse_alternative(to_string(a)) == a);
}

TEST_CASE("paired comparison") {
    std::mt19937_64 rng(16);
    std::normal_distribution<double> z;
    const std::size_t n = 150;
    Events e;
    std::vector<double> t, good, noise;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = z(rng);
        t.push_back(std::exp(-x) * (0.5 + static_cast<double>(rng() % 100) / 100.0));
        e.push_back(rng() % 5 != 0);
        good.push_back(x);
        noise.push_back(z(rng));
    }
    const double horizon = 1.0;
    MetricOptions o = at({horizon}, 1000);
    o.seed = 42;
    auto a = auc(RiskScores::independent(good), e, t, o);
    auto b = auc(RiskScores::independent(noise), e, t, o);
    CHECK(compare(a, a) == 0.5);
    auto cmp = compare_detailed(a, b);
    CHECK(cmp.difference > 0.0);
    CHECK(cmp.pairs == 1000);
    CHECK(cmp.p_value < 0.05);
    CHECK(compare(b, a) > 0.95);

    MetricOptions o2 = o;
    o2.seed = 43;
    CHECK(code_of([&] { compare(a, auc(RiskScores::independent(noise), e, t, o2)); }) == ErrorCode::UnpairedInputs);
    std::vector<double> fewer_t(t.begin(), t.end() - 1), fewer_s(noise.begin(), noise.end() - 1);
    Events fewer_e(e.begin(), e.end() - 1);
    CHECK(code_of([&] { compare(a, auc(RiskScores::independent(fewer_s), fewer_e, fewer_t, o)); }) ==
          ErrorCode::UnpairedInputs);
    auto c = concordance_index(RiskScores::independent(good), e, t);
    CHECK(code_of([&] { compare(a, c); }) == ErrorCode::UnpairedInputs);
}

TEST_CASE("result metadata") {
    Events e{1, 1, 0, 1, 0};
    std::vector<double> t{1, 2, 2, 3, 4};
    auto r = concordance_index(RiskScores::independent(std::vector<double>{1, 1, 2, 3, 4}), e, t);
    CHECK(r.metric == "cindex");
    CHECK(r.n == 5);
    CHECK(r.tied_times == 2);
    CHECK(r.tied_scores == 2);
    CHECK(r.weighting == "uniform");
    CHECK(default_evaluation_times(e, t) == std::vector<double>{1, 2, 3});
}

TEST_CASE("metric report layout") {
    Events e{1, 1, 0, 0, 0};
    std::vector<double> t{1, 2, 3, 4, 5};
    auto r = auc(RiskScores::independent(std::vector<double>{5, 3, 4, 2, 1}), e, t, at({2.5}));
    auto j = metric_report(r);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"metric", "estimate", "se", "ci", "alpha", "p_value", "alternative", "times",
                                           "per_time", "weighting", "B", "seed"});
    CHECK(j["se"].is_null());
    CHECK(j["p_value"].is_null());
    CHECK(j["ci"][0].is_null());
    CHECK(j["B"] == 0);

    auto c = metric_report(concordance_index(RiskScores::independent(std::vector<double>{5, 3, 4, 2, 1}), e, t),
                           ReportOptions{.alpha = 0.1, .alternative = Alternative::TwoSided});
    CHECK(c["ci"][0].get<double>() <= c["estimate"].get<double>());
    CHECK(c["alternative"] == "two_sided");
    CHECK(c["p_value"].is_number());
}
