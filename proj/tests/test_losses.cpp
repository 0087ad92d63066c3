#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "survkit/error.hpp"
#include "survkit/losses.hpp"

using namespace survkit;

namespace {

double cox(const std::vector<double>& eta, const Events& e, const std::vector<double>& t, TieMethod m,
           Reduction r = Reduction::Sum) {
    Tape tape;
    return cox_neg_partial_log_likelihood(tape.leaf(Matrix::column(eta)), e, t, m, r).item();
}

double weibull(const Matrix& params, const Events& e, const std::vector<double>& t, Reduction r = Reduction::Sum) {
    Tape tape;
    return weibull_neg_log_likelihood(tape.leaf(params), e, t, r).item();
}

struct RandomSurvival {
    std::vector<double> eta;
    Events event;
    std::vector<double> time;
};

RandomSurvival make_random(std::mt19937_64& rng, std::size_t n, bool ties, double eta_range = 3.0) {
    std::uniform_real_distribution<double> u(-eta_range, eta_range);
    std::exponential_distribution<double> ex(1.0);
    RandomSurvival d;
    for (std::size_t i = 0; i < n; ++i) {
        d.eta.push_back(u(rng));
        d.event.push_back(rng() % 3 != 0);
        d.time.push_back(ties ? 0.5 * static_cast<double>(1 + rng() % 6) : ex(rng) + 1e-6);
    }
    d.event[0] = 1;
    return d;
}

}  // namespace

TEST_CASE("Cox hand fixtures") {
    CHECK(cox({0.0}, {1}, {1.0}, TieMethod::Breslow) == 0.0);
    CHECK(cox({0.0}, {1}, {1.0}, TieMethod::Efron) == 0.0);
    CHECK(std::abs(cox({0.0, 0.0}, {1, 1}, {1.0, 2.0}, TieMethod::Breslow) - std::log(2.0)) < 1e-12);
    CHECK(std::abs(cox({0.0, 0.0}, {1, 1}, {1.0, 1.0}, TieMethod::Breslow) - 2.0 * std::log(2.0)) < 1e-12);
    CHECK(std::abs(cox({0.0, 0.0}, {1, 1}, {1.0, 1.0}, TieMethod::Efron) - std::log(2.0)) < 1e-12);
}

TEST_CASE("Cox matches the direct definition") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const bool ties = trial % 2 == 0;
        auto d = make_random(rng, 1 + rng() % 40, ties);
        for (auto m : {TieMethod::Breslow, TieMethod::Efron}) {
            const double got = cox(d.eta, d.event, d.time, m);
            const double want = oracle::cox_nll(d.eta, d.event, d.time, m == TieMethod::Efron);
            CHECK(std::abs(got - want) < 1e-10 * std::max(1.0, std::abs(want)));
        }
    }
}

TEST_CASE("Cox mean reduction divides by the event count") {
    Events e{1, 0, 1, 1};
    std::vector<double> t{1.0, 2.0, 2.0, 3.0}, eta{0.3, -0.2, 1.0, 0.1};
    CHECK(cox(eta, e, t, TieMethod::Efron, Reduction::Mean) ==
          doctest::Approx(cox(eta, e, t, TieMethod::Efron) / 3.0).epsilon(1e-14));
}

TEST_CASE("Breslow equals Efron without tied event times") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        auto d = make_random(rng, 1 + rng() % 100, false);
        CHECK(std::abs(cox(d.eta, d.event, d.time, TieMethod::Breslow) - cox(d.eta, d.event, d.time, TieMethod::Efron)) <
              1e-10);
    }
}

TEST_CASE("Cox is invariant to a shared shift of eta") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> shift(-20.0, 20.0);
    for (int trial = 0; trial < 50; ++trial) {
        auto d = make_random(rng, 2 + rng() % 30, trial % 2 == 0);
        auto moved = d.eta;
        const double c = shift(rng);
        for (auto& v : moved) v += c;
        for (auto m : {TieMethod::Breslow, TieMethod::Efron})
            CHECK(std::abs(cox(d.eta, d.event, d.time, m) - cox(moved, d.event, d.time, m)) < 1e-10);
    }
}

TEST_CASE("Cox gradient matches finite differences") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        auto d = make_random(rng, 2 + rng() % 12, trial % 2 == 0);
        for (auto m : {TieMethod::Breslow, TieMethod::Efron}) {
            Tape tape;
            Var eta = tape.leaf(Matrix::column(d.eta));
            tape.backward(cox_neg_partial_log_likelihood(eta, d.event, d.time, m, Reduction::Mean));
            auto fd = oracle::fd_gradient(
                [&](const std::vector<double>& v) { return cox(v, d.event, d.time, m, Reduction::Mean); }, d.eta);
            for (std::size_t i = 0; i < fd.size(); ++i) CHECK(oracle::rel_err(eta.adjoint()[i], fd[i]) < 1e-4);
        }
    }
}

TEST_CASE("Cox errors") {
    Tape tape;
    auto code = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Usage;
    };
    std::vector<double> t{1.0, 2.0};
    CHECK(code([&] { cox_neg_partial_log_likelihood(tape.leaf(Matrix{{0.0}, {0.0}}), Events{0, 0}, t); }) ==
          ErrorCode::NoEvents);
    CHECK(code([&] { cox_neg_partial_log_likelihood(tape.leaf(Matrix{{0.0}}), Events{1, 0}, t); }) ==
          ErrorCode::LengthMismatch);
    CHECK(code([&] { cox_neg_partial_log_likelihood(tape.leaf(Matrix{{0.0, 1.0}, {0.0, 1.0}}), Events{1, 0}, t); }) ==
          ErrorCode::ShapeMismatch);
}

TEST_CASE("Weibull hand fixtures") {
    CHECK(std::abs(weibull(Matrix{{0.0, 0.0}}, {1}, {1.0}) - 1.0) < 1e-12);
    CHECK(std::abs(weibull(Matrix{{0.0, 0.0}}, {0}, {1.0}) - 1.0) < 1e-12);
    CHECK(std::abs(weibull(Matrix{{0.0, std::log(2.0)}}, {1}, {2.0}) - (4.0 - 2.0 * std::log(2.0))) < 1e-12);
}

TEST_CASE("Weibull with unit shape is the exponential model") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::exponential_distribution<double> ex(1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng() % 30;
        std::vector<double> log_scale, t;
        Events e;
        Matrix two(n, 2), one(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            log_scale.push_back(u(rng));
            t.push_back(ex(rng) + 1e-3);
            e.push_back(rng() % 2);
            two(i, 0) = one(i, 0) = log_scale.back();
        }
        const double want = oracle::exponential_nll(log_scale, e, t);
        CHECK(std::abs(weibull(two, e, t) - want) < 1e-10 * std::max(1.0, std::abs(want)));
        CHECK(std::abs(weibull(one, e, t) - want) < 1e-10 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("Weibull gradient matches finite differences") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::exponential_distribution<double> ex(1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng() % 10;
        Matrix p(n, 2);
        for (auto& v : p.flat()) v = u(rng);
        Events e;
        std::vector<double> t;
        for (std::size_t i = 0; i < n; ++i) {
            e.push_back(rng() % 2);
            t.push_back(ex(rng) + 0.05);
        }
        Tape tape;
        Var params = tape.leaf(p);
        tape.backward(weibull_neg_log_likelihood(params, e, t));
        std::vector<double> flat(p.flat().begin(), p.flat().end());
        auto fd = oracle::fd_gradient(
            [&](const std::vector<double>& v) {
                Matrix q(n, 2);
                std::copy(v.begin(), v.end(), q.flat().begin());
                return weibull(q, e, t, Reduction::Mean);
            },
            flat);
        for (std::size_t i = 0; i < fd.size(); ++i) CHECK(oracle::rel_err(params.adjoint()[i], fd[i]) < 1e-4);
    }
}

TEST_CASE("Weibull errors") {
    Tape tape;
    auto code = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Usage;
    };
    CHECK(code([&] { weibull_neg_log_likelihood(tape.leaf(Matrix{{0.0, 0.0}}), Events{1}, std::vector<double>{0.0}); }) ==
          ErrorCode::DomainError);
    CHECK(code([&] {
              weibull_neg_log_likelihood(tape.leaf(Matrix{{0.0, 0.0}}), Events{1, 1}, std::vector<double>{1.0, 2.0});
          }) == ErrorCode::LengthMismatch);
    CHECK(code([&] {
              weibull_neg_log_likelihood(tape.leaf(Matrix{{0.0, 0.0, 0.0}}), Events{1}, std::vector<double>{1.0});
          }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("losses stay free of NaN across the log-parameter range") {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> u(-30.0, 30.0);
    std::exponential_distribution<double> ex(1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 20;
        std::vector<double> eta, t;
        Events e;
        Matrix p(n, 2);
        for (std::size_t i = 0; i < n; ++i) {
            eta.push_back(u(rng));
            t.push_back(ex(rng) + 1e-3);
            e.push_back(rng() % 2);
            p(i, 0) = u(rng);
            p(i, 1) = u(rng);
        }
        e[0] = 1;
        for (auto m : {TieMethod::Breslow, TieMethod::Efron}) {
            const double c = cox(eta, e, t, m);
            CHECK(std::isfinite(c));
            CHECK(c >= 0.0);
        }
        CHECK(!std::isnan(weibull(p, e, t)));
    }
}

TEST_CASE("Cox loss is strictly positive once a risk set has two members") {
    CHECK(cox({5.0, -3.0}, {1, 0}, {1.0, 2.0}, TieMethod::Breslow) > 0.0);
    CHECK(cox({5.0, -3.0}, {1, 1}, {1.0, 1.0}, TieMethod::Efron) > 0.0);
}

TEST_CASE("weibull_survival closed forms") {
    std::vector<double> t1{1.0};
    CHECK(weibull_survival(Matrix{{0.0, 0.0}}, t1).values(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    std::vector<double> t2{2.0};
    CHECK(weibull_survival(Matrix{{0.0, std::log(2.0)}}, t2).values(0, 0) ==
          doctest::Approx(std::exp(-4.0)).epsilon(1e-14));
    std::vector<double> tiny{std::numeric_limits<double>::denorm_min()};
    CHECK(weibull_survival(Matrix{{0.3, -0.2}, {-1.0, 1.0}}, tiny).values(1, 0) == doctest::Approx(1.0));

    std::vector<double> grid{0.1, 0.5, 1.0, 2.0, 8.0};
    auto s = weibull_survival(Matrix{{0.3, -0.2}, {-1.0, 1.0}, {2.0, 0.0}}, grid).values;
    for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t k = 0; k < s.cols(); ++k) {
            CHECK(s(i, k) >= 0.0);
            CHECK(s(i, k) <= 1.0);
            if (k > 0) CHECK(s(i, k) <= s(i, k - 1));
        }
    std::vector<double> bad{0.0};
    CHECK_THROWS_AS(weibull_survival(Matrix{{0.0, 0.0}}, bad), Error);
}

TEST_CASE("loss kind names") {
    for (auto k : {LossKind::CoxBreslow, LossKind::CoxEfron, LossKind::Weibull})
        CHECK(parse_loss_kind(to_string(k)) == k);
    CHECK(loss_output_dim(LossKind::Weibull) == 2);
    CHECK(loss_output_dim(LossKind::CoxEfron) == 1);
    CHECK_THROWS_AS(parse_loss_kind("gompertz"), Error);
}
