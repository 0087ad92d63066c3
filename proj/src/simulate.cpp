#include "survkit/simulate.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "json.hpp"

#include "survkit/error.hpp"

namespace survkit {

void check_config(const SimConfig& c) {
    if (c.n < 1) throw Error(ErrorCode::BadConfig, "n must be >= 1");
    if (c.beta.size() != c.p)
        throw Error(ErrorCode::BadConfig, "beta has " + std::to_string(c.beta.size()) + " entries for p = " +
                                              std::to_string(c.p));
    if (!(c.shape > 0.0) || !std::isfinite(c.shape)) throw Error(ErrorCode::BadConfig, "shape must be > 0");
    if (!(c.scale > 0.0) || !std::isfinite(c.scale)) throw Error(ErrorCode::BadConfig, "scale must be > 0");
    if (!(c.censoring_rate >= 0.0) || !std::isfinite(c.censoring_rate))
        throw Error(ErrorCode::BadConfig, "censoring rate must be >= 0");
    if (c.tie_grid && !(*c.tie_grid > 0.0 && std::isfinite(*c.tie_grid)))
        throw Error(ErrorCode::BadConfig, "tie grid must be > 0");
    for (double b : c.beta)
        if (!std::isfinite(b)) throw Error(ErrorCode::BadConfig, "beta must be finite");
}

Simulation simulate_weibull_cox(const SimConfig& c) {
    check_config(c);
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    // (0, 1]: -log(u) stays finite
    auto uniform = [&] { return 1.0 - std::generate_canonical<double, 53>(rng); };

    Simulation sim;
    auto& d = sim.data;
    d.covariates = Matrix(c.n, c.p);
    for (std::size_t j = 0; j < c.p; ++j) d.covariate_names.push_back("x" + std::to_string(j + 1));
    sim.truth.config = c;

    for (std::size_t i = 0; i < c.n; ++i) {
        double lp = 0.0;
        for (std::size_t j = 0; j < c.p; ++j) {
            d.covariates(i, j) = normal(rng);
            lp += d.covariates(i, j) * c.beta[j];
        }
        const double e = -std::log(uniform());
        const double t_event = c.scale * std::pow(e / std::exp(lp), 1.0 / c.shape);
        // The censoring draw is consumed even at rate 0 so the covariate stream
        // does not depend on the censoring rate.
        const double e_cens = -std::log(uniform());
        const double t_cens = c.censoring_rate > 0.0 ? e_cens / c.censoring_rate : std::numeric_limits<double>::infinity();

        const bool observed = t_event <= t_cens;
        double t = observed ? t_event : t_cens;
        if (c.tie_grid) t = std::max(1.0, std::ceil(t / *c.tie_grid)) * *c.tie_grid;
        if (!(t > 0.0) || !std::isfinite(t))
            throw Error(ErrorCode::BadConfig, "simulated time is not positive and finite; adjust scale or beta", i);

        d.time.push_back(t);
        d.event.push_back(observed ? 1 : 0);
        sim.truth.event_time.push_back(t_event);
        sim.truth.censoring_time.push_back(t_cens);
    }
    validate(d);
    return sim;
}

std::string ground_truth_json(const GroundTruth& truth) {
    const auto& c = truth.config;
    nlohmann::ordered_json j;
    j["generator"] = "weibull-cox";
    j["n"] = c.n;
    j["p"] = c.p;
    j["beta"] = c.beta;
    j["shape"] = c.shape;
    j["scale"] = c.scale;
    j["censoring_rate"] = c.censoring_rate;
    j["tie_grid"] = c.tie_grid ? nlohmann::ordered_json(*c.tie_grid) : nlohmann::ordered_json(nullptr);
    j["seed"] = c.seed;
    j["event_time"] = truth.event_time;
    auto cens = nlohmann::ordered_json::array();
    for (double v : truth.censoring_time)
        cens.push_back(std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr));
    j["censoring_time"] = cens;
    return j.dump(2) + "\n";
}

namespace {

SurvivalDataset make(std::vector<double> time, Events event, std::vector<double> x) {
    SurvivalDataset d;
    d.time = std::move(time);
    d.event = std::move(event);
    d.covariates = Matrix::column(x);
    d.covariate_names = {"x1"};
    return validate(std::move(d));
}

}  // namespace

std::vector<std::pair<std::string, SurvivalDataset>> edge_case_suite() {
    std::vector<std::pair<std::string, SurvivalDataset>> suite;
    suite.emplace_back("all_censored", make({1.0, 2.0, 3.0, 4.0}, {0, 0, 0, 0}, {0.5, -0.2, 1.1, 0.0}));
    suite.emplace_back("single_subject", make({2.0}, {1}, {0.0}));
    suite.emplace_back("all_tied", make({1.0, 1.0, 1.0}, {1, 1, 1}, {-1.0, 0.0, 2.0}));
    suite.emplace_back("tied_grid", make({0.5, 0.5, 1.0, 1.0, 1.0, 1.5, 1.5, 2.0}, {1, 0, 1, 1, 0, 1, 1, 0},
                                         {0.3, -0.7, 1.2, 0.1, -0.4, 0.9, -1.5, 0.6}));
    suite.emplace_back("no_censoring", make({0.7, 1.3, 2.2, 3.1, 4.8}, {1, 1, 1, 1, 1}, {1.0, 0.5, 0.0, -0.5, -1.0}));
    suite.emplace_back("censoring_after_last_event",
                       make({1.0, 2.0, 3.0, 5.0, 6.0}, {1, 1, 1, 0, 0}, {0.8, 0.2, -0.1, -0.6, -0.9}));
    return suite;
}

}  // namespace survkit
