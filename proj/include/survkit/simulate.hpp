#pragma once

// Synthetic survival data with known ground truth.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "survkit/survdata.hpp"

namespace survkit {

struct SimConfig {
    std::size_t n = 100;
    std::size_t p = 1;
    std::vector<double> beta{1.0};  // length p
    double shape = 1.0;             // baseline Weibull shape k0
    double scale = 1.0;             // baseline Weibull scale lambda0
    double censoring_rate = 0.0;    // exponential censoring rate; 0 = no censoring
    std::optional<double> tie_grid;  // round observed times up to multiples of this
    std::uint64_t seed = 0;
};

void check_config(const SimConfig& config);

struct GroundTruth {
    SimConfig config;
    std::vector<double> event_time;      // latent T
    std::vector<double> censoring_time;  // latent C (+inf without censoring)
};

struct Simulation {
    SurvivalDataset data;
    GroundTruth truth;
};

// Covariates ~ N(0, 1); T = lambda0 * (-log U / exp(x'beta))^(1/k0);
// C ~ Exp(rate); observed time = min(T, C), event = 1(T <= C).
Simulation simulate_weibull_cox(const SimConfig& config);

// Ground-truth record as a JSON document.
std::string ground_truth_json(const GroundTruth& truth);

// Fixed small datasets covering degenerate inputs: all_censored,
// single_subject, all_tied, tied_grid, no_censoring,
// censoring_after_last_event. Versioned by kEdgeCaseSuiteVersion.
inline constexpr int kEdgeCaseSuiteVersion = 1;
std::vector<std::pair<std::string, SurvivalDataset>> edge_case_suite();

}  // namespace survkit
