#pragma once

// Predictive-performance metrics for survival models: cumulative/dynamic AUC,
// concordance index and Brier score, each with confidence intervals, a
// one-sample test against a reference value and a paired two-model comparison.
//
// Sign convention: a higher risk score means a higher risk of an early event.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "survkit/km.hpp"
#include "survkit/survdata.hpp"

namespace survkit {

enum class Alternative { TwoSided, Greater, Less };

std::string to_string(Alternative a);
Alternative parse_alternative(const std::string& name);

enum class CiMethod {
    Default,     // Noether normal interval for the C-index, percentile bootstrap otherwise
    Normal,      // estimate +- z * SE (analytic SE if present, else bootstrap SE)
    Percentile,  // bootstrap percentiles
};

struct Weighting {
    enum class Kind { None, Ipcw, Custom };
    Kind kind = Kind::None;
    std::optional<StepFunction> censoring;  // Ipcw: externally supplied G; estimated from the sample when empty
    std::vector<double> custom;             // Custom: one weight per subject

    static Weighting none() { return {}; }
    static Weighting ipcw() { return {Kind::Ipcw, std::nullopt, {}}; }
    static Weighting ipcw_from(StepFunction g) { return {Kind::Ipcw, std::move(g), {}}; }
    static Weighting with(std::vector<double> w) { return {Kind::Custom, std::nullopt, std::move(w)}; }

    std::string label() const;
};

struct MetricOptions {
    Weighting weighting;
    std::vector<double> new_time;  // evaluation times, strictly increasing; empty = metric default
    // Bootstrap replicate count; nullopt = metric default (1000 for AUC and
    // Brier, none for the C-index). Replicate b draws from seed ^ b.
    std::optional<std::size_t> bootstrap;
    std::uint64_t seed = 0;
};

struct MetricResult {
    std::string metric;  // "auc", "cindex" or "brier"
    double estimate = 0.0;
    std::optional<double> se;  // analytic standard error (Noether, C-index only)
    std::vector<double> times;
    std::vector<double> per_time;
    std::vector<double> replicates;  // bootstrap summary estimates; NaN where a resample was not evaluable
    std::size_t bootstrap = 0;
    std::uint64_t seed = 0;
    std::string weighting = "none";
    std::size_t n = 0;
    std::uint64_t sample_hash = 0;  // fingerprint of (event, time) used for pairing checks
    std::size_t tied_times = 0;     // subjects sharing their time with another subject
    std::size_t tied_scores = 0;    // subjects sharing their (first-column) score with another subject
};

// Distinct event times strictly below the largest observed time.
std::vector<double> default_evaluation_times(std::span<const std::uint8_t> event, std::span<const double> time);

// AUC(t) = sum_cases sum_controls w_i w_j [1(s_i > s_j) + 1/2 1(s_i = s_j)] / (sum w_i sum w_j)
// with cases {time <= t, event} and controls {time > t}. Time-dependent scores
// need explicit new_time with one column per time. The summary estimate is
// AUC(t) for a single time and the normalized trapezoid integral otherwise.
MetricResult auc(const RiskScores& scores, std::span<const std::uint8_t> event, std::span<const double> time,
                 const MetricOptions& options = {});

// Harrell-type concordance over comparable pairs (event_i and time_i < time_j,
// or equal times with subject j censored). IPCW weights pairs by G(time_i-)^-2;
// custom weights by w_i^2. Time-dependent scores must be n x n, column k
// belonging to the time of subject k; pair (i, j) compares column i.
MetricResult concordance_index(const RiskScores& scores, std::span<const std::uint8_t> event,
                               std::span<const double> time, const MetricOptions& options = {});

// BS(t) = (1/n) sum_i [S(t|i)^2 1(time_i <= t, event_i) W_i + (1 - S(t|i))^2 1(time_i > t) W_i].
// new_time is required and aligned to the columns of `surv`. The summary
// estimate is the integrated Brier score (or BS(t) for a single time).
MetricResult brier(const SurvivalProbabilities& surv, std::span<const std::uint8_t> event,
                   std::span<const double> time, const MetricOptions& options);

// Trapezoidal integral of the per-time values divided by (t_max - t_min).
double brier_integral(const MetricResult& result);
double trapezoid_mean(std::span<const double> times, std::span<const double> values);

// Standard error used by the tests: analytic if present, else bootstrap SD.
std::optional<double> standard_error(const MetricResult& result);

std::pair<double, double> confidence_interval(const MetricResult& result, double alpha = 0.05,
                                              CiMethod method = CiMethod::Default);

double p_value(const MetricResult& result, Alternative alternative = Alternative::Greater, double null_value = 0.5);

struct Comparison {
    double difference = 0.0;  // a - b
    double se = 0.0;          // bootstrap SD of the paired differences
    double z = 0.0;
    double p_value = 0.5;
    std::size_t pairs = 0;  // replicates valid in both results
};

// Paired test of a vs b on shared bootstrap resamples.
Comparison compare_detailed(const MetricResult& a, const MetricResult& b,
                            Alternative alternative = Alternative::Greater);
inline double compare(const MetricResult& a, const MetricResult& b, Alternative alternative = Alternative::Greater) {
    return compare_detailed(a, b, alternative).p_value;
}

double normal_cdf(double z);
double normal_quantile(double p);
double normal_tail(double z, Alternative alternative);

}  // namespace survkit
