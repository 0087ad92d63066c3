#pragma once

// Kaplan-Meier product-limit estimates and inverse-probability-of-censoring
// weights.

#include <cstdint>
#include <span>
#include <vector>

#include "survkit/survdata.hpp"

namespace survkit {

// Right-continuous, non-increasing step function equal to 1 before the first jump.
class StepFunction {
public:
    StepFunction() = default;
    StepFunction(std::vector<double> jump_times, std::vector<double> values);

    double operator()(double t) const;  // value at t (jumps at t included)
    double left_limit(double t) const;  // value just before t

    const std::vector<double>& jump_times() const { return times_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> times_;
    std::vector<double> values_;
};

// S(t) = prod_{tau_j <= t} (1 - d_j / r_j), risk set r_j = #{time >= tau_j}.
StepFunction kaplan_meier(std::span<const std::uint8_t> event, std::span<const double> time);

// Kaplan-Meier with the event indicator complemented (censoring is the event).
StepFunction censoring_distribution(std::span<const std::uint8_t> event, std::span<const double> time);

// Weights for horizon t: 1/G(time_i-) for events with time_i <= t, 1/G(t) for
// subjects with time_i > t, 0 otherwise. Throws DegenerateCensoring when a
// needed G value is 0.
SubjectWeights ipcw_weights(const StepFunction& censoring, std::span<const std::uint8_t> event,
                            std::span<const double> time, double horizon);

}  // namespace survkit
