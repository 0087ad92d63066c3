#include "survkit/km.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "survkit/error.hpp"

namespace survkit {

StepFunction::StepFunction(std::vector<double> jump_times, std::vector<double> values)
    : times_(std::move(jump_times)), values_(std::move(values)) {
    if (times_.size() != values_.size())
        throw Error(ErrorCode::LengthMismatch, "step function needs one value per jump");
}

double StepFunction::operator()(double t) const {
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin()) return 1.0;
    return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepFunction::left_limit(double t) const {
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin()) return 1.0;
    return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

StepFunction kaplan_meier(std::span<const std::uint8_t> event, std::span<const double> time) {
    check_survival_pair(event, time);
    const std::size_t n = time.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });

    std::vector<double> jumps, values;
    double surv = 1.0;
    std::size_t at_risk = n;
    for (std::size_t pos = 0; pos < n;) {
        const double tau = time[order[pos]];
        std::size_t deaths = 0, leaving = 0;
        while (pos < n && time[order[pos]] == tau) {
            deaths += event[order[pos]] ? 1 : 0;
            ++leaving;
            ++pos;
        }
        if (deaths > 0) {
            surv *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
            jumps.push_back(tau);
            values.push_back(surv);
        }
        at_risk -= leaving;
    }
    return StepFunction(std::move(jumps), std::move(values));
}

StepFunction censoring_distribution(std::span<const std::uint8_t> event, std::span<const double> time) {
    Events flipped(event.size());
    for (std::size_t i = 0; i < event.size(); ++i) flipped[i] = event[i] ? 0 : 1;
    return kaplan_meier(flipped, time);
}

SubjectWeights ipcw_weights(const StepFunction& censoring, std::span<const std::uint8_t> event,
                            std::span<const double> time, double horizon) {
    check_survival_pair(event, time);
    SubjectWeights w{std::vector<double>(time.size(), 0.0), WeightProvenance::Ipcw};
    const double g_horizon = censoring(horizon);
    for (std::size_t i = 0; i < time.size(); ++i) {
        double g = 0.0;
        if (time[i] > horizon)
            g = g_horizon;
        else if (event[i])
            g = censoring.left_limit(time[i]);
        else
            continue;
        if (!(g > 0.0))
            throw Error(ErrorCode::DegenerateCensoring,
                        "subject " + std::to_string(i) + ": censoring survival is 0, IPCW weight undefined", i);
        w.weights[i] = 1.0 / g;
    }
    return w;
}

}  // namespace survkit
