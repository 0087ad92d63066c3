#include "survkit/report.hpp"

#include "survkit/error.hpp"

namespace survkit {

Json metric_report(const MetricResult& r, const ReportOptions& options) {
    Json j;
    j["metric"] = r.metric;
    j["estimate"] = r.estimate;
    auto se = standard_error(r);
    j["se"] = se ? Json(*se) : Json(nullptr);
    try {
        auto [lo, hi] = confidence_interval(r, options.alpha, options.ci_method);
        j["ci"] = Json::array({lo, hi});
    } catch (const Error& e) {
        if (e.code() != ErrorCode::MissingVariance) throw;
        j["ci"] = Json::array({nullptr, nullptr});
    }
    j["alpha"] = options.alpha;
    try {
        j["p_value"] = p_value(r, options.alternative, options.null_value);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::MissingVariance && e.code() != ErrorCode::ZeroVariance) throw;
        j["p_value"] = nullptr;
    }
    j["alternative"] = to_string(options.alternative);
    j["times"] = r.times;
    j["per_time"] = r.per_time;
    j["weighting"] = r.weighting;
    j["B"] = r.bootstrap;
    j["seed"] = r.seed;
    return j;
}

Json comparison_report(const MetricResult& a, const MetricResult& b, const Comparison& c, Alternative alternative) {
    Json j;
    j["metric"] = a.metric;
    j["estimate_a"] = a.estimate;
    j["estimate_b"] = b.estimate;
    j["difference"] = c.difference;
    j["se_difference"] = c.se;
    j["p_value"] = c.p_value;
    j["alternative"] = to_string(alternative);
    j["pairs"] = c.pairs;
    j["times"] = a.times;
    j["weighting"] = a.weighting;
    j["B"] = a.bootstrap;
    j["seed"] = a.seed;
    return j;
}

}  // namespace survkit
