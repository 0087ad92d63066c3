#pragma once

// JSON serialization of metric results. The field set is fixed:
//   {metric, estimate, se, ci: [lo, hi], alpha, p_value, alternative,
//    times: [...], per_time: [...], weighting, B, seed}
// `se` is the analytic SE when present, otherwise the bootstrap SD; `se` and
// `p_value` are null when they cannot be computed (no variance available).

#include "json.hpp"
#include "survkit/metrics.hpp"

namespace survkit {

using Json = nlohmann::ordered_json;

struct ReportOptions {
    double alpha = 0.05;
    Alternative alternative = Alternative::Greater;
    double null_value = 0.5;
    CiMethod ci_method = CiMethod::Default;
};

Json metric_report(const MetricResult& result, const ReportOptions& options = {});

Json comparison_report(const MetricResult& a, const MetricResult& b, const Comparison& comparison,
                       Alternative alternative);

}  // namespace survkit
