#include "survkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "survkit/error.hpp"

namespace survkit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Weighted prefix sums indexed by 1-based rank.
class Fenwick {
public:
    explicit Fenwick(std::size_t n) : tree_(n + 1, 0.0) {}
    void add(std::size_t rank, double w) {
        total_ += w;
        for (; rank < tree_.size(); rank += rank & (~rank + 1)) tree_[rank] += w;
    }
    double prefix(std::size_t rank) const {
        double s = 0.0;
        for (; rank > 0; rank -= rank & (~rank + 1)) s += tree_[rank];
        return s;
    }
    double total() const { return total_; }

private:
    std::vector<double> tree_;
    double total_ = 0.0;
};

std::uint64_t fingerprint(std::span<const std::uint8_t> event, std::span<const double> time) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const void* p, std::size_t len) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    for (std::size_t i = 0; i < time.size(); ++i) {
        mix(&time[i], sizeof(double));
        mix(&event[i], 1);
    }
    return h;
}

std::size_t count_tied(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t tied = 0;
    for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i;
        while (j < v.size() && v[j] == v[i]) ++j;
        if (j - i > 1) tied += j - i;
        i = j;
    }
    return tied;
}

void check_times(std::span<const double> times) {
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!std::isfinite(times[k]) || times[k] <= 0.0)
            throw Error(ErrorCode::DomainError, "evaluation times must be finite and > 0");
        if (k > 0 && !(times[k] > times[k - 1]))
            throw Error(ErrorCode::DomainError, "evaluation times must be strictly increasing");
    }
}

void check_scores(const RiskScores& scores, std::size_t n) {
    if (scores.values.rows() != n)
        throw Error(ErrorCode::LengthMismatch, "scores have " + std::to_string(scores.values.rows()) +
                                                   " rows, expected " + std::to_string(n));
    if (scores.values.cols() == 0 || (!scores.time_dependent && scores.values.cols() != 1))
        throw Error(ErrorCode::ShapeMismatch, "time-independent scores must have exactly one column");
    for (double v : scores.values.flat())
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "risk scores must be finite");
}

// Subject data after (optional) bootstrap resampling.
struct Sample {
    Events event;
    std::vector<double> time;
    Matrix values;  // scores or survival probabilities, one row per subject
    std::vector<double> custom;
};

Sample resample(const Sample& s, std::span<const std::size_t> idx) {
    Sample out;
    out.values = Matrix(idx.size(), s.values.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        out.event.push_back(s.event[idx[r]]);
        out.time.push_back(s.time[idx[r]]);
        for (std::size_t c = 0; c < s.values.cols(); ++c) out.values(r, c) = s.values(idx[r], c);
        if (!s.custom.empty()) out.custom.push_back(s.custom[idx[r]]);
    }
    return out;
}

std::vector<std::size_t> draw_indices(std::size_t n, std::uint64_t seed, std::size_t replicate) {
    std::mt19937_64 rng(seed ^ static_cast<std::uint64_t>(replicate));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = pick(rng);
    return idx;
}

// Per-horizon subject weights for one sample.
class WeightResolver {
public:
    WeightResolver(const Weighting& weighting, const Sample& s) : weighting_(weighting), sample_(s) {
        if (weighting.kind == Weighting::Kind::Ipcw)
            censoring_ = weighting.censoring ? *weighting.censoring : censoring_distribution(s.event, s.time);
        if (weighting.kind == Weighting::Kind::Custom) {
            SubjectWeights w = SubjectWeights::custom(s.custom);
            check_weights(w, s.time.size());
        }
    }

    std::vector<double> at(double horizon) const {
        switch (weighting_.kind) {
            case Weighting::Kind::None: return std::vector<double>(sample_.time.size(), 1.0);
            case Weighting::Kind::Custom: return sample_.custom;
            case Weighting::Kind::Ipcw: return ipcw_weights(*censoring_, sample_.event, sample_.time, horizon).weights;
        }
        return {};
    }

    // Per-case pair weight for the concordance index.
    double pair_weight(std::size_t i) const {
        switch (weighting_.kind) {
            case Weighting::Kind::None: return 1.0;
            case Weighting::Kind::Custom: return sample_.custom[i] * sample_.custom[i];
            case Weighting::Kind::Ipcw: {
                const double g = censoring_->left_limit(sample_.time[i]);
                if (!(g > 0.0))
                    throw Error(ErrorCode::DegenerateCensoring,
                                "subject " + std::to_string(i) + ": censoring survival is 0, IPCW weight undefined", i);
                return 1.0 / (g * g);
            }
        }
        return 1.0;
    }

private:
    const Weighting& weighting_;
    const Sample& sample_;
    std::optional<StepFunction> censoring_;
};

double auc_at(const Sample& s, std::size_t column, const std::vector<double>& w, double t) {
    std::vector<std::pair<double, double>> controls;  // (score, weight)
    double case_weight = 0.0;
    std::size_t n_cases = 0;
    for (std::size_t i = 0; i < s.time.size(); ++i) {
        if (s.time[i] > t) {
            controls.emplace_back(s.values(i, column), w[i]);
        } else if (s.event[i]) {
            ++n_cases;
            case_weight += w[i];
        }
    }
    if (n_cases == 0 || !(case_weight > 0.0))
        throw Error(ErrorCode::NoCases, "no cases (event with time <= " + std::to_string(t) + ")");
    std::sort(controls.begin(), controls.end());
    std::vector<double> cum(controls.size() + 1, 0.0);
    for (std::size_t k = 0; k < controls.size(); ++k) cum[k + 1] = cum[k] + controls[k].second;
    const double control_weight = cum.back();
    if (controls.empty() || !(control_weight > 0.0))
        throw Error(ErrorCode::NoControls, "no controls (time > " + std::to_string(t) + ")");

    double numerator = 0.0;
    for (std::size_t i = 0; i < s.time.size(); ++i) {
        if (s.time[i] > t || !s.event[i]) continue;
        const double si = s.values(i, column);
        auto lo = std::lower_bound(controls.begin(), controls.end(), std::make_pair(si, -std::numeric_limits<double>::infinity()));
        auto hi = std::upper_bound(controls.begin(), controls.end(), std::make_pair(si, std::numeric_limits<double>::infinity()));
        const double below = cum[static_cast<std::size_t>(lo - controls.begin())];
        const double equal = cum[static_cast<std::size_t>(hi - controls.begin())] - below;
        numerator += w[i] * (below + 0.5 * equal);
    }
    return numerator / (case_weight * control_weight);
}

struct TimeSeries {
    std::vector<double> per_time;
    double summary = 0.0;
};

double summarize(std::span<const double> times, std::span<const double> values) {
    return values.size() == 1 ? values[0] : trapezoid_mean(times, values);
}

TimeSeries auc_series(const Sample& s, bool time_dependent, std::span<const double> times, const Weighting& weighting) {
    WeightResolver weights(weighting, s);
    TimeSeries out;
    for (std::size_t k = 0; k < times.size(); ++k)
        out.per_time.push_back(auc_at(s, time_dependent ? k : 0, weights.at(times[k]), times[k]));
    out.summary = summarize(times, out.per_time);
    return out;
}

struct Concordance {
    double numerator = 0.0;
    double denominator = 0.0;
    std::vector<double> psi;  // per-subject influence on the centred pair sum
};

Concordance concordance_sums(const Sample& s, bool time_dependent, const Weighting& weighting) {
    const std::size_t n = s.time.size();
    WeightResolver weights(weighting, s);
    std::vector<double> a(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (s.event[i]) a[i] = weights.pair_weight(i);

    std::vector<double> case_num(n, 0.0), case_den(n, 0.0), ctrl_num(n, 0.0), ctrl_den(n, 0.0);

    if (time_dependent) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!s.event[i]) continue;
            const double si = s.values(i, i);
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const bool comparable = s.time[i] < s.time[j] || (s.time[i] == s.time[j] && !s.event[j]);
                if (!comparable) continue;
                const double sj = s.values(j, i);
                const double h = si > sj ? 1.0 : (si == sj ? 0.5 : 0.0);
                case_num[i] += a[i] * h;
                case_den[i] += a[i];
                ctrl_num[j] += a[i] * h;
                ctrl_den[j] += a[i];
            }
        }
    } else {
        std::vector<double> sorted_scores(n);
        for (std::size_t i = 0; i < n; ++i) sorted_scores[i] = s.values(i, 0);
        std::sort(sorted_scores.begin(), sorted_scores.end());
        sorted_scores.erase(std::unique(sorted_scores.begin(), sorted_scores.end()), sorted_scores.end());
        std::vector<std::size_t> rank(n);
        for (std::size_t i = 0; i < n; ++i)
            rank[i] = static_cast<std::size_t>(
                          std::lower_bound(sorted_scores.begin(), sorted_scores.end(), s.values(i, 0)) -
                          sorted_scores.begin()) +
                      1;

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return s.time[x] < s.time[y]; });
        std::vector<std::pair<std::size_t, std::size_t>> groups;  // [begin, end) in `order` with equal time
        for (std::size_t p = 0; p < n;) {
            std::size_t q = p;
            while (q < n && s.time[order[q]] == s.time[order[p]]) ++q;
            groups.emplace_back(p, q);
            p = q;
        }

        // Cases see every later subject plus censored subjects at their own time.
        Fenwick later(sorted_scores.size());
        for (auto g = groups.rbegin(); g != groups.rend(); ++g) {
            for (std::size_t p = g->first; p < g->second; ++p)
                if (!s.event[order[p]]) later.add(rank[order[p]], 1.0);
            for (std::size_t p = g->first; p < g->second; ++p) {
                const std::size_t i = order[p];
                if (!s.event[i]) continue;
                const double below = later.prefix(rank[i] - 1);
                const double equal = later.prefix(rank[i]) - below;
                case_num[i] = a[i] * (below + 0.5 * equal);
                case_den[i] = a[i] * later.total();
            }
            for (std::size_t p = g->first; p < g->second; ++p)
                if (s.event[order[p]]) later.add(rank[order[p]], 1.0);
        }

        // Controls see earlier cases; censored controls also see cases at their own time.
        Fenwick earlier(sorted_scores.size());
        auto as_control = [&](std::size_t j) {
            const double upto = earlier.prefix(rank[j]);
            const double below = earlier.prefix(rank[j] - 1);
            ctrl_num[j] = (earlier.total() - upto) + 0.5 * (upto - below);
            ctrl_den[j] = earlier.total();
        };
        for (const auto& [begin, end] : groups) {
            for (std::size_t p = begin; p < end; ++p)
                if (s.event[order[p]]) as_control(order[p]);
            for (std::size_t p = begin; p < end; ++p)
                if (s.event[order[p]]) earlier.add(rank[order[p]], a[order[p]]);
            for (std::size_t p = begin; p < end; ++p)
                if (!s.event[order[p]]) as_control(order[p]);
        }
    }

    Concordance c;
    for (std::size_t i = 0; i < n; ++i) {
        c.numerator += case_num[i];
        c.denominator += case_den[i];
    }
    if (!(c.denominator > 0.0)) throw Error(ErrorCode::NoComparablePairs, "no comparable pairs");
    const double est = c.numerator / c.denominator;
    c.psi.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        c.psi[k] = (case_num[k] - est * case_den[k]) + (ctrl_num[k] - est * ctrl_den[k]);
    return c;
}

TimeSeries brier_series(const Sample& s, std::span<const double> times, const Weighting& weighting) {
    WeightResolver weights(weighting, s);
    const double n = static_cast<double>(s.time.size());
    TimeSeries out;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        const auto w = weights.at(t);
        double acc = 0.0;
        for (std::size_t i = 0; i < s.time.size(); ++i) {
            const double surv = s.values(i, k);
            if (s.time[i] > t)
                acc += (1.0 - surv) * (1.0 - surv) * w[i];
            else if (s.event[i])
                acc += surv * surv * w[i];
        }
        out.per_time.push_back(acc / n);
    }
    out.summary = summarize(times, out.per_time);
    return out;
}

template <typename Fn>
std::vector<double> bootstrap_replicates(const Sample& s, std::size_t replicates, std::uint64_t seed, Fn&& estimate) {
    std::vector<double> out(replicates, kNaN);
    const std::size_t n = s.time.size();
    for (std::size_t b = 0; b < replicates; ++b) {
        const auto idx = draw_indices(n, seed, b);
        const Sample rs = resample(s, idx);
        try {
            out[b] = estimate(rs);
        } catch (const Error&) {
            // resample without cases, controls or comparable pairs
        }
    }
    return out;
}

std::vector<double> valid_values(std::span<const double> v) {
    std::vector<double> out;
    for (double x : v)
        if (std::isfinite(x)) out.push_back(x);
    return out;
}

double sample_sd(std::span<const double> v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Linear interpolation between order statistics.
double quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Sample make_sample(const Matrix& values, std::span<const std::uint8_t> event, std::span<const double> time,
                   const MetricOptions& options) {
    Sample s{Events(event.begin(), event.end()), std::vector<double>(time.begin(), time.end()), values,
             options.weighting.kind == Weighting::Kind::Custom ? options.weighting.custom : std::vector<double>{}};
    if (options.weighting.kind == Weighting::Kind::Custom)
        check_weights(SubjectWeights::custom(s.custom), s.time.size());
    return s;
}

MetricResult base_result(const char* metric, std::span<const std::uint8_t> event, std::span<const double> time,
                         const MetricOptions& options, std::size_t replicates) {
    MetricResult r;
    r.metric = metric;
    r.n = time.size();
    r.sample_hash = fingerprint(event, time);
    r.tied_times = count_tied(std::vector<double>(time.begin(), time.end()));
    r.weighting = options.weighting.label();
    r.bootstrap = replicates;
    r.seed = options.seed;
    return r;
}

}  // namespace

std::string to_string(Alternative a) {
    switch (a) {
        case Alternative::TwoSided: return "two_sided";
        case Alternative::Greater: return "greater";
        case Alternative::Less: return "less";
    }
    return "unknown";
}

Alternative parse_alternative(const std::string& name) {
    if (name == "two_sided" || name == "two-sided") return Alternative::TwoSided;
    if (name == "greater") return Alternative::Greater;
    if (name == "less") return Alternative::Less;
    throw Error(ErrorCode::BadConfig, "unknown alternative \"" + name + "\"");
}

std::string Weighting::label() const {
    switch (kind) {
        case Kind::None: return "uniform";
        case Kind::Ipcw: return censoring ? "ipcw-external" : "ipcw";
        case Kind::Custom: return "custom";
    }
    return "unknown";
}

std::vector<double> default_evaluation_times(std::span<const std::uint8_t> event, std::span<const double> time) {
    check_survival_pair(event, time);
    const double t_max = *std::max_element(time.begin(), time.end());
    std::vector<double> out;
    for (std::size_t i = 0; i < time.size(); ++i)
        if (event[i] && time[i] < t_max) out.push_back(time[i]);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

MetricResult auc(const RiskScores& scores, std::span<const std::uint8_t> event, std::span<const double> time,
                 const MetricOptions& options) {
    check_survival_pair(event, time);
    check_scores(scores, time.size());

    std::vector<double> times = options.new_time;
    if (times.empty()) {
        if (scores.time_dependent)
            throw Error(ErrorCode::ShapeMismatch, "time-dependent scores need explicit evaluation times");
        times = default_evaluation_times(event, time);
        if (times.empty()) throw Error(ErrorCode::NoCases, "no event time with both cases and controls");
    }
    check_times(times);
    if (scores.time_dependent && scores.values.cols() != times.size())
        throw Error(ErrorCode::ShapeMismatch, "time-dependent scores have " + std::to_string(scores.values.cols()) +
                                                  " columns for " + std::to_string(times.size()) + " times");

    const Sample s = make_sample(scores.values, event, time, options);
    const std::size_t replicates = options.bootstrap.value_or(1000);
    MetricResult r = base_result("auc", event, time, options, replicates);
    r.tied_scores = count_tied(scores.values.col(0));
    r.times = times;

    auto series = auc_series(s, scores.time_dependent, times, options.weighting);
    r.per_time = series.per_time;
    r.estimate = series.summary;
    r.replicates = bootstrap_replicates(s, replicates, options.seed, [&](const Sample& rs) {
        return auc_series(rs, scores.time_dependent, times, options.weighting).summary;
    });
    return r;
}

MetricResult concordance_index(const RiskScores& scores, std::span<const std::uint8_t> event,
                               std::span<const double> time, const MetricOptions& options) {
    check_survival_pair(event, time);
    check_scores(scores, time.size());
    if (scores.time_dependent && scores.values.cols() != time.size())
        throw Error(ErrorCode::ShapeMismatch, "time-dependent scores for the C-index must be n x n");

    const Sample s = make_sample(scores.values, event, time, options);
    const std::size_t replicates = options.bootstrap.value_or(0);
    MetricResult r = base_result("cindex", event, time, options, replicates);
    r.tied_scores = count_tied(scores.values.col(0));

    const Concordance c = concordance_sums(s, scores.time_dependent, options.weighting);
    r.estimate = c.numerator / c.denominator;
    double ss = 0.0;
    for (double v : c.psi) ss += v * v;
    r.se = std::sqrt(ss) / c.denominator;
    r.replicates = bootstrap_replicates(s, replicates, options.seed, [&](const Sample& rs) {
        const Concordance rc = concordance_sums(rs, scores.time_dependent, options.weighting);
        return rc.numerator / rc.denominator;
    });
    return r;
}

MetricResult brier(const SurvivalProbabilities& surv, std::span<const std::uint8_t> event,
                   std::span<const double> time, const MetricOptions& options) {
    check_survival_pair(event, time);
    check_survival_probabilities(surv);
    const auto& times = options.new_time;
    if (times.empty()) throw Error(ErrorCode::ShapeMismatch, "Brier score needs evaluation times");
    check_times(times);
    if (surv.values.rows() != time.size() || surv.values.cols() != times.size())
        throw Error(ErrorCode::ShapeMismatch, "survival matrix is " + std::to_string(surv.values.rows()) + "x" +
                                                  std::to_string(surv.values.cols()) + ", expected " +
                                                  std::to_string(time.size()) + "x" + std::to_string(times.size()));

    const Sample s = make_sample(surv.values, event, time, options);
    const std::size_t replicates = options.bootstrap.value_or(1000);
    MetricResult r = base_result("brier", event, time, options, replicates);
    r.times = times;

    auto series = brier_series(s, times, options.weighting);
    r.per_time = series.per_time;
    r.estimate = series.summary;
    r.replicates = bootstrap_replicates(s, replicates, options.seed,
                                        [&](const Sample& rs) { return brier_series(rs, times, options.weighting).summary; });
    return r;
}

double trapezoid_mean(std::span<const double> times, std::span<const double> values) {
    if (times.size() != values.size()) throw Error(ErrorCode::LengthMismatch, "times and values differ in length");
    if (times.size() < 2) throw Error(ErrorCode::TooFewTimes, "integral needs at least two evaluation times");
    double area = 0.0;
    for (std::size_t k = 1; k < times.size(); ++k)
        area += 0.5 * (values[k] + values[k - 1]) * (times[k] - times[k - 1]);
    const double span = times.back() - times.front();
    if (!(span > 0.0)) throw Error(ErrorCode::TooFewTimes, "evaluation times span an empty interval");
    return area / span;
}

double brier_integral(const MetricResult& result) { return trapezoid_mean(result.times, result.per_time); }

std::optional<double> standard_error(const MetricResult& result) {
    if (result.se) return result.se;
    auto v = valid_values(result.replicates);
    if (v.size() < 2) return std::nullopt;
    return sample_sd(v);
}

std::pair<double, double> confidence_interval(const MetricResult& result, double alpha, CiMethod method) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::BadConfig, "alpha must lie in (0, 1]");
    if (method == CiMethod::Default) method = result.se ? CiMethod::Normal : CiMethod::Percentile;

    double lo = 0.0, hi = 0.0;
    if (method == CiMethod::Normal) {
        auto se = standard_error(result);
        if (!se) throw Error(ErrorCode::MissingVariance, "no standard error or bootstrap replicates");
        const double z = normal_quantile(1.0 - alpha / 2.0);
        lo = result.estimate - z * *se;
        hi = result.estimate + z * *se;
    } else {
        auto v = valid_values(result.replicates);
        if (v.empty()) throw Error(ErrorCode::MissingVariance, "no bootstrap replicates");
        lo = quantile(v, alpha / 2.0);
        hi = quantile(v, 1.0 - alpha / 2.0);
    }
    lo = std::clamp(std::min(lo, result.estimate), 0.0, 1.0);
    hi = std::clamp(std::max(hi, result.estimate), 0.0, 1.0);
    return {lo, hi};
}

double normal_cdf(double z) { return boost::math::cdf(boost::math::normal(), z); }

double normal_quantile(double p) {
    if (p == 0.5) return 0.0;
    return boost::math::quantile(boost::math::normal(), p);
}

double normal_tail(double z, Alternative alternative) {
    switch (alternative) {
        case Alternative::Greater: return boost::math::cdf(boost::math::complement(boost::math::normal(), z));
        case Alternative::Less: return normal_cdf(z);
        case Alternative::TwoSided:
            return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal(), std::abs(z))));
    }
    return kNaN;
}

double p_value(const MetricResult& result, Alternative alternative, double null_value) {
    const double diff = result.estimate - null_value;
    if (diff == 0.0) return normal_tail(0.0, alternative);
    auto se = standard_error(result);
    if (!se) throw Error(ErrorCode::MissingVariance, "no standard error or bootstrap replicates");
    if (!(*se > 0.0)) throw Error(ErrorCode::ZeroVariance, "standard error is zero");
    return normal_tail(diff / *se, alternative);
}

Comparison compare_detailed(const MetricResult& a, const MetricResult& b, Alternative alternative) {
    if (a.metric != b.metric) throw Error(ErrorCode::UnpairedInputs, "cannot compare " + a.metric + " with " + b.metric);
    if (a.n != b.n) throw Error(ErrorCode::UnpairedInputs, "results computed on different sample sizes");
    if (a.times != b.times) throw Error(ErrorCode::UnpairedInputs, "results use different evaluation times");
    if (a.sample_hash != b.sample_hash) throw Error(ErrorCode::UnpairedInputs, "results computed on different subjects");
    if (a.bootstrap != b.bootstrap || a.seed != b.seed || a.replicates.size() != b.replicates.size())
        throw Error(ErrorCode::UnpairedInputs, "results do not share bootstrap resamples");
    if (a.replicates.empty()) throw Error(ErrorCode::MissingVariance, "comparison needs bootstrap replicates");

    Comparison c;
    c.difference = a.estimate - b.estimate;
    std::vector<double> diffs;
    for (std::size_t k = 0; k < a.replicates.size(); ++k)
        if (std::isfinite(a.replicates[k]) && std::isfinite(b.replicates[k]))
            diffs.push_back(a.replicates[k] - b.replicates[k]);
    c.pairs = diffs.size();
    if (c.pairs >= 2) c.se = sample_sd(diffs);
    if (c.difference == 0.0) {
        c.z = 0.0;
    } else {
        if (c.pairs < 2) throw Error(ErrorCode::MissingVariance, "fewer than two valid paired replicates");
        if (!(c.se > 0.0)) throw Error(ErrorCode::ZeroVariance, "paired bootstrap differences have zero variance");
        c.z = c.difference / c.se;
    }
    c.p_value = normal_tail(c.z, alternative);
    return c;
}

}  // namespace survkit
