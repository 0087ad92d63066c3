#include "survkit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "survkit/error.hpp"

namespace survkit {

std::string_view to_string(LossKind kind) {
    switch (kind) {
        case LossKind::CoxBreslow: return "cox-breslow";
        case LossKind::CoxEfron: return "cox-efron";
        case LossKind::Weibull: return "weibull";
    }
    return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
    if (name == "cox-breslow") return LossKind::CoxBreslow;
    if (name == "cox-efron") return LossKind::CoxEfron;
    if (name == "weibull") return LossKind::Weibull;
    throw Error(ErrorCode::BadConfig, "unknown loss \"" + std::string(name) + "\"");
}

std::size_t loss_output_dim(LossKind kind) { return kind == LossKind::Weibull ? 2 : 1; }

namespace {

void check_lengths(const Matrix& theta, std::span<const std::uint8_t> event, std::span<const double> time) {
    if (theta.rows() != event.size() || event.size() != time.size())
        throw Error(ErrorCode::LengthMismatch, "parameters have " + std::to_string(theta.rows()) + " rows, event " +
                                                   std::to_string(event.size()) + ", time " +
                                                   std::to_string(time.size()));
}

}  // namespace

Var cox_neg_partial_log_likelihood(Var log_hazards, std::span<const std::uint8_t> event, std::span<const double> time,
                                   TieMethod ties, Reduction reduction) {
    const Matrix& eta = log_hazards.value();
    if (eta.cols() != 1)
        throw Error(ErrorCode::ShapeMismatch, "Cox loss expects one log hazard per subject, got " +
                                                  std::to_string(eta.cols()) + " columns");
    check_lengths(eta, event, time);
    const std::size_t n_events = event_count(event);
    if (n_events == 0) throw Error(ErrorCode::NoEvents, "Cox partial likelihood needs at least one event");

    Tape& tape = *log_hazards.tape();
    const std::size_t n = time.size();

    // Descending time: the risk set of tau is the prefix ending at the last
    // subject with time == tau.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return time[a] > time[b]; });

    Var sorted = ad::gather_rows(log_hazards, order);
    Var risk_lse = ad::logcumsumexp(sorted);

    std::vector<std::size_t> block_end;               // position in `order` closing each event-time block
    std::vector<double> multiplicity;                 // events per block
    std::vector<std::vector<std::size_t>> tie_groups;  // subjects dying at the block's time
    for (std::size_t pos = 0; pos < n;) {
        std::size_t end = pos;
        std::vector<std::size_t> deaths;
        while (end < n && time[order[end]] == time[order[pos]]) {
            if (event[order[end]]) deaths.push_back(order[end]);
            ++end;
        }
        if (!deaths.empty()) {
            block_end.push_back(end - 1);
            multiplicity.push_back(static_cast<double>(deaths.size()));
            tie_groups.push_back(std::move(deaths));
        }
        pos = end;
    }

    std::vector<std::size_t> event_rows;
    for (std::size_t i = 0; i < n; ++i)
        if (event[i]) event_rows.push_back(i);
    Var event_eta = ad::sum(ad::gather_rows(log_hazards, event_rows));

    Var risk_at_tau = ad::gather_rows(risk_lse, block_end);  // m x 1
    Var denominator = ad::sum(ad::mul(tape.constant(Matrix::column(multiplicity)), risk_at_tau));

    if (ties == TieMethod::Efron) {
        // sum_{l<d} log(R - (l/d) D) = d log R + sum_{l=1}^{d-1} log(1 - (l/d) exp(logD - logR))
        std::vector<std::size_t> one{0};
        for (std::size_t g = 0; g < tie_groups.size(); ++g) {
            const auto& group = tie_groups[g];
            const std::size_t d = group.size();
            if (d < 2) continue;
            Var log_d = ad::logsumexp(ad::gather_rows(log_hazards, group));
            std::vector<std::size_t> at{g};
            Var log_r = ad::gather_rows(risk_at_tau, at);
            Var ratio = ad::exp(ad::sub(log_d, log_r));
            std::vector<double> fractions(d - 1);
            for (std::size_t l = 1; l < d; ++l) fractions[l - 1] = static_cast<double>(l) / static_cast<double>(d);
            Var frac = tape.constant(Matrix::column(fractions));
            Var ones = tape.constant(Matrix(d - 1, 1, 1.0));
            Var correction = ad::sum(ad::log(ad::sub(ones, ad::mul(frac, ratio))));
            denominator = ad::add(denominator, correction);
        }
    }

    Var loss = ad::sub(denominator, event_eta);
    if (reduction == Reduction::Mean) loss = ad::scale(loss, 1.0 / static_cast<double>(n_events));
    return loss;
}

Var weibull_neg_log_likelihood(Var log_params, std::span<const std::uint8_t> event, std::span<const double> time,
                               Reduction reduction) {
    const Matrix& p = log_params.value();
    if (p.cols() != 1 && p.cols() != 2)
        throw Error(ErrorCode::ShapeMismatch,
                    "Weibull loss expects 1 or 2 parameter columns, got " + std::to_string(p.cols()));
    check_lengths(p, event, time);
    for (std::size_t i = 0; i < time.size(); ++i)
        if (!(time[i] > 0.0))
            throw Error(ErrorCode::DomainError, "row " + std::to_string(i) + ": Weibull likelihood needs time > 0", i);

    Tape& tape = *log_params.tape();
    const std::size_t n = time.size();

    auto column = [&](std::size_t c) {
        Matrix selector(p.cols(), 1);
        selector[c] = 1.0;
        return ad::matmul(log_params, tape.constant(std::move(selector)));
    };

    std::vector<double> log_t(n), ev(n);
    for (std::size_t i = 0; i < n; ++i) {
        log_t[i] = std::log(time[i]);
        ev[i] = event[i] ? 1.0 : 0.0;
    }

    Var log_scale = column(0);
    Var z = ad::sub(tape.constant(Matrix::column(log_t)), log_scale);  // log t - log lambda
    Var events = tape.constant(Matrix::column(ev));

    Var log_cum_hazard;  // k z
    Var log_hazard;      // log k - log lambda + (k - 1) z
    if (p.cols() == 2) {
        Var log_shape = column(1);
        Var shape = ad::exp(log_shape);
        log_cum_hazard = ad::mul(shape, z);
        Var k_minus_1 = ad::sub(shape, tape.constant(Matrix(n, 1, 1.0)));
        log_hazard = ad::add(ad::sub(log_shape, log_scale), ad::mul(k_minus_1, z));
    } else {
        log_cum_hazard = z;
        log_hazard = ad::neg(log_scale);
    }

    Var log_lik = ad::sub(ad::mul(events, log_hazard), ad::exp(log_cum_hazard));
    Var total = ad::neg(ad::sum(log_lik));
    if (reduction == Reduction::Mean) total = ad::scale(total, 1.0 / static_cast<double>(n));
    return total;
}

Var survival_loss(LossKind kind, Var theta, std::span<const std::uint8_t> event, std::span<const double> time,
                  Reduction reduction) {
    switch (kind) {
        case LossKind::CoxBreslow:
            return cox_neg_partial_log_likelihood(theta, event, time, TieMethod::Breslow, reduction);
        case LossKind::CoxEfron:
            return cox_neg_partial_log_likelihood(theta, event, time, TieMethod::Efron, reduction);
        case LossKind::Weibull:
            return weibull_neg_log_likelihood(theta, event, time, reduction);
    }
    throw Error(ErrorCode::BadConfig, "unknown loss kind");
}

Matrix weibull_log_cumulative_hazard(const Matrix& log_params, std::span<const double> eval_times) {
    if (log_params.cols() != 1 && log_params.cols() != 2)
        throw Error(ErrorCode::ShapeMismatch, "Weibull parameters need 1 or 2 columns");
    for (double t : eval_times)
        if (!(t > 0.0)) throw Error(ErrorCode::DomainError, "evaluation times must be > 0");
    Matrix out(log_params.rows(), eval_times.size());
    for (std::size_t i = 0; i < log_params.rows(); ++i) {
        const double log_scale = log_params(i, 0);
        const double shape = log_params.cols() == 2 ? std::exp(log_params(i, 1)) : 1.0;
        for (std::size_t k = 0; k < eval_times.size(); ++k)
            out(i, k) = shape * (std::log(eval_times[k]) - log_scale);
    }
    return out;
}

SurvivalProbabilities weibull_survival(const Matrix& log_params, std::span<const double> eval_times) {
    Matrix s = weibull_log_cumulative_hazard(log_params, eval_times);
    for (auto& v : s.flat()) v = std::exp(-std::exp(v));
    return {std::move(s)};
}

}  // namespace survkit
