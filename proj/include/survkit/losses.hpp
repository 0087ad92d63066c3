#pragma once

// Negative log-likelihood losses, differentiable through the autodiff tape.
// Everything is evaluated on the log scale: risk-set sums go through
// logsumexp / logcumsumexp and Weibull terms through exp(k * (log t - log lambda)).

#include <cstdint>
#include <span>
#include <string_view>

#include "survkit/autodiff.hpp"
#include "survkit/survdata.hpp"

namespace survkit {

enum class TieMethod { Breslow, Efron };

// Mean is over events (Cox) or over subjects (Weibull).
enum class Reduction { Mean, Sum };

enum class LossKind { CoxBreslow, CoxEfron, Weibull };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);
std::size_t loss_output_dim(LossKind kind);  // 1 for Cox, 2 for Weibull

// `log_hazards` is an n x 1 node of log relative hazards. Risk sets use
// time_j >= tau. Throws NoEvents when no subject has event = 1.
Var cox_neg_partial_log_likelihood(Var log_hazards, std::span<const std::uint8_t> event,
                                   std::span<const double> time, TieMethod ties = TieMethod::Efron,
                                   Reduction reduction = Reduction::Mean);

// `log_params` is n x 2 (log scale, log shape) or n x 1 (log scale, shape fixed at 1).
Var weibull_neg_log_likelihood(Var log_params, std::span<const std::uint8_t> event, std::span<const double> time,
                               Reduction reduction = Reduction::Mean);

Var survival_loss(LossKind kind, Var theta, std::span<const std::uint8_t> event, std::span<const double> time,
                  Reduction reduction = Reduction::Mean);

// S(t | i) = exp(-(t / lambda_i)^k_i) for every subject and evaluation time.
SurvivalProbabilities weibull_survival(const Matrix& log_params, std::span<const double> eval_times);

// Log cumulative hazard k_i (log t - log lambda_i); monotone in 1 - S(t | i), so
// it serves as a time-dependent risk score.
Matrix weibull_log_cumulative_hazard(const Matrix& log_params, std::span<const double> eval_times);

}  // namespace survkit
