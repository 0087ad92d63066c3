#pragma once

// Right-censored survival data: event indicators, observed times, covariates.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "survkit/matrix.hpp"

namespace survkit {

using Events = std::vector<std::uint8_t>;

struct SurvivalDataset {
    Events event;              // 1 = event observed, 0 = censored
    std::vector<double> time;  // event or censoring time, > 0
    Matrix covariates;         // n x p
    std::vector<std::string> covariate_names;

    std::size_t size() const { return time.size(); }
    std::size_t num_covariates() const { return covariates.cols(); }
};

// Checks every invariant of the dataset and returns it unchanged. Throws
// survkit::Error naming the first failing row and rule.
const SurvivalDataset& validate(const SurvivalDataset& dataset);
SurvivalDataset validate(SurvivalDataset&& dataset);

// Shared checks for the (event, time) pair used by losses and metrics.
void check_survival_pair(std::span<const std::uint8_t> event, std::span<const double> time);

std::size_t event_count(std::span<const std::uint8_t> event);

// 64-bit FNV-1a over time, event and covariate values in row order.
std::uint64_t fingerprint(const SurvivalDataset& dataset);
inline std::size_t event_count(const SurvivalDataset& d) { return event_count(d.event); }

struct CsvSchema {
    std::string time_column = "time";
    std::string event_column = "event";
    // Empty means every column other than time and event, in file order.
    std::vector<std::string> covariate_columns;
};

SurvivalDataset read_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
SurvivalDataset parse_csv(const std::string& text, const CsvSchema& schema = {});

// Header `time,event,<covariates...>`; numbers use the shortest round-trip
// decimal form, so parse_csv(format_csv(d)) reproduces d exactly.
std::string format_csv(const SurvivalDataset& dataset);
void write_csv(const SurvivalDataset& dataset, const std::filesystem::path& path);

// Higher value = higher risk. Time-independent scores are n x 1; time-dependent
// scores are n x T with column k belonging to the k-th evaluation time.
struct RiskScores {
    Matrix values;
    bool time_dependent = false;

    static RiskScores independent(std::span<const double> scores);
    static RiskScores dependent(Matrix scores);

    std::size_t size() const { return values.rows(); }
    double at(std::size_t subject, std::size_t time_index) const {
        return time_dependent ? values(subject, time_index) : values(subject, 0);
    }
};

enum class WeightProvenance { Uniform, Ipcw, Custom };

struct SubjectWeights {
    std::vector<double> weights;
    WeightProvenance provenance = WeightProvenance::Custom;

    static SubjectWeights uniform(std::size_t n);
    static SubjectWeights custom(std::vector<double> w);
};

// Predicted survival probabilities, n x T aligned to evaluation times.
struct SurvivalProbabilities {
    Matrix values;
};

void check_weights(const SubjectWeights& w, std::size_t n);
void check_survival_probabilities(const SurvivalProbabilities& s);

}  // namespace survkit
