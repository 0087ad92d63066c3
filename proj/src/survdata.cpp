#include "survkit/survdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "survkit/error.hpp"

namespace survkit {

namespace {

std::string row_msg(std::size_t row, const std::string& what) {
    return "row " + std::to_string(row) + ": " + what;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

void check_survival_pair(std::span<const std::uint8_t> event, std::span<const double> time) {
    if (time.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no subjects");
    if (event.size() != time.size())
        throw Error(ErrorCode::LengthMismatch, "event has " + std::to_string(event.size()) +
                                                   " entries but time has " + std::to_string(time.size()));
    for (std::size_t i = 0; i < time.size(); ++i) {
        if (!std::isfinite(time[i])) throw Error(ErrorCode::NonFiniteValue, row_msg(i, "time is not finite"), i);
        if (time[i] <= 0.0) throw Error(ErrorCode::NonPositiveTime, row_msg(i, "time must be > 0"), i);
        if (event[i] > 1) throw Error(ErrorCode::ParseError, row_msg(i, "event must be 0 or 1"), i);
    }
}

const SurvivalDataset& validate(const SurvivalDataset& d) {
    if (d.time.empty() && d.event.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no subjects");
    if (d.covariates.rows() != d.time.size())
        throw Error(ErrorCode::LengthMismatch, "covariates have " + std::to_string(d.covariates.rows()) +
                                                   " rows but time has " + std::to_string(d.time.size()));
    check_survival_pair(d.event, d.time);
    for (std::size_t r = 0; r < d.covariates.rows(); ++r)
        for (std::size_t c = 0; c < d.covariates.cols(); ++c)
            if (!std::isfinite(d.covariates(r, c)))
                throw Error(ErrorCode::NonFiniteValue, row_msg(r, "covariate " + std::to_string(c) + " is not finite"),
                            r);
    if (!d.covariate_names.empty() && d.covariate_names.size() != d.covariates.cols())
        throw Error(ErrorCode::LengthMismatch, "covariate name count does not match covariate columns");
    return d;
}

SurvivalDataset validate(SurvivalDataset&& d) {
    validate(static_cast<const SurvivalDataset&>(d));
    return std::move(d);
}

std::size_t event_count(std::span<const std::uint8_t> event) {
    return static_cast<std::size_t>(std::count_if(event.begin(), event.end(), [](auto e) { return e != 0; }));
}

std::uint64_t fingerprint(const SurvivalDataset& d) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const void* p, std::size_t len) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    for (std::size_t i = 0; i < d.size(); ++i) {
        mix(&d.time[i], sizeof(double));
        mix(&d.event[i], 1);
        for (double x : d.covariates.row(i)) mix(&x, sizeof(double));
    }
    return h;
}

SurvivalDataset parse_csv(const std::string& text, const CsvSchema& schema) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::EmptyDataset, "missing header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    auto header = split(line);
    auto find_col = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw Error(ErrorCode::MissingColumn, "missing column \"" + name + "\"");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t time_col = find_col(schema.time_column);
    const std::size_t event_col = find_col(schema.event_column);

    std::vector<std::size_t> cov_cols;
    SurvivalDataset d;
    if (schema.covariate_columns.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c == time_col || c == event_col) continue;
            cov_cols.push_back(c);
            d.covariate_names.emplace_back(header[c]);
        }
    } else {
        for (const auto& name : schema.covariate_columns) {
            cov_cols.push_back(find_col(name));
            d.covariate_names.push_back(name);
        }
    }

    std::vector<double> cov;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto fields = split(line);
        if (fields.size() != header.size())
            throw Error(ErrorCode::ParseError,
                        row_msg(row, "expected " + std::to_string(header.size()) + " fields, got " +
                                         std::to_string(fields.size())),
                        row);
        double t = 0.0;
        if (!parse_double(fields[time_col], t))
            throw Error(ErrorCode::ParseError, row_msg(row, "column \"" + schema.time_column + "\": cannot parse \"" +
                                                                std::string(fields[time_col]) + "\""),
                        row);
        auto ev = fields[event_col];
        if (ev != "0" && ev != "1")
            throw Error(ErrorCode::ParseError, row_msg(row, "column \"" + schema.event_column +
                                                                "\": expected 0 or 1, got \"" + std::string(ev) + "\""),
                        row);
        for (std::size_t c : cov_cols) {
            double v = 0.0;
            if (!parse_double(fields[c], v))
                throw Error(ErrorCode::ParseError, row_msg(row, "column \"" + std::string(header[c]) +
                                                                    "\": cannot parse \"" + std::string(fields[c]) + "\""),
                            row);
            cov.push_back(v);
        }
        d.time.push_back(t);
        d.event.push_back(ev == "1" ? 1 : 0);
        ++row;
    }
    if (row == 0) throw Error(ErrorCode::EmptyDataset, "no data rows");

    d.covariates = Matrix(row, cov_cols.size());
    std::copy(cov.begin(), cov.end(), d.covariates.flat().begin());
    return validate(std::move(d));
}

SurvivalDataset read_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), schema);
}

std::string format_csv(const SurvivalDataset& d) {
    std::string out = "time,event";
    for (std::size_t c = 0; c < d.num_covariates(); ++c) {
        out += ',';
        out += c < d.covariate_names.size() ? d.covariate_names[c] : "x" + std::to_string(c + 1);
    }
    out += '\n';
    for (std::size_t i = 0; i < d.size(); ++i) {
        out += format_double(d.time[i]);
        out += d.event[i] ? ",1" : ",0";
        for (std::size_t c = 0; c < d.num_covariates(); ++c) {
            out += ',';
            out += format_double(d.covariates(i, c));
        }
        out += '\n';
    }
    return out;
}

void write_csv(const SurvivalDataset& d, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << format_csv(d);
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

RiskScores RiskScores::independent(std::span<const double> scores) {
    return RiskScores{Matrix::column(scores), false};
}

RiskScores RiskScores::dependent(Matrix scores) { return RiskScores{std::move(scores), true}; }

SubjectWeights SubjectWeights::uniform(std::size_t n) {
    return SubjectWeights{std::vector<double>(n, 1.0), WeightProvenance::Uniform};
}

SubjectWeights SubjectWeights::custom(std::vector<double> w) {
    return SubjectWeights{std::move(w), WeightProvenance::Custom};
}

void check_weights(const SubjectWeights& w, std::size_t n) {
    if (w.weights.size() != n)
        throw Error(ErrorCode::LengthMismatch,
                    "weights have " + std::to_string(w.weights.size()) + " entries, expected " + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(w.weights[i]) || w.weights[i] < 0.0)
            throw Error(ErrorCode::NonFiniteValue, row_msg(i, "weight must be finite and >= 0"), i);
}

void check_survival_probabilities(const SurvivalProbabilities& s) {
    const auto& m = s.values;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t k = 0; k < m.cols(); ++k) {
            double v = m(i, k);
            if (!std::isfinite(v) || v < 0.0 || v > 1.0)
                throw Error(ErrorCode::DomainError, row_msg(i, "survival probability outside [0, 1]"), i);
        }
    }
}

}  // namespace survkit
