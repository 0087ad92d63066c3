// survkit command-line interface: simulate, fit, evaluate, compare.
//
// Every command prints a single JSON document on stdout. Errors go to stderr as
// one line of JSON with a `code` field; the exit status is 1 for usage errors,
// 2 for data errors and 3 for numeric errors.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "survkit/error.hpp"
#include "survkit/km.hpp"
#include "survkit/losses.hpp"
#include "survkit/metrics.hpp"
#include "survkit/momentum.hpp"
#include "survkit/net.hpp"
#include "survkit/report.hpp"
#include "survkit/simulate.hpp"
#include "survkit/survdata.hpp"

namespace fs = std::filesystem;
using namespace survkit;

namespace {

struct Common {
    bool pretty = false;
    bool timing = false;
};

struct SchemaFlags {
    std::string time_column = "time";
    std::string event_column = "event";
    std::vector<std::string> covariates;

    CsvSchema schema() const { return {time_column, event_column, covariates}; }

    void attach(CLI::App* cmd) {
        cmd->add_option("--time-column", time_column, "Name of the time column")->capture_default_str();
        cmd->add_option("--event-column", event_column, "Name of the event column")->capture_default_str();
        cmd->add_option("--covariates", covariates, "Covariate columns (default: all other columns)")
            ->delimiter(',');
    }
};

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

Json dataset_json(const fs::path& path, const SurvivalDataset& d) {
    Json j;
    j["path"] = path.string();
    j["rows"] = d.size();
    j["events"] = event_count(d);
    j["covariates"] = d.covariate_names;
    j["hash"] = hex(fingerprint(d));
    return j;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

void emit(const Json& report, const Common& common, const std::optional<fs::path>& copy_to = std::nullopt) {
    const std::string text = (common.pretty ? report.dump(2) : report.dump()) + "\n";
    if (copy_to) write_text(*copy_to, text);
    std::cout << text;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---- simulate -------------------------------------------------------------

struct SimulateFlags {
    SimConfig config;
    std::vector<double> beta;
    std::string ties = "none";
    fs::path out;
    std::optional<fs::path> truth;
};

std::optional<double> parse_ties(const std::string& text) {
    if (text == "none") return std::nullopt;
    if (text.rfind("grid:", 0) == 0) {
        try {
            std::size_t used = 0;
            const double g = std::stod(text.substr(5), &used);
            if (used == text.size() - 5) return g;
        } catch (const std::exception&) {
        }
    }
    throw Error(ErrorCode::BadConfig, "--ties expects none or grid:<width>, got '" + text + "'");
}

int cmd_simulate(SimulateFlags& f, const Common& common) {
    const auto start = std::chrono::steady_clock::now();
    SimConfig cfg = f.config;
    cfg.beta = f.beta.empty() ? std::vector<double>(cfg.p, 1.0) : f.beta;
    cfg.tie_grid = parse_ties(f.ties);
    auto sim = simulate_weibull_cox(cfg);

    fs::path truth_path = f.truth ? *f.truth : fs::path(f.out).replace_extension(".truth.json");
    write_csv(sim.data, f.out);
    write_text(truth_path, ground_truth_json(sim.truth) + "\n");

    Json config;
    config["n"] = cfg.n;
    config["p"] = cfg.p;
    config["beta"] = cfg.beta;
    config["shape"] = cfg.shape;
    config["scale"] = cfg.scale;
    config["censoring_rate"] = cfg.censoring_rate;
    config["ties"] = f.ties;
    config["seed"] = cfg.seed;

    Json report;
    report["command"] = "simulate";
    report["config"] = config;
    report["dataset"] = dataset_json(f.out, sim.data);
    report["truth"] = truth_path.string();
    report["event_fraction"] = static_cast<double>(event_count(sim.data)) / static_cast<double>(sim.data.size());
    report["seed"] = cfg.seed;
    if (common.timing) report["duration_seconds"] = seconds_since(start);
    emit(report, common);
    return 0;
}

// ---- fit ------------------------------------------------------------------

struct FitFlags {
    fs::path train;
    fs::path out;
    std::optional<fs::path> report;
    std::string loss = "cox-efron";
    std::vector<std::size_t> arch;
    std::size_t epochs = 100;
    std::size_t batch = 64;
    double lr = 1e-3;
    std::string optimizer = "adam";
    std::string reduction = "mean";
    std::optional<std::string> momentum;
    std::uint64_t seed = 0;
    bool no_shuffle = false;
    SchemaFlags schema;
};

MomentumConfig parse_momentum(const std::string& text) {
    const auto colon = text.find(':');
    try {
        if (colon != std::string::npos) {
            std::size_t used_rate = 0, used_cap = 0;
            const double rate = std::stod(text.substr(0, colon), &used_rate);
            const std::string cap = text.substr(colon + 1);
            const unsigned long long capacity = std::stoull(cap, &used_cap);
            if (used_rate == colon && used_cap == cap.size() && cap.find('-') == std::string::npos)
                return {rate, static_cast<std::size_t>(capacity)};
        }
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::BadConfig, "--momentum expects <rate>:<capacity>, got '" + text + "'");
}

Json coefficients(const Mlp& model, LossKind loss, const std::vector<std::string>& names) {
    const auto& layer = model.layers().front();
    auto column = [&](std::size_t o) {
        Json c;
        for (std::size_t i = 0; i < names.size(); ++i) c[names[i]] = layer.weight.value(i, o);
        c["(intercept)"] = layer.bias.value(0, o);
        return c;
    };
    if (loss != LossKind::Weibull) return column(0);
    Json j;
    j["log_scale"] = column(0);
    j["log_shape"] = column(1);
    return j;
}

int cmd_fit(FitFlags& f, const Common& common) {
    const auto start = std::chrono::steady_clock::now();
    const SurvivalDataset data = read_csv(f.train, f.schema.schema());
    const LossKind loss = parse_loss_kind(f.loss);

    std::vector<std::size_t> sizes{data.num_covariates()};
    if (f.arch.empty()) sizes.push_back(loss_output_dim(loss));
    else sizes.insert(sizes.end(), f.arch.begin(), f.arch.end());
    if (sizes.back() != loss_output_dim(loss))
        throw Error(ErrorCode::BadArchitecture, f.loss + " needs " + std::to_string(loss_output_dim(loss)) +
                                                    " network output(s) but --arch ends in " +
                                                    std::to_string(sizes.back()));

    TrainConfig cfg;
    cfg.epochs = f.epochs;
    cfg.batch_size = f.batch;
    cfg.seed = f.seed;
    cfg.shuffle = !f.no_shuffle;
    cfg.loss = loss;
    if (f.reduction == "mean") cfg.reduction = Reduction::Mean;
    else if (f.reduction == "sum") cfg.reduction = Reduction::Sum;
    else throw Error(ErrorCode::BadConfig, "--reduction expects mean or sum");
    if (f.optimizer == "adam") cfg.optimizer.kind = OptimizerKind::Adam;
    else if (f.optimizer == "sgd") cfg.optimizer.kind = OptimizerKind::Sgd;
    else throw Error(ErrorCode::BadConfig, "--optimizer expects adam or sgd");
    cfg.optimizer.learning_rate = f.lr;
    if (f.momentum) cfg.momentum = parse_momentum(*f.momentum);
    std::vector<std::string> warnings;
    cfg.on_warning = [&](const std::string& w) { warnings.push_back(w); };
    check_config(cfg);

    Mlp model = Mlp::init(sizes, f.seed);
    Checkpoint checkpoint{loss, {}, cfg.momentum, std::nullopt};
    TrainResult result;
    if (cfg.momentum) {
        MomentumPair pair(std::move(model), cfg.momentum->rate);
        result = train_momentum(data, pair, cfg);
        checkpoint.model = pair.target();
        checkpoint.online = pair.online();
    } else {
        result = train(data, model, cfg);
        checkpoint.model = std::move(model);
    }
    write_checkpoint(f.out, checkpoint);

    Json config;
    config["loss"] = f.loss;
    config["arch"] = sizes;
    config["epochs"] = cfg.epochs;
    config["batch"] = cfg.batch_size;
    config["optimizer"] = f.optimizer;
    config["lr"] = cfg.optimizer.learning_rate;
    config["reduction"] = f.reduction;
    config["shuffle"] = cfg.shuffle;
    if (cfg.momentum) config["momentum"] = {{"rate", cfg.momentum->rate}, {"capacity", cfg.momentum->capacity}};
    else config["momentum"] = nullptr;
    config["seed"] = cfg.seed;

    Json report;
    report["command"] = "fit";
    report["config"] = config;
    report["dataset"] = dataset_json(f.train, data);
    report["epoch_loss"] = result.epoch_loss;
    report["final_loss"] = result.epoch_loss.back();
    report["skipped_batches"] = result.skipped_batches;
    report["warnings"] = warnings;
    if (cfg.momentum) {
        report["effective_batch"] = {{"batch", cfg.batch_size},
                                     {"bank_capacity", cfg.momentum->capacity},
                                     {"max_observed", result.max_effective_batch}};
    }
    if (checkpoint.model.layers().size() == 1)
        report["coefficients"] = coefficients(checkpoint.model, loss, data.covariate_names);
    report["checkpoint"] = f.out.string();
    report["seed"] = cfg.seed;
    if (common.timing) report["duration_seconds"] = seconds_since(start);
    emit(report, common, f.report);
    return 0;
}

// ---- evaluate / compare ---------------------------------------------------

struct MetricFlags {
    fs::path test;
    std::string metric = "cindex";
    bool ipcw = false;
    std::optional<fs::path> ipcw_from;
    std::vector<double> new_time;
    double alpha = 0.05;
    std::optional<double> null_value;
    std::optional<std::size_t> bootstrap;
    std::uint64_t seed = 0;
    std::optional<std::string> alternative;
    std::string ci = "default";
    std::optional<fs::path> out;
    SchemaFlags schema;

    void attach(CLI::App* cmd) {
        cmd->add_option("--test", test, "Test CSV")->required();
        cmd->add_option("--metric", metric, "auc, cindex or brier")
            ->check(CLI::IsMember({"auc", "cindex", "brier"}))
            ->capture_default_str();
        cmd->add_flag("--ipcw", ipcw, "Weight subjects by inverse probability of censoring");
        cmd->add_option("--ipcw-from", ipcw_from, "CSV used to estimate the censoring distribution");
        cmd->add_option("--new-time", new_time, "Evaluation times, comma separated")->delimiter(',');
        cmd->add_option("--alpha", alpha, "Significance level")->capture_default_str();
        cmd->add_option("--B", bootstrap, "Bootstrap replicates");
        cmd->add_option("--seed", seed, "Bootstrap seed")->capture_default_str();
        cmd->add_option("--alternative", alternative,
                        "two_sided, greater or less (default: less for brier, greater otherwise)")
            ->check(CLI::IsMember({"two_sided", "greater", "less"}));
        cmd->add_option("--out", out, "Also write the report to this file");
        schema.attach(cmd);
    }

    // A lower Brier score is better; 0.25 is the score of a constant 0.5 prediction.
    Alternative resolved_alternative() const {
        if (alternative) return parse_alternative(*alternative);
        return metric == "brier" ? Alternative::Less : Alternative::Greater;
    }
    double resolved_null() const { return null_value.value_or(metric == "brier" ? 0.25 : 0.5); }

    MetricOptions options(const CsvSchema& base) const {
        MetricOptions o;
        if (ipcw_from) {
            CsvSchema s = base;
            s.covariate_columns.clear();
            const auto ref = read_csv(*ipcw_from, s);
            o.weighting = Weighting::ipcw_from(censoring_distribution(ref.event, ref.time));
        } else if (ipcw) {
            o.weighting = Weighting::ipcw();
        }
        o.new_time = new_time;
        o.bootstrap = bootstrap;
        o.seed = seed;
        return o;
    }
};

CiMethod parse_ci(const std::string& name) {
    if (name == "default") return CiMethod::Default;
    if (name == "normal") return CiMethod::Normal;
    if (name == "percentile") return CiMethod::Percentile;
    throw Error(ErrorCode::BadConfig, "--ci expects default, normal or percentile");
}

// Cox models score by log hazard. Weibull models score by the log cumulative
// hazard at the evaluation time, which makes their scores time-dependent.
MetricResult run_metric(const Checkpoint& ckpt, const SurvivalDataset& data, const std::string& metric,
                        MetricOptions options) {
    if (ckpt.model.input_dim() != data.num_covariates())
        throw Error(ErrorCode::ShapeMismatch, "model expects " + std::to_string(ckpt.model.input_dim()) +
                                                  " covariates, test data has " +
                                                  std::to_string(data.num_covariates()));
    const bool weibull = ckpt.loss == LossKind::Weibull;
    if (metric == "brier" && !weibull)
        throw Error(ErrorCode::BrierWithCoxModel,
                    "the Brier score needs survival probabilities, which a Cox model does not provide");
    const Matrix theta = ckpt.model.predict(data.covariates);
    const auto resolved_times = [&] {
        return options.new_time.empty() ? default_evaluation_times(data.event, data.time) : options.new_time;
    };

    if (metric == "cindex") {
        auto scores = weibull ? RiskScores::dependent(weibull_log_cumulative_hazard(theta, data.time))
                              : RiskScores::independent(theta.col(0));
        return concordance_index(scores, data.event, data.time, options);
    }
    if (metric == "auc") {
        if (!weibull) return auc(RiskScores::independent(theta.col(0)), data.event, data.time, options);
        options.new_time = resolved_times();
        return auc(RiskScores::dependent(weibull_log_cumulative_hazard(theta, options.new_time)), data.event, data.time,
                   options);
    }
    options.new_time = resolved_times();
    return brier(weibull_survival(theta, options.new_time), data.event, data.time, options);
}

Json model_json(const fs::path& path, const Checkpoint& ckpt) {
    Json j;
    j["path"] = path.string();
    j["loss"] = to_string(ckpt.loss);
    j["arch"] = ckpt.model.sizes();
    return j;
}

struct EvaluateFlags {
    fs::path model;
    MetricFlags metric;
};

int cmd_evaluate(EvaluateFlags& f, const Common& common) {
    const auto start = std::chrono::steady_clock::now();
    const Checkpoint ckpt = read_checkpoint(f.model);
    const CsvSchema schema = f.metric.schema.schema();
    const SurvivalDataset data = read_csv(f.metric.test, schema);
    const MetricResult result = run_metric(ckpt, data, f.metric.metric, f.metric.options(schema));

    ReportOptions ropts;
    ropts.alpha = f.metric.alpha;
    ropts.alternative = f.metric.resolved_alternative();
    ropts.null_value = f.metric.resolved_null();
    ropts.ci_method = parse_ci(f.metric.ci);

    Json report;
    report["command"] = "evaluate";
    report["model"] = model_json(f.model, ckpt);
    report["dataset"] = dataset_json(f.metric.test, data);
    report["result"] = metric_report(result, ropts);
    report["seed"] = f.metric.seed;
    if (common.timing) report["duration_seconds"] = seconds_since(start);
    emit(report, common, f.metric.out);
    return 0;
}

struct CompareFlags {
    fs::path model_a;
    fs::path model_b;
    std::optional<fs::path> test_b;
    MetricFlags metric;
};

int cmd_compare(CompareFlags& f, const Common& common) {
    const auto start = std::chrono::steady_clock::now();
    const Checkpoint a = read_checkpoint(f.model_a);
    const Checkpoint b = read_checkpoint(f.model_b);
    const CsvSchema schema = f.metric.schema.schema();
    const SurvivalDataset data_a = read_csv(f.metric.test, schema);
    const SurvivalDataset data_b = f.test_b ? read_csv(*f.test_b, schema) : data_a;

    // The paired test needs replicates for every metric, the C-index included.
    MetricOptions options = f.metric.options(schema);
    if (!options.bootstrap) options.bootstrap = 1000;
    const MetricResult ra = run_metric(a, data_a, f.metric.metric, options);
    const MetricResult rb = run_metric(b, data_b, f.metric.metric, options);
    const Alternative alternative = f.metric.resolved_alternative();
    const Comparison cmp = compare_detailed(ra, rb, alternative);

    Json report;
    report["command"] = "compare";
    report["model_a"] = model_json(f.model_a, a);
    report["model_b"] = model_json(f.model_b, b);
    report["dataset"] = dataset_json(f.metric.test, data_a);
    if (f.test_b) report["dataset_b"] = dataset_json(*f.test_b, data_b);
    report["result"] = comparison_report(ra, rb, cmp, alternative);
    report["seed"] = f.metric.seed;
    if (common.timing) report["duration_seconds"] = seconds_since(start);
    emit(report, common, f.metric.out);
    return 0;
}

void print_error(const std::string& code, const std::string& message, std::optional<std::size_t> row = {}) {
    Json j;
    j["code"] = code;
    j["message"] = message;
    if (row) j["row"] = *row;
    std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"survkit: deep survival models, losses and evaluation metrics"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_flag("--pretty", common.pretty, "Indent JSON output");
    app.add_flag("--timing", common.timing, "Add wall-clock duration to reports");

    SimulateFlags sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a Weibull-Cox dataset with known ground truth");
    simulate->add_option("--n", sim.config.n, "Subjects")->capture_default_str();
    simulate->add_option("--p", sim.config.p, "Covariates")->capture_default_str();
    simulate->add_option("--beta", sim.beta, "Coefficients, comma separated (default: all 1)")->delimiter(',');
    simulate->add_option("--shape", sim.config.shape, "Baseline Weibull shape")->capture_default_str();
    simulate->add_option("--scale", sim.config.scale, "Baseline Weibull scale")->capture_default_str();
    simulate->add_option("--censoring-rate", sim.config.censoring_rate, "Exponential censoring rate")
        ->capture_default_str();
    simulate->add_option("--ties", sim.ties, "none or grid:<width>")->capture_default_str();
    simulate->add_option("--seed", sim.config.seed, "Random seed")->capture_default_str();
    simulate->add_option("--out", sim.out, "Output CSV")->required();
    simulate->add_option("--truth", sim.truth, "Ground-truth JSON (default: <out>.truth.json)");

    FitFlags fit;
    auto* fit_cmd = app.add_subcommand("fit", "Train a network on a CSV dataset");
    fit_cmd->add_option("--train", fit.train, "Training CSV")->required();
    fit_cmd->add_option("--out", fit.out, "Checkpoint path")->required();
    fit_cmd->add_option("--report", fit.report, "Also write the report to this file");
    fit_cmd->add_option("--loss", fit.loss, "cox-breslow, cox-efron or weibull")
        ->check(CLI::IsMember({"cox-breslow", "cox-efron", "weibull"}))
        ->capture_default_str();
    fit_cmd->add_option("--arch", fit.arch, "Layer widths after the input, last is the output (default: linear)")
        ->delimiter(',');
    fit_cmd->add_option("--epochs", fit.epochs, "Epochs")->capture_default_str();
    fit_cmd->add_option("--batch", fit.batch, "Batch size")->capture_default_str();
    fit_cmd->add_option("--lr", fit.lr, "Learning rate")->capture_default_str();
    fit_cmd->add_option("--optimizer", fit.optimizer, "adam or sgd")->capture_default_str();
    fit_cmd->add_option("--reduction", fit.reduction, "mean or sum")->capture_default_str();
    fit_cmd->add_option("--momentum", fit.momentum, "Momentum rate and bank size, e.g. 0.999:512");
    fit_cmd->add_option("--seed", fit.seed, "Seed for initialization and shuffling")->capture_default_str();
    fit_cmd->add_flag("--no-shuffle", fit.no_shuffle, "Keep file order in every epoch");
    fit.schema.attach(fit_cmd);

    EvaluateFlags eval;
    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on a test CSV");
    eval_cmd->add_option("--model", eval.model, "Checkpoint")->required();
    eval.metric.attach(eval_cmd);
    eval_cmd->add_option("--null", eval.metric.null_value,
                         "Reference value of the one-sample test (default: 0.25 for brier, 0.5 otherwise)");
    eval_cmd->add_option("--ci", eval.metric.ci, "default, normal or percentile")->capture_default_str();

    CompareFlags cmp;
    auto* cmp_cmd = app.add_subcommand("compare", "Paired comparison of two checkpoints");
    cmp_cmd->add_option("--model-a", cmp.model_a, "First checkpoint")->required();
    cmp_cmd->add_option("--model-b", cmp.model_b, "Second checkpoint")->required();
    cmp_cmd->add_option("--test-b", cmp.test_b, "Test CSV for model b (default: --test)");
    cmp.metric.attach(cmp_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error(std::string(to_string(ErrorCode::Usage)), e.what());
        return exit_code(ErrorCode::Usage);
    }

    try {
        if (*simulate) return cmd_simulate(sim, common);
        if (*fit_cmd) return cmd_fit(fit, common);
        if (*eval_cmd) return cmd_evaluate(eval, common);
        return cmd_compare(cmp, common);
    } catch (const Error& e) {
        print_error(std::string(to_string(e.code())), e.what(), e.row());
        return exit_code(e.code());
    } catch (const std::exception& e) {
        print_error("Internal", e.what());
        return 2;
    }
}
