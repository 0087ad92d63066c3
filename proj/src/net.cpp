#include "survkit/net.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "survkit/error.hpp"

namespace survkit {

namespace {

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
    Matrix out(x.rows(), w.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t k = 0; k < x.cols(); ++k) {
            const double xv = x(i, k);
            for (std::size_t j = 0; j < w.cols(); ++j) out(i, j) += xv * w(k, j);
        }
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += b(0, j);
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

[[noreturn]] void bad_checkpoint(const std::string& what) {
    throw Error(ErrorCode::CheckpointFormat, "checkpoint: " + what);
}

std::string expect_word(std::istream& in, const char* context) {
    std::string w;
    if (!(in >> w)) bad_checkpoint(std::string("unexpected end of file reading ") + context);
    return w;
}

void expect_literal(std::istream& in, const std::string& literal) {
    auto w = expect_word(in, literal.c_str());
    if (w != literal) bad_checkpoint("expected \"" + literal + "\", found \"" + w + "\"");
}

std::size_t read_size(std::istream& in, const char* context) {
    auto w = expect_word(in, context);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || ptr != w.data() + w.size()) bad_checkpoint(std::string("bad ") + context + " \"" + w + "\"");
    return v;
}

double read_double(std::istream& in, const char* context) {
    auto w = expect_word(in, context);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || ptr != w.data() + w.size() || !std::isfinite(v))
        bad_checkpoint(std::string("bad ") + context + " \"" + w + "\"");
    return v;
}

void write_matrix(std::ostream& out, const Matrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? " " : "") << format_double(m(r, c));
        out << '\n';
    }
}

Matrix read_matrix(std::istream& in, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (auto& v : m.flat()) v = read_double(in, "parameter value");
    return m;
}

}  // namespace

Mlp Mlp::init(const std::vector<std::size_t>& sizes, std::uint64_t seed) {
    if (sizes.size() < 2) throw Error(ErrorCode::BadArchitecture, "need at least input and output sizes");
    for (std::size_t s : sizes)
        if (s < 1) throw Error(ErrorCode::BadArchitecture, "layer sizes must be >= 1");

    std::mt19937_64 rng(seed);
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Matrix w(sizes[l], sizes[l + 1]);
        for (auto& v : w.flat()) v = dist(rng);
        layers.push_back(DenseLayer{Parameter(std::move(w)), Parameter(Matrix(1, sizes[l + 1]))});
    }
    return from_layers(std::move(layers));
}

Mlp Mlp::from_layers(std::vector<DenseLayer> layers) {
    if (layers.empty()) throw Error(ErrorCode::BadArchitecture, "network has no layers");
    Mlp m;
    m.sizes_.push_back(layers.front().weight.value.rows());
    for (const auto& layer : layers) {
        const auto& w = layer.weight.value;
        const auto& b = layer.bias.value;
        if (w.rows() != m.sizes_.back() || w.cols() == 0 || b.rows() != 1 || b.cols() != w.cols())
            throw Error(ErrorCode::BadArchitecture, "layer shapes do not chain");
        m.sizes_.push_back(w.cols());
    }
    if (m.sizes_.front() == 0) throw Error(ErrorCode::BadArchitecture, "layer sizes must be >= 1");
    m.layers_ = std::move(layers);
    return m;
}

Var Mlp::forward(Tape& tape, const Matrix& x) {
    if (x.cols() != input_dim())
        throw Error(ErrorCode::ShapeMismatch, "network expects " + std::to_string(input_dim()) +
                                                  " covariates, got " + std::to_string(x.cols()));
    Var h = tape.constant(x);
    Var ones = tape.constant(Matrix(x.rows(), 1, 1.0));
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Var w = tape.parameter(layers_[l].weight);
        Var b = tape.parameter(layers_[l].bias);
        h = ad::add(ad::matmul(h, w), ad::matmul(ones, b));
        if (l + 1 < layers_.size()) h = ad::relu(h);
    }
    return h;
}

Matrix Mlp::predict(const Matrix& x) const {
    if (x.cols() != input_dim())
        throw Error(ErrorCode::ShapeMismatch, "network expects " + std::to_string(input_dim()) +
                                                  " covariates, got " + std::to_string(x.cols()));
    Matrix h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        h = affine(h, layers_[l].weight.value, layers_[l].bias.value);
        if (l + 1 < layers_.size())
            for (auto& v : h.flat()) v = v > 0.0 ? v : 0.0;
    }
    return h;
}

std::vector<Parameter*> Mlp::parameters() {
    std::vector<Parameter*> out;
    for (auto& layer : layers_) {
        out.push_back(&layer.weight);
        out.push_back(&layer.bias);
    }
    return out;
}

void Mlp::zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
}

void adam_step(AdamState& state, const std::vector<Parameter*>& params) {
    if (state.first_moment.empty()) {
        for (auto* p : params) {
            state.first_moment.emplace_back(p->value.rows(), p->value.cols());
            state.second_moment.emplace_back(p->value.rows(), p->value.cols());
        }
    }
    if (state.first_moment.size() != params.size())
        throw Error(ErrorCode::ShapeMismatch, "optimizer state tracks a different parameter count");

    const auto& c = state.config;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(c.beta1, t);
    const double bias2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = *params[k];
        auto& m = state.first_moment[k];
        auto& v = state.second_moment[k];
        if (!p.grad.same_shape(p.value) || !m.same_shape(p.value))
            throw Error(ErrorCode::ShapeMismatch, "gradient shape differs from parameter shape");
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            p.value[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
        }
    }
}

void sgd_step(double learning_rate, const std::vector<Parameter*>& params) {
    for (auto* p : params) {
        if (!p->grad.same_shape(p->value))
            throw Error(ErrorCode::ShapeMismatch, "gradient shape differs from parameter shape");
        for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= learning_rate * p->grad[i];
    }
}

void check_config(const TrainConfig& config) {
    if (config.epochs < 1) throw Error(ErrorCode::BadConfig, "epochs must be >= 1");
    if (config.batch_size < 1) throw Error(ErrorCode::BadConfig, "batch size must be >= 1");
    if (!(config.optimizer.learning_rate > 0.0)) throw Error(ErrorCode::BadConfig, "learning rate must be > 0");
    if (config.momentum) {
        const double m = config.momentum->rate;
        if (!(m >= 0.0 && m <= 1.0)) throw Error(ErrorCode::BadConfig, "momentum rate must lie in [0, 1]");
    }
}

TrainResult train_loop(const SurvivalDataset& data, const TrainConfig& config, const std::vector<Parameter*>& params,
                       const BatchObjective& objective, const std::function<void()>& after_step) {
    check_config(config);
    validate(data);

    const std::size_t n = data.size();
    const std::size_t p = data.num_covariates();
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    AdamState adam{config.optimizer, {}, {}, 0};
    TrainResult result;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t evaluated = 0;

        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t len = std::min(config.batch_size, n - start);
            Matrix x(len, p);
            Events event(len);
            std::vector<double> time(len);
            for (std::size_t r = 0; r < len; ++r) {
                const std::size_t src = order[start + r];
                for (std::size_t c = 0; c < p; ++c) x(r, c) = data.covariates(src, c);
                event[r] = data.event[src];
                time[r] = data.time[src];
            }

            for (auto* prm : params) prm->zero_grad();
            Tape tape;
            Var loss;
            try {
                loss = objective(tape, x, event, time);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NoEvents) throw;
                ++result.skipped_batches;
                if (config.on_warning)
                    config.on_warning("epoch " + std::to_string(epoch) + ": skipped batch at offset " +
                                      std::to_string(start) + " with no events");
                continue;
            }
            const double value = loss.item();
            if (!std::isfinite(value))
                throw Error(ErrorCode::DomainError, "non-finite loss in epoch " + std::to_string(epoch));
            tape.backward(loss);

            if (config.optimizer.kind == OptimizerKind::Adam)
                adam_step(adam, params);
            else
                sgd_step(config.optimizer.learning_rate, params);
            if (after_step) after_step();

            loss_sum += value;
            ++evaluated;
            result.max_effective_batch = std::max(result.max_effective_batch, len);
        }
        if (evaluated == 0)
            throw Error(ErrorCode::NoEvents, "epoch " + std::to_string(epoch) + " had no batch with an event");
        result.epoch_loss.push_back(loss_sum / static_cast<double>(evaluated));
    }
    return result;
}

TrainResult train(const SurvivalDataset& data, Mlp& model, const TrainConfig& config) {
    if (model.input_dim() != data.num_covariates())
        throw Error(ErrorCode::ShapeMismatch, "network input size " + std::to_string(model.input_dim()) +
                                                  " does not match " + std::to_string(data.num_covariates()) +
                                                  " covariates");
    if (model.output_dim() != loss_output_dim(config.loss))
        throw Error(ErrorCode::BadArchitecture, std::string(to_string(config.loss)) + " needs " +
                                                    std::to_string(loss_output_dim(config.loss)) +
                                                    " network outputs, got " + std::to_string(model.output_dim()));
    auto objective = [&](Tape& tape, const Matrix& x, std::span<const std::uint8_t> event,
                         std::span<const double> time) {
        return survival_loss(config.loss, model.forward(tape, x), event, time, config.reduction);
    };
    return train_loop(data, config, model.parameters(), objective);
}

void write_mlp(std::ostream& out, const Mlp& model) {
    out << "survkit-mlp 1\n";
    out << "sizes " << model.sizes().size();
    for (auto s : model.sizes()) out << ' ' << s;
    out << '\n';
    for (std::size_t l = 0; l < model.layers().size(); ++l) {
        const auto& w = model.layers()[l].weight.value;
        const auto& b = model.layers()[l].bias.value;
        out << "layer " << l << " weight " << w.rows() << ' ' << w.cols() << '\n';
        write_matrix(out, w);
        out << "layer " << l << " bias " << b.rows() << ' ' << b.cols() << '\n';
        write_matrix(out, b);
    }
}

Mlp read_mlp(std::istream& in) {
    expect_literal(in, "survkit-mlp");
    if (read_size(in, "version") != 1) bad_checkpoint("unsupported network version");
    expect_literal(in, "sizes");
    const std::size_t k = read_size(in, "size count");
    if (k < 2 || k > 1024) bad_checkpoint("bad size count");
    std::vector<std::size_t> sizes(k);
    for (auto& s : sizes) s = read_size(in, "layer size");

    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < k; ++l) {
        expect_literal(in, "layer");
        if (read_size(in, "layer index") != l) bad_checkpoint("layers out of order");
        expect_literal(in, "weight");
        const std::size_t wr = read_size(in, "rows"), wc = read_size(in, "cols");
        if (wr != sizes[l] || wc != sizes[l + 1]) bad_checkpoint("weight shape disagrees with sizes");
        Matrix w = read_matrix(in, wr, wc);
        expect_literal(in, "layer");
        if (read_size(in, "layer index") != l) bad_checkpoint("layers out of order");
        expect_literal(in, "bias");
        const std::size_t br = read_size(in, "rows"), bc = read_size(in, "cols");
        if (br != 1 || bc != sizes[l + 1]) bad_checkpoint("bias shape disagrees with sizes");
        Matrix b = read_matrix(in, br, bc);
        layers.push_back(DenseLayer{Parameter(std::move(w)), Parameter(std::move(b))});
    }
    try {
        return Mlp::from_layers(std::move(layers));
    } catch (const Error& e) {
        bad_checkpoint(e.what());
    }
}

std::string format_checkpoint(const Checkpoint& ckpt) {
    std::ostringstream out;
    out << "survkit-checkpoint 1\n";
    out << "loss " << to_string(ckpt.loss) << '\n';
    if (ckpt.momentum)
        out << "momentum " << format_double(ckpt.momentum->rate) << ' ' << ckpt.momentum->capacity << '\n';
    else
        out << "momentum none\n";
    out << "network model\n";
    write_mlp(out, ckpt.model);
    if (ckpt.online) {
        out << "network online\n";
        write_mlp(out, *ckpt.online);
    }
    out << "end\n";
    return out.str();
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << format_checkpoint(ckpt);
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

Checkpoint parse_checkpoint(std::istream& in) {
    Checkpoint ckpt;
    expect_literal(in, "survkit-checkpoint");
    if (read_size(in, "version") != 1) bad_checkpoint("unsupported checkpoint version");
    expect_literal(in, "loss");
    try {
        ckpt.loss = parse_loss_kind(expect_word(in, "loss"));
    } catch (const Error& e) {
        bad_checkpoint(e.what());
    }
    expect_literal(in, "momentum");
    auto m = expect_word(in, "momentum");
    if (m != "none") {
        std::istringstream rate_in(m);
        MomentumConfig mc;
        mc.rate = read_double(rate_in, "momentum rate");
        mc.capacity = read_size(in, "bank capacity");
        ckpt.momentum = mc;
    }
    expect_literal(in, "network");
    expect_literal(in, "model");
    ckpt.model = read_mlp(in);
    auto next = expect_word(in, "end");
    if (next == "network") {
        expect_literal(in, "online");
        ckpt.online = read_mlp(in);
        next = expect_word(in, "end");
    }
    if (next != "end") bad_checkpoint("expected \"end\", found \"" + next + "\"");
    if (ckpt.model.output_dim() != loss_output_dim(ckpt.loss))
        bad_checkpoint("network output size does not match the loss");
    return ckpt;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return parse_checkpoint(in);
}

}  // namespace survkit
