#include "survkit/momentum.hpp"

#include <algorithm>

#include "survkit/error.hpp"

namespace survkit {

MomentumPair::MomentumPair(Mlp online, double rate) : online_(std::move(online)), target_(online_), rate_(rate) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw Error(ErrorCode::BadConfig, "momentum rate must lie in [0, 1]");
    target_.zero_grad();
}

void MomentumPair::ema_update() {
    auto& src = online_.layers();
    auto& dst = target_.layers();
    auto blend = [this](Matrix& t, const Matrix& o) {
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = rate_ * t[i] + (1.0 - rate_) * o[i];
    };
    for (std::size_t l = 0; l < dst.size(); ++l) {
        blend(dst[l].weight.value, src[l].weight.value);
        blend(dst[l].bias.value, src[l].bias.value);
    }
}

void MemoryBank::push(const Matrix& theta, std::span<const std::uint8_t> event, std::span<const double> time) {
    if (theta.rows() != event.size() || event.size() != time.size())
        throw Error(ErrorCode::LengthMismatch, "memory bank push with mismatched lengths");
    if (capacity_ == 0) return;
    for (std::size_t i = 0; i < theta.rows(); ++i) {
        auto row = theta.row(i);
        entries_.push_back(BankEntry{std::vector<double>(row.begin(), row.end()), event[i], time[i]});
        if (entries_.size() > capacity_) entries_.pop_front();
    }
}

Matrix MemoryBank::theta() const {
    const std::size_t cols = entries_.empty() ? 0 : entries_.front().theta.size();
    Matrix out(entries_.size(), cols);
    for (std::size_t i = 0; i < entries_.size(); ++i)
        std::copy(entries_[i].theta.begin(), entries_[i].theta.end(), out.flat().begin() + static_cast<std::ptrdiff_t>(i * cols));
    return out;
}

Events MemoryBank::events() const {
    Events out;
    for (const auto& e : entries_) out.push_back(e.event);
    return out;
}

std::vector<double> MemoryBank::times() const {
    std::vector<double> out;
    for (const auto& e : entries_) out.push_back(e.time);
    return out;
}

Var momentum_loss(Tape& tape, MomentumPair& pair, MemoryBank& bank, const Matrix& x,
                  std::span<const std::uint8_t> event, std::span<const double> time, const SurvivalLossFn& base_loss) {
    if (x.rows() == 0) throw Error(ErrorCode::EmptyDataset, "momentum loss on an empty batch");
    if (x.rows() != event.size() || event.size() != time.size())
        throw Error(ErrorCode::LengthMismatch, "momentum loss batch with mismatched lengths");
    Var theta = pair.online().forward(tape, x);

    // Censored-only batches still enter the bank, so push before rethrowing.
    struct PushOnExit {
        MomentumPair& pair;
        MemoryBank& bank;
        const Matrix& x;
        std::span<const std::uint8_t> event;
        std::span<const double> time;
        ~PushOnExit() { bank.push(pair.infer(x), event, time); }
    } push_on_exit{pair, bank, x, event, time};

    Var loss;
    if (bank.empty()) {
        loss = base_loss(theta, event, time);
    } else {
        Matrix stored = bank.theta();
        if (stored.cols() != theta.cols())
            throw Error(ErrorCode::ShapeMismatch, "memory bank width differs from network output");
        Var all = ad::concat_rows(theta, tape.constant(std::move(stored)));
        Events all_event(event.begin(), event.end());
        std::vector<double> all_time(time.begin(), time.end());
        auto be = bank.events();
        auto bt = bank.times();
        all_event.insert(all_event.end(), be.begin(), be.end());
        all_time.insert(all_time.end(), bt.begin(), bt.end());
        loss = base_loss(all, all_event, all_time);
    }
    return loss;
}

TrainResult train_momentum(const SurvivalDataset& data, MomentumPair& pair, const TrainConfig& config) {
    auto& online = pair.online();
    if (online.input_dim() != data.num_covariates())
        throw Error(ErrorCode::ShapeMismatch, "network input size does not match the covariates");
    if (online.output_dim() != loss_output_dim(config.loss))
        throw Error(ErrorCode::BadArchitecture, std::string(to_string(config.loss)) + " needs " +
                                                    std::to_string(loss_output_dim(config.loss)) + " network outputs");
    const MomentumConfig settings = config.momentum.value_or(MomentumConfig{});
    MemoryBank bank(settings.capacity);

    std::size_t max_effective = 0;
    SurvivalLossFn base = [&](Var theta, std::span<const std::uint8_t> event, std::span<const double> time) {
        max_effective = std::max(max_effective, theta.rows());
        return survival_loss(config.loss, theta, event, time, config.reduction);
    };
    auto objective = [&](Tape& tape, const Matrix& x, std::span<const std::uint8_t> event,
                         std::span<const double> time) {
        return momentum_loss(tape, pair, bank, x, event, time, base);
    };
    TrainResult result = train_loop(data, config, online.parameters(), objective, [&] { pair.ema_update(); });
    result.max_effective_batch = max_effective;
    return result;
}

}  // namespace survkit
