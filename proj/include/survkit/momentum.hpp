#pragma once

// Momentum wrapper for survival losses: an EMA target network fills a FIFO
// memory bank with its outputs, and the loss of each step is evaluated on the
// live batch concatenated with the bank. Only the online network is trained.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "survkit/net.hpp"

namespace survkit {

class MomentumPair {
public:
    // The target starts as an exact copy of `online`.
    MomentumPair(Mlp online, double rate);

    Mlp& online() { return online_; }
    const Mlp& online() const { return online_; }
    const Mlp& target() const { return target_; }
    Mlp& target() { return target_; }
    double rate() const { return rate_; }

    // target <- rate * target + (1 - rate) * online, elementwise.
    void ema_update();

    // Target-network forward pass; nothing is recorded on a tape.
    Matrix infer(const Matrix& x) const { return target_.predict(x); }

private:
    Mlp online_;
    Mlp target_;
    double rate_;
};

struct BankEntry {
    std::vector<double> theta;  // target-network output row, stored as a constant
    std::uint8_t event = 0;
    double time = 0.0;
};

class MemoryBank {
public:
    explicit MemoryBank(std::size_t capacity) : capacity_(capacity) {}

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const std::deque<BankEntry>& entries() const { return entries_; }

    // Appends rows in order, evicting the oldest entries beyond capacity.
    void push(const Matrix& theta, std::span<const std::uint8_t> event, std::span<const double> time);

    Matrix theta() const;  // size x out, oldest first
    Events events() const;
    std::vector<double> times() const;

private:
    std::size_t capacity_;
    std::deque<BankEntry> entries_;
};

using SurvivalLossFn =
    std::function<Var(Var theta, std::span<const std::uint8_t> event, std::span<const double> time)>;

// Loss of online(x) concatenated with the bank contents, then pushes target(x)
// into the bank. The bank is read before it is updated, so no subject appears
// twice within a step.
Var momentum_loss(Tape& tape, MomentumPair& pair, MemoryBank& bank, const Matrix& x,
                  std::span<const std::uint8_t> event, std::span<const double> time, const SurvivalLossFn& base_loss);

// Trains `pair.online()` with config.loss wrapped in momentum_loss. Runs
// ema_update once after every optimizer step. config.momentum supplies the bank
// capacity (the pair carries the EMA rate).
TrainResult train_momentum(const SurvivalDataset& data, MomentumPair& pair, const TrainConfig& config);

}  // namespace survkit
