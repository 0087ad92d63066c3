#pragma once

// Feed-forward network from covariates to survival-model parameters, with an
// Adam/SGD optimizer and a mini-batch training loop.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "survkit/autodiff.hpp"
#include "survkit/losses.hpp"
#include "survkit/survdata.hpp"

namespace survkit {

struct DenseLayer {
    Parameter weight;  // fan_in x fan_out
    Parameter bias;    // 1 x fan_out
};

// Layers sizes[0] -> sizes[1] -> ... -> sizes.back(), relu between layers and
// a linear output.
class Mlp {
public:
    Mlp() = default;

    // Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
    static Mlp init(const std::vector<std::size_t>& sizes, std::uint64_t seed);
    static Mlp from_layers(std::vector<DenseLayer> layers);

    Var forward(Tape& tape, const Matrix& x);
    Matrix predict(const Matrix& x) const;  // same computation, no tape

    const std::vector<std::size_t>& sizes() const { return sizes_; }
    std::size_t input_dim() const { return sizes_.front(); }
    std::size_t output_dim() const { return sizes_.back(); }

    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<Parameter*> parameters();
    void zero_grad();

private:
    std::vector<std::size_t> sizes_;
    std::vector<DenseLayer> layers_;
};

enum class OptimizerKind { Adam, Sgd };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    OptimizerConfig config;
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    std::uint64_t step = 0;
};

// Bias-corrected Adam update applied in place to every parameter value from its
// accumulated grad. Moments are allocated on the first call.
void adam_step(AdamState& state, const std::vector<Parameter*>& params);
void sgd_step(double learning_rate, const std::vector<Parameter*>& params);

struct MomentumConfig {
    double rate = 0.999;         // EMA weight on the old target
    std::size_t capacity = 512;  // memory bank size
};

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
    bool shuffle = true;
    LossKind loss = LossKind::CoxEfron;
    Reduction reduction = Reduction::Mean;
    OptimizerConfig optimizer;
    std::optional<MomentumConfig> momentum;
    // Receives a message for each skipped batch; may be empty.
    std::function<void(const std::string&)> on_warning;
};

void check_config(const TrainConfig& config);

struct TrainResult {
    std::vector<double> epoch_loss;  // mean over the epoch's evaluated batches
    std::size_t skipped_batches = 0;
    std::size_t max_effective_batch = 0;
};

// Loss for one mini-batch, recorded on `tape`. Called with the batch rows.
using BatchObjective = std::function<Var(Tape& tape, const Matrix& x, std::span<const std::uint8_t> event,
                                         std::span<const double> time)>;

// Generic epoch/batch loop shared by plain and momentum training. `params` are
// zeroed, differentiated and stepped per batch; `after_step` runs after each
// optimizer update. Cox batches without events are skipped.
TrainResult train_loop(const SurvivalDataset& data, const TrainConfig& config, const std::vector<Parameter*>& params,
                       const BatchObjective& objective, const std::function<void()>& after_step = {});

TrainResult train(const SurvivalDataset& data, Mlp& model, const TrainConfig& config);

// Text checkpoint:
//   survkit-mlp 1
//   sizes <k> <s0> ... <sk-1>
//   layer <i> weight <rows> <cols>
//   <row-major values, one row per line>
//   layer <i> bias 1 <cols>
//   <values>
// Values use shortest round-trip decimal, so write/read is exact.
void write_mlp(std::ostream& out, const Mlp& model);
Mlp read_mlp(std::istream& in);

// Self-describing model file: the loss the network was trained for, the
// inference network and, for momentum training, the online network too.
//   survkit-checkpoint 1
//   loss <cox-breslow|cox-efron|weibull>
//   momentum none | momentum <rate> <capacity>
//   network model
//   <mlp block>
//   [network online
//   <mlp block>]
//   end
struct Checkpoint {
    LossKind loss = LossKind::CoxEfron;
    Mlp model;  // network used for inference (the target network under momentum)
    std::optional<MomentumConfig> momentum;
    std::optional<Mlp> online;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
std::string format_checkpoint(const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);
Checkpoint parse_checkpoint(std::istream& in);

}  // namespace survkit
