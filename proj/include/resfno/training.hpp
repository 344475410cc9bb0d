#pragma once

#include "resfno/features.hpp"
#include "resfno/model.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace resfno::training {

struct TrainConfig {
    std::size_t max_epochs = 2000;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t patience = 100;
    double min_delta = 1e-6;  // absolute
    std::uint64_t seed = 1;
    double time_limit_seconds = 0.0;  // 0 = unlimited; wall-clock guard, breaks determinism when hit
    std::size_t eval_chunk = 64;      // validation samples per forward pass

    void validate() const;
};

/// Sum over time, mean over batch. Rank-1 inputs count as a batch of one.
double mse_loss(const Tensor& pred, const Tensor& target);
ad::Var mse_loss(ad::Var pred, ad::Var target);

struct AdamState {
    std::map<std::string, Tensor> m, v;
    std::uint64_t step = 0;

    bool operator==(const AdamState&) const = default;
};

using NamedParams = std::vector<std::pair<std::string, Tensor*>>;

/// One bias-corrected adaptive-moment update. Every parameter needs a gradient entry.
void adam_step(const NamedParams& params, const ad::Gradients& grads, AdamState& state, const TrainConfig& cfg);

enum class StopDecision { Continue, Stop };

struct TrainState {
    model::ModelParams params;
    AdamState adam;
    double best_val = std::numeric_limits<double>::infinity();
    model::ModelParams best_params;
    std::size_t since_improvement = 0;
    std::size_t epoch = 0;       // epochs completed
    std::size_t best_epoch = 0;  // 1-based, 0 before the first validation
};

/// Records one epoch's validation loss. On improvement the parameters are
/// snapshotted; on Stop the snapshot is copied back into `state.params`.
StopDecision early_stop_update(TrainState& state, double val_loss, const TrainConfig& cfg);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;

    bool operator==(const EpochRecord&) const = default;
};

struct TrainResult {
    model::ModelParams params;  // best snapshot
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_val = std::numeric_limits<double>::infinity();
    bool stopped_early = false;
    bool hit_time_limit = false;
};

/// Stacks bundles into batch tensors: seq [B, C, N], scalars [B, 3], target [B, N].
struct Batch {
    Tensor seq, scalars, target;
};
Batch make_batch(std::span<const features::FeatureBundle> set, std::span<const std::size_t> idx);

/// Eq. (5) over the whole set with M = set size, in fixed chunks.
double evaluate_loss(const model::ModelConfig& cfg, const model::ModelParams& params,
                     std::span<const features::FeatureBundle> set, std::size_t chunk = 64);

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train(const model::ModelConfig& model_cfg, model::ModelParams params,
                  std::span<const features::FeatureBundle> train_set, std::span<const features::FeatureBundle> val_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path);

} // namespace resfno::training
