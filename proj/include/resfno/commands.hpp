#pragma once

#include "resfno/checkpoint.hpp"
#include "resfno/data.hpp"
#include "resfno/metrics.hpp"
#include "resfno/run_config.hpp"
#include "resfno/training.hpp"

#include <iosfwd>

namespace resfno::cli {

/// Seeds derived from the run seed so the split, initialization and batch order use separate streams.
std::uint64_t split_seed(std::uint64_t seed);
std::uint64_t init_seed(std::uint64_t seed);

struct FitOutcome {
    Checkpoint checkpoint;
    training::TrainResult result;
};

/// Splits `train_data` into fit/validation parts, fits the scaler on the fit part and trains.
FitOutcome fit_model(const RunConfig& rc, const data::Dataset& train_data, std::ostream* log = nullptr);

/// Applies the checkpoint's pipeline and scaler to `test_data` and scores it.
metrics::EvalReport evaluate_checkpoint(const Checkpoint& ckpt, const data::Dataset& test_data, std::size_t bins = 50);

struct AblationRow {
    model::Variant variant;
    std::uint64_t seed = 0;
    double mean_r2 = 0.0, mean_nrmse = 0.0;
    std::size_t best_epoch = 0;
    double best_val = 0.0;
};

/// Trains every variant for every seed on `train_data` and scores each on `test_data`.
std::vector<AblationRow> run_ablation(const RunConfig& rc, const data::Dataset& train_data,
                                      const data::Dataset& test_data, std::ostream* log = nullptr);

int cmd_synth(const RunConfig& rc);
int cmd_train(const RunConfig& rc);
int cmd_eval(const RunConfig& rc);
int cmd_ablate(const RunConfig& rc);
int cmd_report(const RunConfig& rc);

} // namespace resfno::cli
