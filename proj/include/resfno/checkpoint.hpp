#pragma once

#include "resfno/features.hpp"
#include "resfno/model.hpp"

#include <filesystem>

namespace resfno {

/// Everything needed to reproduce predictions: architecture, feature pipeline, scaler and weights.
struct Checkpoint {
    model::ModelConfig model;
    features::Pipeline pipeline;
    features::ScalerState scaler;
    model::ModelParams params;
};

/// Text format, version 1. Floats use shortest round-trip formatting, so load(save(x)) is exact.
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace resfno
