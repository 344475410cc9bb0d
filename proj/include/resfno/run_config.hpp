#pragma once

#include "resfno/data.hpp"
#include "resfno/features.hpp"
#include "resfno/model.hpp"
#include "resfno/training.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace resfno::cli {

/// Merged settings for one command. Every field is reachable through a key in key_registry().
struct RunConfig {
    std::uint64_t seed = 1;
    std::filesystem::path out = "out";
    std::filesystem::path data;
    std::filesystem::path test_data;
    std::filesystem::path checkpoint;  // eval: defaults to <out>/checkpoint.ckpt when empty

    model::ModelConfig model;
    std::size_t resample_len = 0;
    training::TrainConfig train;
    double train_fraction = 0.9;  // train/validation split of the training data
    double test_fraction = 0.2;   // ablate: held-out share when no test_data is given
    data::SynthConfig synth;
    double ring_cycles = 60.0;    // synth ringing frequency, cycles per period

    std::size_t bins = 50;
    bool write_predictions = true;
    std::vector<std::uint64_t> ablate_seeds{1};
    std::size_t log_every = 10;  // 0 silences per-epoch progress

    std::set<std::string> explicitly_set;  // keys given by file or flag

    features::Pipeline pipeline() const;
    /// Pushes shared fields (seed, ringing frequency) into the nested configs.
    void finalize();
};

struct KeyInfo {
    std::string key;
    std::string doc;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<KeyInfo>& key_registry();
const KeyInfo* find_key(const std::string& key);

/// Sets one key from its text form; unknown keys and bad values throw ConfigError.
void apply_setting(RunConfig& rc, const std::string& key, const std::string& value);

/// Flat `key = value` lines; `#` starts a comment; blank lines are ignored.
void apply_config_file(RunConfig& rc, const std::filesystem::path& path);

/// Default values as a commented config file, one line per key.
std::string describe_keys();

} // namespace resfno::cli
