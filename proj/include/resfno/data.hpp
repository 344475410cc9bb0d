#pragma once

#include "resfno/features.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace resfno::data {

struct Dataset {
    std::vector<features::WaveformSample> samples;
    std::string provenance;

    std::size_t size() const { return samples.size(); }
};

/// File names inside a dataset directory. Defaults follow the MagNet layout.
struct CsvFiles {
    std::string b = "B_waveform[T].csv";
    std::string h = "H_waveform[Am-1].csv";
    std::string f = "Frequency[Hz].csv";
    std::string t = "Temperature[C].csv";
};

/// Comma-separated, no header; row i of every file describes sample i.
/// A missing H file is allowed (inference-only data).
Dataset load_csv_dir(const std::filesystem::path& dir, const CsvFiles& files = {});
void write_csv_dir(const Dataset& d, const std::filesystem::path& dir, const CsvFiles& files = {});

/// Shuffled partition with floor(ratio * n) samples in the first part (at least one in each).
std::pair<Dataset, Dataset> split_train_val(const Dataset& d, double ratio, std::uint64_t seed);

enum class RingTarget { H, B };

struct SynthConfig {
    std::size_t n_samples = 500;
    std::size_t seq_len = 1024;
    double w_sine = 1.0, w_triangle = 1.0, w_trapezoid = 1.0;
    double amp_min = 0.05, amp_max = 0.3;    // tesla
    double freq_min = 50e3, freq_max = 500e3; // hertz
    double temp_min = 25.0, temp_max = 90.0;  // celsius
    // Relay stack: thresholds evenly spaced in [theta_min, theta_max], each level
    // holding an up/down pair when hysterons are even, weight per relay.
    std::size_t hysterons = 200;
    double theta_min = 0.005, theta_max = 0.25;
    double hysteron_weight = 0.4;
    std::vector<double> thresholds;  // explicit override, same length as weights
    std::vector<double> weights;
    double eddy_coeff = 1e-5;        // H per (T/s)
    // Damped ringing after slope discontinuities; time measured in periods.
    double ring_amp = 12.0;          // A/m (H target) or fraction of amplitude (B target)
    double ring_decay = 12.0;        // 1 / period
    double ring_omega = 2.0 * 3.14159265358979323846 * 60.0;  // rad / period
    double ring_trigger = 0.5;       // |slope jump| relative to peak |slope|
    RingTarget ring_target = RingTarget::H;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Component-wise H of one synthetic sample, kept separate for testing.
struct SynthParts {
    std::vector<double> relay, eddy, ring;
};

Dataset synth_generate(const SynthConfig& c);

/// Relay-stack response to a periodic B after one warm-up period.
std::vector<double> relay_response(std::span<const double> b, std::span<const double> thresholds,
                                   std::span<const double> weights);

/// The H decomposition for a given periodic B; `ring_events` come from B's slope.
SynthParts synth_h_parts(std::span<const double> b, double freq, const SynthConfig& c);

/// Slope-discontinuity events: (index, sign of the slope jump).
std::vector<std::pair<std::size_t, double>> slope_events(std::span<const double> b, double trigger);

} // namespace resfno::data
