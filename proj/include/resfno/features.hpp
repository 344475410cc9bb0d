#pragma once

#include "resfno/tensor.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace resfno::features {

/// One excitation period in physical units. `h` may be empty at inference.
struct WaveformSample {
    std::vector<double> b;  // tesla
    std::vector<double> h;  // ampere per metre
    double freq = 0.0;      // hertz
    double temp = 0.0;      // celsius

    bool has_h() const { return !h.empty(); }
    void validate() const;
};

enum class Feature { B = 0, H, DbDt, Freq, Temp, DeltaB };
inline constexpr std::size_t kFeatureCount = 6;
std::string feature_name(Feature f);

/// Derived-length sequence settings: optional linear resample, then stride down to `seq_len`.
struct Pipeline {
    std::size_t seq_len = 205;
    std::size_t resample_len = 0;  // 0 = no resampling
    bool include_dbdt = true;
};

/// A sample after resampling, derivative and downsampling, still in physical units.
struct PreparedSample {
    std::vector<double> b, dbdt, h;
    double freq = 0.0, temp = 0.0, delta_b = 0.0;
};

struct FeatureRange {
    double min = 0.0;
    double max = 0.0;
    bool constant = true;  // max <= min

    bool operator==(const FeatureRange&) const = default;
};

/// Per-feature training-set extrema. scale() maps [min, max] affinely onto [-1, 1].
class ScalerState {
public:
    ScalerState() = default;

    static ScalerState fit(std::span<const PreparedSample> samples);

    const FeatureRange& range(Feature f) const { return ranges_[static_cast<std::size_t>(f)]; }
    void set_range(Feature f, FeatureRange r);
    bool is_constant(Feature f) const { return range(f).constant; }

    /// 2 (x - min) / (max - min) - 1, unclamped; 0 for a constant feature.
    double scale(double x, Feature f) const;
    double unscale(double x, Feature f) const;

    bool operator==(const ScalerState&) const = default;

private:
    std::array<FeatureRange, kFeatureCount> ranges_{};
};

/// Model-ready inputs for one sample.
struct FeatureBundle {
    Tensor seq;      // [C, N]: B, dB/dt (unless dropped), t
    Tensor scalars;  // [3]: f, T, delta B
    Tensor target;   // [N] normalized H, empty shape [0] when the sample has no H
    const ScalerState* scaler = nullptr;
    std::vector<Feature> constant_features;

    bool has_target() const { return target.size() > 0; }
};

/// Periodic central difference; dt = 1 / (f * N).
std::vector<double> db_dt(std::span<const double> b, double freq);
/// Peak-to-peak excursion max(b) - min(b).
double delta_b(std::span<const double> b);
/// Integer stride floor((L-1)/(N-1)) used by downsample_stride.
std::size_t downsample_stride_for(std::size_t length, std::size_t target);
/// Every stride-th sample starting at 0, N samples in total.
std::vector<double> downsample_stride(std::span<const double> x, std::size_t target);
/// Linear interpolation onto M points j (L-1)/(M-1); endpoints are kept exactly.
std::vector<double> resample_linear(std::span<const double> x, std::size_t target);

/// Resample (optional), differentiate at that resolution, then downsample.
PreparedSample prepare(const WaveformSample& sample, const Pipeline& pipeline);

FeatureBundle make_bundle(const PreparedSample& sample, const ScalerState& scaler, const Pipeline& pipeline);
FeatureBundle make_bundle(const WaveformSample& sample, const ScalerState& scaler, const Pipeline& pipeline);

/// Normalized H prediction back to physical units.
std::vector<double> unscale_h(std::span<const double> h_norm, const ScalerState& scaler);

} // namespace resfno::features
