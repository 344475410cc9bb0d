#include "resfno/features.hpp"

#include "resfno/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace resfno::features {

void WaveformSample::validate() const
{
    if (b.size() < 4) throw DataError("sample: B sequence needs at least 4 points, got " + std::to_string(b.size()));
    if (has_h() && h.size() != b.size())
        throw DataError("sample: B has " + std::to_string(b.size()) + " points but H has " + std::to_string(h.size()));
    if (!(freq > 0.0) || !std::isfinite(freq)) throw DataError("sample: frequency must be positive and finite");
    if (!std::isfinite(temp)) throw DataError("sample: temperature must be finite");
}

std::string feature_name(Feature f)
{
    switch (f) {
    case Feature::B: return "b";
    case Feature::H: return "h";
    case Feature::DbDt: return "dbdt";
    case Feature::Freq: return "freq";
    case Feature::Temp: return "temp";
    case Feature::DeltaB: return "delta_b";
    }
    return "unknown";
}

ScalerState ScalerState::fit(std::span<const PreparedSample> samples)
{
    if (samples.empty()) throw DataError("scaler_fit: empty training set");
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::array<double, kFeatureCount> lo, hi;
    lo.fill(inf);
    hi.fill(-inf);
    auto see = [&](Feature f, double v) {
        const auto i = static_cast<std::size_t>(f);
        lo[i] = std::min(lo[i], v);
        hi[i] = std::max(hi[i], v);
    };
    for (const auto& s : samples) {
        for (double v : s.b) see(Feature::B, v);
        for (double v : s.h) see(Feature::H, v);
        for (double v : s.dbdt) see(Feature::DbDt, v);
        see(Feature::Freq, s.freq);
        see(Feature::Temp, s.temp);
        see(Feature::DeltaB, s.delta_b);
    }
    ScalerState st;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        // A feature never observed (e.g. H at inference, dB/dt when dropped) is constant 0.
        if (lo[i] > hi[i]) lo[i] = hi[i] = 0.0;
        st.ranges_[i] = {lo[i], hi[i], !(hi[i] > lo[i])};
    }
    return st;
}

void ScalerState::set_range(Feature f, FeatureRange r)
{
    r.constant = !(r.max > r.min);
    ranges_[static_cast<std::size_t>(f)] = r;
}

double ScalerState::scale(double x, Feature f) const
{
    const auto& r = range(f);
    if (r.constant) return 0.0;
    return 2.0 * (x - r.min) / (r.max - r.min) - 1.0;
}

double ScalerState::unscale(double x, Feature f) const
{
    const auto& r = range(f);
    if (r.constant) return r.min;
    return (x + 1.0) * 0.5 * (r.max - r.min) + r.min;
}

std::vector<double> db_dt(std::span<const double> b, double freq)
{
    if (!(freq > 0.0)) throw ValueError("db_dt: frequency must be positive");
    const std::size_t n = b.size();
    if (n < 3) throw ValueError("db_dt: need at least 3 samples, got " + std::to_string(n));
    const double inv_2dt = 0.5 * freq * static_cast<double>(n);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = (b[(i + 1) % n] - b[(i + n - 1) % n]) * inv_2dt;
    return out;
}

double delta_b(std::span<const double> b)
{
    if (b.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(b.begin(), b.end());
    return *hi - *lo;
}

std::size_t downsample_stride_for(std::size_t length, std::size_t target)
{
    if (target == 0 || target > length)
        throw ValueError("downsample: cannot take " + std::to_string(target) + " points from " + std::to_string(length));
    if (target == 1) return 1;
    return (length - 1) / (target - 1);
}

std::vector<double> downsample_stride(std::span<const double> x, std::size_t target)
{
    const std::size_t s = downsample_stride_for(x.size(), target);
    std::vector<double> out(target);
    for (std::size_t i = 0; i < target; ++i) out[i] = x[i * s];
    return out;
}

std::vector<double> resample_linear(std::span<const double> x, std::size_t target)
{
    const std::size_t len = x.size();
    if (len < 2 || target < 2)
        throw ValueError("resample_linear: need input and output lengths >= 2, got " + std::to_string(len) + " -> " +
                         std::to_string(target));
    if (target == len) return {x.begin(), x.end()};
    std::vector<double> out(target);
    const double step = static_cast<double>(len - 1) / static_cast<double>(target - 1);
    for (std::size_t j = 0; j < target; ++j) {
        const double pos = static_cast<double>(j) * step;
        auto i = static_cast<std::size_t>(pos);
        if (i >= len - 1) i = len - 2;
        const double frac = pos - static_cast<double>(i);
        out[j] = x[i] + frac * (x[i + 1] - x[i]);
    }
    out.front() = x.front();
    out.back() = x.back();
    return out;
}

PreparedSample prepare(const WaveformSample& sample, const Pipeline& pipeline)
{
    sample.validate();
    std::vector<double> b = sample.b, h = sample.h;
    if (pipeline.resample_len != 0) {
        b = resample_linear(b, pipeline.resample_len);
        if (!h.empty()) h = resample_linear(h, pipeline.resample_len);
    }
    PreparedSample out;
    out.freq = sample.freq;
    out.temp = sample.temp;
    out.delta_b = delta_b(b);
    if (pipeline.include_dbdt) out.dbdt = downsample_stride(db_dt(b, sample.freq), pipeline.seq_len);
    out.b = downsample_stride(b, pipeline.seq_len);
    if (!h.empty()) out.h = downsample_stride(h, pipeline.seq_len);
    return out;
}

FeatureBundle make_bundle(const PreparedSample& s, const ScalerState& scaler, const Pipeline& pipeline)
{
    const std::size_t n = pipeline.seq_len;
    if (s.b.size() != n)
        throw ShapeError("make_bundle: prepared B has " + std::to_string(s.b.size()) + " points, pipeline expects " +
                         std::to_string(n));
    if (pipeline.include_dbdt && s.dbdt.size() != n) throw ShapeError("make_bundle: prepared sample lacks dB/dt");
    const std::size_t channels = pipeline.include_dbdt ? 3 : 2;
    FeatureBundle fb;
    fb.scaler = &scaler;
    fb.seq = Tensor(Shape{channels, n});
    std::size_t row = 0;
    for (std::size_t i = 0; i < n; ++i) fb.seq[row * n + i] = scaler.scale(s.b[i], Feature::B);
    ++row;
    if (pipeline.include_dbdt) {
        for (std::size_t i = 0; i < n; ++i) fb.seq[row * n + i] = scaler.scale(s.dbdt[i], Feature::DbDt);
        ++row;
    }
    for (std::size_t i = 0; i < n; ++i) fb.seq[row * n + i] = static_cast<double>(i) / static_cast<double>(n);

    fb.scalars = Tensor::vector({scaler.scale(s.freq, Feature::Freq), scaler.scale(s.temp, Feature::Temp),
                                 scaler.scale(s.delta_b, Feature::DeltaB)});
    if (!s.h.empty()) {
        fb.target = Tensor(Shape{n});
        for (std::size_t i = 0; i < n; ++i) fb.target[i] = scaler.scale(s.h[i], Feature::H);
    } else {
        fb.target = Tensor(Shape{0});
    }
    for (auto f : {Feature::B, Feature::H, Feature::DbDt, Feature::Freq, Feature::Temp, Feature::DeltaB}) {
        if (f == Feature::DbDt && !pipeline.include_dbdt) continue;
        if (f == Feature::H && s.h.empty()) continue;
        if (scaler.is_constant(f)) fb.constant_features.push_back(f);
    }
    return fb;
}

FeatureBundle make_bundle(const WaveformSample& sample, const ScalerState& scaler, const Pipeline& pipeline)
{
    return make_bundle(prepare(sample, pipeline), scaler, pipeline);
}

std::vector<double> unscale_h(std::span<const double> h_norm, const ScalerState& scaler)
{
    std::vector<double> out(h_norm.size());
    for (std::size_t i = 0; i < h_norm.size(); ++i) out[i] = scaler.unscale(h_norm[i], Feature::H);
    return out;
}

} // namespace resfno::features
