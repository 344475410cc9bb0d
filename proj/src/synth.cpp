#include "resfno/data.hpp"

#include "resfno/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace resfno::data {

void SynthConfig::validate() const
{
    if (n_samples == 0) throw ConfigError("synth: n_samples must be >= 1");
    if (seq_len < 8) throw ConfigError("synth: seq_len must be >= 8");
    if (w_sine < 0 || w_triangle < 0 || w_trapezoid < 0 || w_sine + w_triangle + w_trapezoid <= 0)
        throw ConfigError("synth: waveform weights must be non-negative with a positive sum");
    if (!(amp_min > 0) || amp_max < amp_min) throw ConfigError("synth: need 0 < amp_min <= amp_max");
    if (!(freq_min > 0) || freq_max < freq_min) throw ConfigError("synth: need 0 < freq_min <= freq_max");
    if (temp_max < temp_min) throw ConfigError("synth: need temp_min <= temp_max");
    if (thresholds.size() != weights.size()) throw ConfigError("synth: thresholds and weights differ in length");
    if (thresholds.empty()) {
        if (!(theta_min > 0) || theta_max < theta_min) throw ConfigError("synth: need 0 < theta_min <= theta_max");
        if (hysteron_weight < 0) throw ConfigError("synth: hysteron_weight must be >= 0");
    }
    for (double t : thresholds)
        if (!(t > 0)) throw ConfigError("synth: thresholds must be positive");
    if (eddy_coeff < 0) throw ConfigError("synth: eddy_coeff must be >= 0");
    if (ring_decay < 0) throw ConfigError("synth: ring_decay must be >= 0");
    if (!(ring_trigger > 0)) throw ConfigError("synth: ring_trigger must be positive");
}

namespace {

// Platform-independent uniform draw in [0, 1).
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

void default_stack(const SynthConfig& c, std::vector<double>& thresholds, std::vector<double>& weights)
{
    if (!c.thresholds.empty()) {
        thresholds = c.thresholds;
        weights = c.weights;
        return;
    }
    const std::size_t j = c.hysterons;
    const std::size_t levels = (j + 1) / 2;
    thresholds.resize(j);
    weights.assign(j, c.hysteron_weight);
    for (std::size_t i = 0; i < j; ++i) {
        const std::size_t level = i / 2;
        const double frac = levels > 1 ? static_cast<double>(level) / static_cast<double>(levels - 1) : 0.0;
        thresholds[i] = c.theta_min + (c.theta_max - c.theta_min) * frac;
    }
}

enum class Shape { Sine, Triangle, Trapezoid };

std::vector<double> base_waveform(Shape shape, std::size_t n, double amp, std::mt19937_64& rng)
{
    std::vector<double> b(n);
    const auto nd = static_cast<double>(n);
    switch (shape) {
    case Shape::Sine:
        for (std::size_t i = 0; i < n; ++i) b[i] = amp * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / nd);
        break;
    case Shape::Triangle: {
        // Rising ramp over [0, peak), falling over [peak, n); corners on grid points.
        auto peak = static_cast<std::size_t>(std::lround(uniform(rng, 0.2, 0.8) * nd));
        peak = std::clamp<std::size_t>(peak, 2, n - 2);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = static_cast<double>(i);
            b[i] = i <= peak ? -amp + 2.0 * amp * x / static_cast<double>(peak)
                             : amp - 2.0 * amp * (x - static_cast<double>(peak)) / static_cast<double>(n - peak);
        }
        break;
    }
    case Shape::Trapezoid: {
        auto rise = static_cast<std::size_t>(std::lround(uniform(rng, 0.08, 0.2) * nd));
        rise = std::clamp<std::size_t>(rise, 1, n / 4);
        const std::size_t top = n / 2 - rise;
        const std::size_t c1 = rise, c2 = rise + top, c3 = 2 * rise + top;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = static_cast<double>(i);
            if (i <= c1)
                b[i] = -amp + 2.0 * amp * x / static_cast<double>(rise);
            else if (i <= c2)
                b[i] = amp;
            else if (i <= c3)
                b[i] = amp - 2.0 * amp * (x - static_cast<double>(c2)) / static_cast<double>(rise);
            else
                b[i] = -amp;
        }
        break;
    }
    }
    return b;
}

std::vector<double> ringing(std::size_t n, const std::vector<std::pair<std::size_t, double>>& events, double amp,
                            double decay, double omega)
{
    std::vector<double> r(n, 0.0);
    const auto nd = static_cast<double>(n);
    for (const auto& [at, sign] : events) {
        for (std::size_t i = 0; i < n; ++i) {
            const double tau = static_cast<double>((i + n - at) % n) / nd;
            r[i] += sign * amp * std::exp(-decay * tau) * std::sin(omega * tau);
        }
    }
    return r;
}

} // namespace

std::vector<double> relay_response(std::span<const double> b, std::span<const double> thresholds,
                                   std::span<const double> weights)
{
    const std::size_t j = thresholds.size();
    if (weights.size() != j) throw ValueError("relay_response: thresholds and weights differ in length");
    // Alternating initial states, so relays that never switch cancel in pairs.
    std::vector<double> state(j);
    for (std::size_t i = 0; i < j; ++i) state[i] = (i % 2 == 0) ? -1.0 : 1.0;
    auto update = [&](double v) {
        for (std::size_t i = 0; i < j; ++i) {
            if (v > thresholds[i]) state[i] = 1.0;
            else if (v < -thresholds[i]) state[i] = -1.0;
        }
    };
    for (double v : b) update(v);  // warm-up period
    std::vector<double> h(b.size());
    for (std::size_t t = 0; t < b.size(); ++t) {
        update(b[t]);
        double acc = 0.0;
        for (std::size_t i = 0; i < j; ++i) acc += weights[i] * state[i];
        h[t] = acc;
    }
    return h;
}

std::vector<std::pair<std::size_t, double>> slope_events(std::span<const double> b, double trigger)
{
    const std::size_t n = b.size();
    std::vector<double> slope(n);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        slope[i] = b[(i + 1) % n] - b[i];
        peak = std::max(peak, std::abs(slope[i]));
    }
    std::vector<std::pair<std::size_t, double>> events;
    if (peak == 0.0) return events;
    for (std::size_t i = 0; i < n; ++i) {
        const double jump = slope[i] - slope[(i + n - 1) % n];
        if (std::abs(jump) > trigger * peak) events.emplace_back(i, jump > 0 ? 1.0 : -1.0);
    }
    return events;
}

SynthParts synth_h_parts(std::span<const double> b, double freq, const SynthConfig& c)
{
    std::vector<double> thresholds, weights;
    default_stack(c, thresholds, weights);
    SynthParts parts;
    parts.relay = relay_response(b, thresholds, weights);
    parts.eddy = features::db_dt(b, freq);
    for (auto& v : parts.eddy) v *= c.eddy_coeff;
    if (c.ring_target == RingTarget::H)
        parts.ring = ringing(b.size(), slope_events(b, c.ring_trigger), c.ring_amp, c.ring_decay, c.ring_omega);
    else
        parts.ring.assign(b.size(), 0.0);
    return parts;
}

Dataset synth_generate(const SynthConfig& c)
{
    c.validate();
    std::mt19937_64 rng(c.seed);
    const double wsum = c.w_sine + c.w_triangle + c.w_trapezoid;
    Dataset d;
    d.provenance = "synthetic:seed=" + std::to_string(c.seed);
    d.samples.reserve(c.n_samples);
    for (std::size_t s = 0; s < c.n_samples; ++s) {
        const double pick = uniform01(rng) * wsum;
        const Shape shape = pick < c.w_sine ? Shape::Sine : (pick < c.w_sine + c.w_triangle ? Shape::Triangle : Shape::Trapezoid);
        const double amp = uniform(rng, c.amp_min, c.amp_max);
        const double freq = uniform(rng, c.freq_min, c.freq_max);
        const double temp = uniform(rng, c.temp_min, c.temp_max);
        auto base = base_waveform(shape, c.seq_len, amp, rng);
        const std::size_t phase = static_cast<std::size_t>(rng() % c.seq_len);

        std::vector<double> b(c.seq_len);
        for (std::size_t i = 0; i < c.seq_len; ++i) b[i] = base[(i + phase) % c.seq_len];

        if (c.ring_target == RingTarget::B) {
            const auto osc = ringing(c.seq_len, slope_events(b, c.ring_trigger), c.ring_amp * amp, c.ring_decay, c.ring_omega);
            for (std::size_t i = 0; i < c.seq_len; ++i) b[i] += osc[i];
        }
        const auto parts = synth_h_parts(b, freq, c);
        features::WaveformSample w;
        w.h.resize(c.seq_len);
        for (std::size_t i = 0; i < c.seq_len; ++i) w.h[i] = parts.relay[i] + parts.eddy[i] + parts.ring[i];
        w.b = std::move(b);
        w.freq = freq;
        w.temp = temp;
        d.samples.push_back(std::move(w));
    }
    return d;
}

} // namespace resfno::data
