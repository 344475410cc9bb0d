#include "resfno/spectral.hpp"

#include "resfno/error.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace resfno::spectral {

SpectralWeights SpectralWeights::zeros(std::size_t c_in, std::size_t c_out, std::size_t modes)
{
    return {modes, Tensor(Shape{c_in, c_out, modes, 2})};
}

SpectralWeights SpectralWeights::identity(std::size_t channels, std::size_t modes)
{
    auto w = zeros(channels, channels, modes);
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t m = 0; m < modes; ++m) w.weights[((c * channels + c) * modes + m) * 2] = 1.0;
    return w;
}

SpectralWeights SpectralWeights::random(std::size_t c_in, std::size_t c_out, std::size_t modes, std::mt19937_64& rng)
{
    auto w = zeros(c_in, c_out, modes);
    const double scale = 1.0 / static_cast<double>(c_in * c_out);
    std::uniform_real_distribution<double> dist(0.0, scale);
    for (auto& v : w.weights.values()) v = dist(rng);
    return w;
}

Tensor spectral_conv(const Tensor& x, const SpectralWeights& w)
{
    if (x.rank() != 2) throw ShapeError("spectral_conv: input must be [C_in, N], got " + shape_string(x.shape()));
    const std::size_t c_in = x.dim(0), n = x.dim(1);
    if (w.weights.rank() != 4 || w.weights.dim(2) != w.modes || w.weights.dim(3) != 2)
        throw ShapeError("spectral_conv: weights must be [C_in, C_out, modes, 2], got " + shape_string(w.weights.shape()));
    if (w.in_channels() != c_in)
        throw ShapeError("spectral_conv: input has " + std::to_string(c_in) + " channels, weights expect " +
                         std::to_string(w.in_channels()));
    const std::size_t half = n / 2 + 1;
    if (w.modes > half)
        throw ShapeError("spectral_conv: " + std::to_string(w.modes) + " modes exceed floor(N/2)+1 = " + std::to_string(half));
    const std::size_t c_out = w.out_channels();
    const auto cw = w.complex_weights();

    std::vector<std::vector<cplx>> spectra(c_in);
    for (std::size_t c = 0; c < c_in; ++c) spectra[c] = rfft(std::span<const double>(x.data() + c * n, n));

    Tensor y(Shape{c_out, n});
    std::vector<cplx> out(half);
    for (std::size_t co = 0; co < c_out; ++co) {
        std::fill(out.begin(), out.end(), cplx{});
        for (std::size_t m = 0; m < w.modes; ++m) {
            cplx acc{};
            for (std::size_t ci = 0; ci < c_in; ++ci) acc += spectra[ci][m] * cw[(ci * c_out + co) * w.modes + m];
            out[m] = acc;
        }
        const auto row = irfft(out, n);
        std::copy(row.begin(), row.end(), y.data() + co * n);
    }
    return y;
}

ComplexTensor truncate_modes(const ComplexTensor& spectrum, std::size_t keep)
{
    if (spectrum.shape().empty()) throw ShapeError("truncate_modes: scalar spectrum");
    ComplexTensor out = spectrum;
    const std::size_t k = spectrum.shape().back();
    for (std::size_t i = 0; i < out.size(); ++i)
        if (i % k >= keep) out[i] = cplx{};
    return out;
}

RealDftBasis::RealDftBasis(std::size_t n_, std::size_t keep_) : n(n_), keep(keep_)
{
    if (n == 0 || keep == 0 || keep > n / 2 + 1)
        throw ShapeError("dft basis: keep=" + std::to_string(keep) + " invalid for length " + std::to_string(n));
    fwd_cos.resize(n * keep);
    fwd_sin.resize(n * keep);
    inv_cos.resize(keep * n);
    inv_sin.resize(keep * n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t m = 0; m < keep; ++m) {
        const bool edge = (m == 0) || (2 * m == n);
        const double weight = (edge ? 1.0 : 2.0) * inv_n;
        for (std::size_t t = 0; t < n; ++t) {
            // (m*t) mod n keeps the angle in [0, 2 pi).
            const double angle = 2.0 * std::numbers::pi * static_cast<double>((m * t) % n) * inv_n;
            const double c = std::cos(angle), s = std::sin(angle);
            fwd_cos[t * keep + m] = c;
            fwd_sin[t * keep + m] = s;
            inv_cos[m * n + t] = weight * c;
            inv_sin[m * n + t] = weight * s;
        }
    }
}

std::shared_ptr<const RealDftBasis> RealDftBasis::cached(std::size_t n, std::size_t keep)
{
    static std::mutex mu;
    static std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const RealDftBasis>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[{n, keep}];
    if (!slot) slot = std::make_shared<const RealDftBasis>(n, keep);
    return slot;
}

} // namespace resfno::spectral
