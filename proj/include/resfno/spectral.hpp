#pragma once

#include "resfno/fft.hpp"
#include "resfno/tensor.hpp"

#include <memory>
#include <random>

namespace resfno::spectral {

/// Learnable complex mixing matrix per retained Fourier mode.
/// `weights` stores the complex entries interleaved: shape [C_in, C_out, modes, 2].
struct SpectralWeights {
    std::size_t modes = 0;
    Tensor weights;

    std::size_t in_channels() const { return weights.dim(0); }
    std::size_t out_channels() const { return weights.dim(1); }
    ComplexTensor complex_weights() const { return ComplexTensor::from_interleaved(weights); }

    static SpectralWeights zeros(std::size_t c_in, std::size_t c_out, std::size_t modes);
    /// Identity mixing on every retained mode (c_in == c_out).
    static SpectralWeights identity(std::size_t channels, std::size_t modes);
    /// Real and imaginary parts uniform in [0, 1/(c_in*c_out)).
    static SpectralWeights random(std::size_t c_in, std::size_t c_out, std::size_t modes, std::mt19937_64& rng);
};

/// FFT each input channel, mix the first `modes` modes across channels,
/// zero the rest, inverse FFT. x is [C_in, N]; the result is [C_out, N].
Tensor spectral_conv(const Tensor& x, const SpectralWeights& w);

/// Zeroes every entry whose last-axis (mode) index is >= keep.
ComplexTensor truncate_modes(const ComplexTensor& spectrum, std::size_t keep);

/// Real DFT restricted to the first `keep` modes of length-n signals, as
/// dense cosine/sine bases so batches of rows transform with one GEMM.
/// Forward: Re = x Cf, Im = -x Sf with Cf[t, m] = cos(2 pi m t / n).
/// Inverse: y = Re Ci - Im Si with Ci[m, t] = c_m cos(2 pi m t / n) / n,
/// where c_m = 1 for DC and Nyquist and 2 otherwise.
struct RealDftBasis {
    std::size_t n = 0;
    std::size_t keep = 0;
    std::vector<double> fwd_cos, fwd_sin;  // [n, keep]
    std::vector<double> inv_cos, inv_sin;  // [keep, n]

    RealDftBasis(std::size_t n, std::size_t keep);
    static std::shared_ptr<const RealDftBasis> cached(std::size_t n, std::size_t keep);
};

} // namespace resfno::spectral
