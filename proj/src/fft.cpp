#include "resfno/fft.hpp"

#include "resfno/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace resfno::spectral {

namespace {

std::vector<std::size_t> prime_factors(std::size_t n)
{
    std::vector<std::size_t> out;
    while (n % 4 == 0) {
        out.push_back(4);
        n /= 4;
    }
    while (n % 2 == 0) {
        out.push_back(2);
        n /= 2;
    }
    for (std::size_t p = 3; p * p <= n; p += 2) {
        while (n % p == 0) {
            out.push_back(p);
            n /= p;
        }
    }
    if (n > 1) out.push_back(n);
    return out;
}

std::size_t next_pow2(std::size_t n)
{
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

} // namespace

struct FftPlan::Bluestein {
    std::size_t m;
    std::vector<cplx> chirp;       // exp(-i pi k^2 / n), k < n
    std::vector<cplx> kernel_fft;  // FFT_m of conj chirp, wrapped
    FftPlan sub;

    explicit Bluestein(std::size_t n) : m(next_pow2(2 * n - 1)), chirp(n), kernel_fft(m), sub(m)
    {
        for (std::size_t k = 0; k < n; ++k) {
            // k^2 mod 2n keeps the phase argument small and exact.
            const auto k2 = static_cast<double>((k * k) % (2 * n));
            const double phase = -std::numbers::pi * k2 / static_cast<double>(n);
            chirp[k] = {std::cos(phase), std::sin(phase)};
        }
        std::vector<cplx> b(m, cplx{});
        b[0] = std::conj(chirp[0]);
        for (std::size_t k = 1; k < n; ++k) {
            b[k] = std::conj(chirp[k]);
            b[m - k] = std::conj(chirp[k]);
        }
        sub.forward(b, kernel_fft);
    }
};

FftPlan::FftPlan(std::size_t n) : n_(n)
{
    if (n == 0) throw ValueError("fft: length must be >= 1");
    const auto primes = prime_factors(n);
    std::size_t largest = 1;
    for (auto p : primes) largest = std::max(largest, p);
    if (largest > kMaxDirectRadix) {
        bluestein_ = std::make_unique<Bluestein>(n);
        return;
    }
    std::size_t remaining = n;
    for (auto p : primes) {
        remaining /= p;
        factors_.push_back(p);
        factors_.push_back(remaining);
    }
    twiddles_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double phase = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        twiddles_[k] = {std::cos(phase), std::sin(phase)};
    }
}

FftPlan::~FftPlan() = default;
FftPlan::FftPlan(FftPlan&&) noexcept = default;
FftPlan& FftPlan::operator=(FftPlan&&) noexcept = default;

void FftPlan::forward(std::span<const cplx> in, std::span<cplx> out) const
{
    if (in.size() != n_ || out.size() != n_)
        throw ShapeError("fft: plan length " + std::to_string(n_) + " used with buffers of " +
                         std::to_string(in.size()) + "/" + std::to_string(out.size()));
    if (!bluestein_) {
        mixed_radix(in, out);
        return;
    }
    const auto& bs = *bluestein_;
    std::vector<cplx> a(bs.m, cplx{}), fa(bs.m);
    for (std::size_t k = 0; k < n_; ++k) a[k] = in[k] * bs.chirp[k];
    bs.sub.forward(a, fa);
    for (std::size_t k = 0; k < bs.m; ++k) fa[k] *= bs.kernel_fft[k];
    bs.sub.inverse(fa, a);
    const double inv_m = 1.0 / static_cast<double>(bs.m);
    for (std::size_t k = 0; k < n_; ++k) out[k] = a[k] * inv_m * bs.chirp[k];
}

void FftPlan::inverse(std::span<const cplx> in, std::span<cplx> out) const
{
    std::vector<cplx> tmp(in.begin(), in.end());
    for (auto& v : tmp) v = std::conj(v);
    forward(tmp, out);
    for (auto& v : out) v = std::conj(v);
}

void FftPlan::mixed_radix(std::span<const cplx> in, std::span<cplx> out) const
{
    if (n_ <= 1) {
        std::copy(in.begin(), in.end(), out.begin());
        return;
    }
    if (in.data() == out.data()) {
        std::vector<cplx> tmp(in.begin(), in.end());
        work(out.data(), tmp.data(), 1, 0);
    } else {
        work(out.data(), in.data(), 1, 0);
    }
}

void FftPlan::work(cplx* out, const cplx* in, std::size_t fstride, std::size_t factor_idx) const
{
    const std::size_t p = factors_[factor_idx];
    const std::size_t m = factors_[factor_idx + 1];
    cplx* const begin = out;
    cplx* const end = out + p * m;
    if (m == 1) {
        for (cplx* o = out; o != end; ++o, in += fstride) *o = *in;
    } else {
        for (cplx* o = out; o != end; o += m, in += fstride) work(o, in, fstride * p, factor_idx + 2);
    }
    butterfly(begin, fstride, m, p);
}

void FftPlan::butterfly(cplx* out, std::size_t fstride, std::size_t m, std::size_t p) const
{
    if (p == 2) {
        for (std::size_t k = 0; k < m; ++k) {
            const cplx t = out[k + m] * twiddles_[k * fstride];
            out[k + m] = out[k] - t;
            out[k] += t;
        }
        return;
    }
    if (p == 4) {
        for (std::size_t k = 0; k < m; ++k) {
            const cplx a0 = out[k];
            const cplx a1 = out[k + m] * twiddles_[k * fstride];
            const cplx a2 = out[k + 2 * m] * twiddles_[2 * k * fstride];
            const cplx a3 = out[k + 3 * m] * twiddles_[3 * k * fstride];
            const cplx s02 = a0 + a2, d02 = a0 - a2;
            const cplx s13 = a1 + a3, d13 = a1 - a3;
            const cplx d13_rot{d13.imag(), -d13.real()};  // -i * d13
            out[k] = s02 + s13;
            out[k + m] = d02 + d13_rot;
            out[k + 2 * m] = s02 - s13;
            out[k + 3 * m] = d02 - d13_rot;
        }
        return;
    }
    // Generic radix: direct p-point DFT on twiddled inputs.
    std::vector<cplx> scratch(p);
    for (std::size_t u = 0; u < m; ++u) {
        for (std::size_t q = 0; q < p; ++q) scratch[q] = out[u + q * m];
        for (std::size_t q1 = 0; q1 < p; ++q1) {
            const std::size_t k = u + q1 * m;
            cplx acc = scratch[0];
            std::size_t tw = 0;
            for (std::size_t q = 1; q < p; ++q) {
                tw += fstride * k;
                tw %= n_;
                acc += scratch[q] * twiddles_[tw];
            }
            out[k] = acc;
        }
    }
}

const FftPlan& FftPlan::cached(std::size_t n)
{
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<FftPlan>> plans;
    std::lock_guard lock(mu);
    auto& slot = plans[n];
    if (!slot) slot = std::make_unique<FftPlan>(n);
    return *slot;
}

std::vector<cplx> rfft(std::span<const double> x)
{
    if (x.empty()) throw ValueError("rfft: empty input");
    const std::size_t n = x.size();
    std::vector<cplx> in(x.begin(), x.end()), out(n);
    FftPlan::cached(n).forward(in, out);
    out.resize(n / 2 + 1);
    return out;
}

std::vector<double> irfft(std::span<const cplx> spectrum, std::size_t n)
{
    if (n == 0) throw ValueError("irfft: length must be >= 1");
    if (spectrum.size() != n / 2 + 1)
        throw ShapeError("irfft: spectrum of " + std::to_string(spectrum.size()) + " modes is inconsistent with length " +
                         std::to_string(n) + " (expected " + std::to_string(n / 2 + 1) + ")");
    std::vector<cplx> full(n), out(n);
    full[0] = spectrum[0].real();
    for (std::size_t m = 1; m < spectrum.size(); ++m) {
        if (2 * m == n) {
            full[m] = spectrum[m].real();
        } else {
            full[m] = spectrum[m];
            full[n - m] = std::conj(spectrum[m]);
        }
    }
    FftPlan::cached(n).inverse(full, out);
    std::vector<double> y(n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = out[i].real() * inv_n;
    return y;
}

} // namespace resfno::spectral
