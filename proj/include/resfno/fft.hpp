#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace resfno::spectral {

using cplx = std::complex<double>;

/// Complex DFT of one fixed length. Lengths whose prime factors are all
/// small use a recursive mixed-radix decimation; lengths with a large prime
/// factor go through Bluestein's chirp-z identity on a power-of-two plan.
/// Forward is unnormalized; inverse is the unnormalized conjugate transform.
class FftPlan {
public:
    explicit FftPlan(std::size_t n);
    ~FftPlan();
    FftPlan(FftPlan&&) noexcept;
    FftPlan& operator=(FftPlan&&) noexcept;

    std::size_t size() const noexcept { return n_; }
    bool uses_bluestein() const noexcept { return bluestein_ != nullptr; }

    void forward(std::span<const cplx> in, std::span<cplx> out) const;
    void inverse(std::span<const cplx> in, std::span<cplx> out) const;

    /// Shared plan for length n; safe to call from several threads.
    static const FftPlan& cached(std::size_t n);

private:
    struct Bluestein;

    void mixed_radix(std::span<const cplx> in, std::span<cplx> out) const;
    void work(cplx* out, const cplx* in, std::size_t fstride, std::size_t factor_idx) const;
    void butterfly(cplx* out, std::size_t fstride, std::size_t m, std::size_t p) const;

    std::size_t n_;
    std::vector<std::size_t> factors_;  // pairs (radix, remaining length)
    std::vector<cplx> twiddles_;
    std::unique_ptr<Bluestein> bluestein_;
};

/// Largest prime factor that is handled by a direct radix stage.
inline constexpr std::size_t kMaxDirectRadix = 31;

/// X[m] = sum_n x[n] exp(-2 pi i m n / N) for m = 0..floor(N/2).
std::vector<cplx> rfft(std::span<const double> x);
/// Inverse of rfft with the 1/N factor; the spectrum must hold floor(n/2)+1 entries.
std::vector<double> irfft(std::span<const cplx> spectrum, std::size_t n);

} // namespace resfno::spectral
