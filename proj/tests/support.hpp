#pragma once

// Shared oracles for the test binaries.

#include "resfno/autodiff.hpp"
#include "resfno/tensor.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace testing {

using cplx = std::complex<double>;

/// O(N^2) DFT straight from the definition, accumulated in long double.
inline std::vector<cplx> naive_dft(const std::vector<double>& x)
{
    const std::size_t n = x.size();
    std::vector<cplx> out(n / 2 + 1);
    for (std::size_t m = 0; m < out.size(); ++m) {
        long double re = 0, im = 0;
        for (std::size_t t = 0; t < n; ++t) {
            // Reduce m*t mod n first so the angle stays small and exact.
            const long double ang = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>((m * t) % n) /
                                    static_cast<long double>(n);
            re += x[t] * std::cos(ang);
            im += x[t] * std::sin(ang);
        }
        out[m] = {static_cast<double>(re), static_cast<double>(im)};
    }
    return out;
}

inline std::vector<double> uniform_vec(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

inline resfno::Tensor uniform_tensor(resfno::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0)
{
    resfno::Tensor t(std::move(shape));
    std::uniform_real_distribution<double> u(lo, hi);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(rng);
    return t;
}

/// Relative error with a floor so that tiny gradients are compared absolutely.
inline double rel_err(double a, double b, double floor = 1e-4)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

struct GradCheck {
    double max_rel = 0.0;
    std::size_t probes = 0;
};

/// Builds `loss(tape, vars)` with each input bound as a parameter, then compares
/// backward() against central differences (step h) for every entry of every input.
/// The loss value should be O(1) so that the relative floor is meaningful.
inline GradCheck check_gradients(const std::function<resfno::ad::Var(resfno::ad::Tape&, std::vector<resfno::ad::Var>&)>& loss,
                                 std::vector<resfno::Tensor> inputs, double h = 1e-6, std::size_t max_per_input = 0)
{
    using namespace resfno;
    auto eval = [&](const std::vector<Tensor>& in) {
        ad::Tape tape(ad::Tape::Mode::Inference);
        std::vector<ad::Var> vars;
        for (const auto& t : in) vars.push_back(tape.constant(t));
        return loss(tape, vars).value().item();
    };
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (std::size_t i = 0; i < inputs.size(); ++i) vars.push_back(tape.parameter("p" + std::to_string(i), inputs[i]));
    const auto grads = ad::backward(tape, loss(tape, vars));

    GradCheck r;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto& g = grads.at("p" + std::to_string(i));
        const std::size_t count = max_per_input ? std::min(max_per_input, inputs[i].size()) : inputs[i].size();
        const std::size_t step = std::max<std::size_t>(1, inputs[i].size() / count);
        for (std::size_t e = 0; e < inputs[i].size(); e += step) {
            auto plus = inputs, minus = inputs;
            plus[i][e] += h;
            minus[i][e] -= h;
            const double fd = (eval(plus) - eval(minus)) / (2.0 * h);
            r.max_rel = std::max(r.max_rel, rel_err(fd, g[e]));
            ++r.probes;
        }
    }
    return r;
}

/// sum(w * x) with a fixed pseudo-random weight per entry, to turn any tensor into a scalar loss.
inline resfno::ad::Var weighted_sum(resfno::ad::Tape& tape, resfno::ad::Var x, std::uint64_t seed = 99)
{
    std::mt19937_64 rng(seed);
    const auto w = uniform_tensor(x.shape(), rng);
    return resfno::ad::reduce_sum(resfno::ad::mul(x, tape.constant(w)));
}

} // namespace testing
