#include "resfno/metrics.hpp"

#include "resfno/error.hpp"
#include "resfno/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace resfno::metrics {

namespace {

void require_pair(const char* what, std::span<const double> a, std::span<const double> b, std::size_t min_len)
{
    if (a.size() != b.size())
        throw ShapeError(std::string(what) + ": lengths differ (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    if (a.size() < min_len)
        throw ShapeError(std::string(what) + ": need at least " + std::to_string(min_len) + " points");
}

} // namespace

double nrmse(std::span<const double> h, std::span<const double> h_hat)
{
    require_pair("nrmse", h, h_hat, 1);
    double peak = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        peak = std::max(peak, std::abs(h[i]));
        const double d = h[i] - h_hat[i];
        sq += d * d;
    }
    if (peak == 0.0) throw ValueError("nrmse: measured sequence is identically zero");
    return std::sqrt(sq / static_cast<double>(h.size())) / peak * 100.0;
}

double r_squared(std::span<const double> h, std::span<const double> h_hat)
{
    require_pair("r_squared", h, h_hat, 2);
    const double mu = mean(h);
    double res = 0.0, tot = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        res += (h[i] - h_hat[i]) * (h[i] - h_hat[i]);
        tot += (h[i] - mu) * (h[i] - mu);
    }
    if (tot == 0.0) throw ValueError("r_squared: measured sequence is constant");
    return (1.0 - res / tot) * 100.0;
}

double core_loss_density(std::span<const double> b, std::span<const double> h, double freq)
{
    require_pair("core_loss_density", b, h, 3);
    const std::size_t n = b.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += h[i] * (b[(i + 1) % n] - b[(i + n - 1) % n]);
    return freq * acc / 2.0;
}

double mean(std::span<const double> values)
{
    if (values.empty()) throw ValueError("mean of an empty list");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double percentile(std::vector<double> values, double p)
{
    if (values.empty()) throw ValueError("percentile of an empty list");
    if (!(p >= 0 && p <= 100)) throw ValueError("percentile must lie in [0, 100]");
    std::sort(values.begin(), values.end());
    const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + (values[hi] - values[lo]) * frac;
}

double median(std::vector<double> values) { return percentile(std::move(values), 50.0); }

std::size_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

Histogram histogram(std::span<const double> values, std::size_t bins)
{
    if (bins == 0) throw ValueError("histogram: bins must be >= 1");
    Histogram h;
    h.counts.assign(bins, 0);
    h.edges.resize(bins + 1);
    if (values.empty()) {
        for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = static_cast<double>(i) / static_cast<double>(bins);
        return h;
    }
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    double hi = *hi_it;
    if (hi == lo) hi = lo + 1.0;
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
    h.edges[bins] = hi;
    for (double v : values) {
        auto k = static_cast<std::size_t>((v - lo) / width);
        h.counts[std::min(k, bins - 1)] += 1;
    }
    return h;
}

namespace {

Aggregate aggregate(const std::vector<double>& v)
{
    Aggregate a;
    if (v.empty()) return a;
    a.mean = mean(v);
    a.median = median(v);
    a.p95 = percentile(v, 95.0);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    a.min = *lo;
    a.max = *hi;
    // Summation rounding can nudge a constant list's mean past its extrema.
    a.mean = std::clamp(a.mean, a.min, a.max);
    return a;
}

} // namespace

EvalReport summarize(std::span<const std::vector<double>> h, std::span<const std::vector<double>> h_hat,
                     std::span<const std::vector<double>> b, std::span<const double> freq, std::size_t bins)
{
    if (h.size() != h_hat.size()) throw ShapeError("summarize: measured and predicted counts differ");
    const bool with_loss = !b.empty();
    if (with_loss && (b.size() != h.size() || freq.size() != h.size()))
        throw ShapeError("summarize: B and frequency lists must match the sample count");
    EvalReport r;
    r.samples.resize(h.size());
    std::vector<double> nr, r2;
    for (std::size_t i = 0; i < h.size(); ++i) {
        auto& s = r.samples[i];
        s.index = i;
        try {
            s.nrmse = nrmse(h[i], h_hat[i]);
            s.r2 = r_squared(h[i], h_hat[i]);
            if (with_loss) {
                s.core_loss_pred = core_loss_density(b[i], h_hat[i], freq[i]);
                s.core_loss_meas = core_loss_density(b[i], h[i], freq[i]);
            }
            if (!std::isfinite(s.nrmse) || !std::isfinite(s.r2)) throw ValueError("non-finite metric");
            nr.push_back(s.nrmse);
            r2.push_back(s.r2);
        } catch (const Error& e) {
            s.flagged = true;
            s.error = e.what();
            ++r.flagged;
        }
    }
    r.nrmse = aggregate(nr);
    r.r2 = aggregate(r2);
    r.nrmse_hist = histogram(nr, bins);
    return r;
}

EvalReport evaluate(const model::ModelConfig& cfg, const model::ModelParams& params,
                    std::span<const features::PreparedSample> test_set, const features::ScalerState& scaler,
                    const features::Pipeline& pipeline, std::size_t bins)
{
    if (test_set.empty()) throw DataError("evaluate: empty test set");
    cfg.validate();
    model::check_structure(cfg, params);
    const std::size_t n = test_set.size();
    std::vector<std::vector<double>> pred(n), meas(n), bs(n);
    std::vector<double> fs(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (test_set[i].h.empty()) throw DataError("evaluate: test sample " + std::to_string(i) + " has no H");
        if (test_set[i].b.size() != cfg.seq_len)
            throw ShapeError("evaluate: sample length " + std::to_string(test_set[i].b.size()) +
                             " does not match model length " + std::to_string(cfg.seq_len));
    }
    // Each sample gets its own inference tape, so workers share nothing mutable.
    parallel_for(n, [&](std::size_t i) {
        const auto bundle = features::make_bundle(test_set[i], scaler, pipeline);
        const auto out = model::forward(cfg, params, bundle.seq, bundle.scalars);
        pred[i] = features::unscale_h(out.values(), scaler);
        meas[i] = test_set[i].h;
        bs[i] = test_set[i].b;
        fs[i] = test_set[i].freq;
    });
    auto r = summarize(meas, pred, bs, fs, bins);
    r.predictions = std::move(pred);
    return r;
}

} // namespace resfno::metrics
