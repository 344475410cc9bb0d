#pragma once

#include "resfno/features.hpp"
#include "resfno/model.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace resfno::metrics {

/// RMSE over the peak |h|, in percent.
double nrmse(std::span<const double> h, std::span<const double> h_hat);
/// Coefficient of determination in percent; negative for fits worse than the mean.
double r_squared(std::span<const double> h, std::span<const double> h_hat);
/// f times the closed-contour integral of H dB (central differences, periodic). Counterclockwise is positive.
double core_loss_density(std::span<const double> b, std::span<const double> h, double freq);

/// Linear-interpolation percentile, p in [0, 100], of a nonempty list.
double percentile(std::vector<double> values, double p);
double median(std::vector<double> values);
double mean(std::span<const double> values);

struct Histogram {
    std::vector<double> edges;  // bins + 1 edges
    std::vector<std::size_t> counts;

    std::size_t total() const;
};
/// Uniform bins over [min, max] of the values; the last bin is closed.
Histogram histogram(std::span<const double> values, std::size_t bins = 50);

struct SampleMetrics {
    std::size_t index = 0;
    bool flagged = false;
    std::string error;
    double nrmse = 0.0;  // percent
    double r2 = 0.0;     // percent
    std::optional<double> core_loss_pred, core_loss_meas;  // W / m^3
};

struct Aggregate {
    double mean = 0.0, median = 0.0, p95 = 0.0, min = 0.0, max = 0.0;
};

struct EvalReport {
    std::vector<SampleMetrics> samples;
    std::size_t flagged = 0;
    Aggregate nrmse, r2;
    Histogram nrmse_hist;
    // Physical-unit predictions, kept for loop plots.
    std::vector<std::vector<double>> predictions;
};

/// Builds the report from measured and predicted sequences (physical H).
/// `b` and `freq` enable core loss; pass empty spans to skip it.
EvalReport summarize(std::span<const std::vector<double>> h, std::span<const std::vector<double>> h_hat,
                     std::span<const std::vector<double>> b = {}, std::span<const double> freq = {},
                     std::size_t bins = 50);

/// Runs the model over prepared samples, unscales to physical H and scores every sample.
EvalReport evaluate(const model::ModelConfig& cfg, const model::ModelParams& params,
                    std::span<const features::PreparedSample> test_set, const features::ScalerState& scaler,
                    const features::Pipeline& pipeline, std::size_t bins = 50);

// Report files.
void write_per_sample_csv(const EvalReport& r, const std::filesystem::path& path);
void write_summary_json(const EvalReport& r, const std::filesystem::path& path, const std::string& label = {});
void write_histogram_csv(const Histogram& h, const std::filesystem::path& path);
void write_histogram_svg(const Histogram& h, const std::filesystem::path& path, const std::string& title = "NRMSE (%)");
void write_predictions_csv(const EvalReport& r, const std::filesystem::path& path);

} // namespace resfno::metrics
