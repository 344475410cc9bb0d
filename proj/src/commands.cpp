#include "resfno/commands.hpp"

#include "resfno/error.hpp"

#include <json.hpp>

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

namespace resfno::cli {

namespace fs = std::filesystem;

std::uint64_t split_seed(std::uint64_t seed) { return seed * 0x9E3779B97F4A7C15ULL + 1; }
std::uint64_t init_seed(std::uint64_t seed) { return seed * 0xBF58476D1CE4E5B9ULL + 2; }

namespace {

std::string fmt(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<features::PreparedSample> prepare_all(const data::Dataset& d, const features::Pipeline& p)
{
    std::vector<features::PreparedSample> out;
    out.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        try {
            out.push_back(features::prepare(d.samples[i], p));
        } catch (const Error& e) {
            throw DataError("sample " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

std::vector<features::FeatureBundle> bundle_all(const std::vector<features::PreparedSample>& s,
                                                const features::ScalerState& scaler, const features::Pipeline& p)
{
    std::vector<features::FeatureBundle> out;
    out.reserve(s.size());
    for (const auto& x : s) out.push_back(features::make_bundle(x, scaler, p));
    return out;
}

void require_data(const RunConfig& rc)
{
    if (rc.data.empty()) throw ConfigError("--data is required");
}

} // namespace

FitOutcome fit_model(const RunConfig& rc, const data::Dataset& train_data, std::ostream* log)
{
    rc.model.validate();
    rc.train.validate();
    const auto pipe = rc.pipeline();
    const auto [fit_set, val_set] = data::split_train_val(train_data, rc.train_fraction, split_seed(rc.seed));
    const auto fit_prep = prepare_all(fit_set, pipe);
    const auto val_prep = prepare_all(val_set, pipe);
    for (const auto* set : {&fit_prep, &val_prep})
        for (const auto& s : *set)
            if (s.h.empty()) throw DataError("training data must include H");

    FitOutcome o;
    o.checkpoint.model = rc.model;
    o.checkpoint.pipeline = pipe;
    o.checkpoint.scaler = features::ScalerState::fit(fit_prep);
    const auto fit_b = bundle_all(fit_prep, o.checkpoint.scaler, pipe);
    const auto val_b = bundle_all(val_prep, o.checkpoint.scaler, pipe);

    auto params = model::build(rc.model, init_seed(rc.seed));
    training::EpochCallback cb;
    if (log && rc.log_every > 0)
        cb = [&](const training::EpochRecord& r) {
            if (r.epoch % rc.log_every == 0 || r.epoch == 1)
                *log << "epoch " << r.epoch << " train " << r.train_loss << " val " << r.val_loss << '\n';
        };
    o.result = training::train(rc.model, std::move(params), fit_b, val_b, rc.train, cb);
    o.checkpoint.params = o.result.params;
    return o;
}

metrics::EvalReport evaluate_checkpoint(const Checkpoint& ckpt, const data::Dataset& test_data, std::size_t bins)
{
    const auto prep = prepare_all(test_data, ckpt.pipeline);
    return metrics::evaluate(ckpt.model, ckpt.params, prep, ckpt.scaler, ckpt.pipeline, bins);
}

std::vector<AblationRow> run_ablation(const RunConfig& rc, const data::Dataset& train_data,
                                      const data::Dataset& test_data, std::ostream* log)
{
    std::vector<AblationRow> rows;
    for (auto variant : {model::Variant::PureFno, model::Variant::ResFnoNoDbdt, model::Variant::ResFno}) {
        for (auto seed : rc.ablate_seeds) {
            RunConfig r = rc;
            r.model.variant = variant;
            r.seed = seed;
            r.finalize();
            if (log) *log << "ablate: " << model::to_string(variant) << " seed " << seed << '\n';
            const auto fit = fit_model(r, train_data, log);
            const auto rep = evaluate_checkpoint(fit.checkpoint, test_data, r.bins);
            rows.push_back({variant, seed, rep.r2.mean, rep.nrmse.mean, fit.result.best_epoch, fit.result.best_val});
        }
    }
    return rows;
}

int cmd_synth(const RunConfig& rc)
{
    const auto d = data::synth_generate(rc.synth);
    ensure_dir(rc.out);
    data::write_csv_dir(d, rc.out);

    nlohmann::ordered_json m;
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::ostringstream ts;
    ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
    m["created_at"] = ts.str();
    m["generator"] = "relay-stack hysteresis with eddy term and damped ringing";
    m["seed"] = rc.synth.seed;
    m["samples"] = d.size();
    nlohmann::ordered_json cfg;
    for (const auto& k : key_registry()) {
        const bool synth_key = k.doc.rfind("synth:", 0) == 0 || k.key == "seed";
        if (synth_key) cfg[k.key] = k.get(rc);
    }
    m["config"] = cfg;
    write_text(rc.out / "manifest.json", m.dump(2) + "\n");
    std::cerr << "wrote " << d.size() << " samples to " << rc.out.string() << '\n';
    return 0;
}

int cmd_train(const RunConfig& rc)
{
    require_data(rc);
    const auto d = data::load_csv_dir(rc.data);
    const auto fit = fit_model(rc, d, &std::cerr);
    ensure_dir(rc.out);
    save_checkpoint(fit.checkpoint, rc.out / "checkpoint.ckpt");
    training::write_history_csv(fit.result.history, rc.out / "history.csv");

    nlohmann::ordered_json j;
    j["variant"] = model::to_string(rc.model.variant);
    j["seed"] = rc.seed;
    j["parameters"] = fit.checkpoint.params.parameter_count();
    j["epochs"] = fit.result.history.size();
    j["best_epoch"] = fit.result.best_epoch;
    j["best_val_loss"] = fit.result.best_val;
    j["stopped_early"] = fit.result.stopped_early;
    j["hit_time_limit"] = fit.result.hit_time_limit;
    write_text(rc.out / "train_summary.json", j.dump(2) + "\n");
    std::cerr << "best epoch " << fit.result.best_epoch << " val " << fit.result.best_val << '\n';
    return 0;
}

int cmd_eval(const RunConfig& rc)
{
    require_data(rc);
    const fs::path ckpt_path = rc.checkpoint.empty() ? rc.out / "checkpoint.ckpt" : rc.checkpoint;
    if (!fs::exists(ckpt_path)) throw IoError("checkpoint not found: " + ckpt_path.string());
    const auto ckpt = load_checkpoint(ckpt_path);
    // Explicit architecture settings must agree with what the checkpoint was trained with.
    if (rc.explicitly_set.count("seq_len") && rc.model.seq_len != ckpt.model.seq_len)
        throw ConfigError("seq_len " + std::to_string(rc.model.seq_len) + " does not match checkpoint seq_len " +
                          std::to_string(ckpt.model.seq_len));
    if (rc.explicitly_set.count("variant") && rc.model.variant != ckpt.model.variant)
        throw ConfigError("variant " + model::to_string(rc.model.variant) + " does not match checkpoint variant " +
                          model::to_string(ckpt.model.variant) + " (input channels differ)");
    if (rc.explicitly_set.count("resample_len") && rc.resample_len != ckpt.pipeline.resample_len)
        throw ConfigError("resample_len does not match the checkpoint");

    const auto d = data::load_csv_dir(rc.data);
    const auto rep = evaluate_checkpoint(ckpt, d, rc.bins);
    ensure_dir(rc.out);
    metrics::write_per_sample_csv(rep, rc.out / "per_sample.csv");
    metrics::write_summary_json(rep, rc.out / "summary.json", model::to_string(ckpt.model.variant));
    metrics::write_histogram_csv(rep.nrmse_hist, rc.out / "histogram.csv");
    metrics::write_histogram_svg(rep.nrmse_hist, rc.out / "histogram.svg");
    if (rc.write_predictions) metrics::write_predictions_csv(rep, rc.out / "predictions.csv");
    std::cout << "samples " << rep.samples.size() << " flagged " << rep.flagged << " mean_nrmse_pct "
              << fmt(rep.nrmse.mean) << " mean_r2_pct " << fmt(rep.r2.mean) << '\n';
    return 0;
}

int cmd_ablate(const RunConfig& rc)
{
    require_data(rc);
    data::Dataset train_data, test_data;
    if (rc.test_data.empty()) {
        auto [a, b] = data::split_train_val(data::load_csv_dir(rc.data), 1.0 - rc.test_fraction, split_seed(rc.seed) + 7);
        train_data = std::move(a);
        test_data = std::move(b);
    } else {
        train_data = data::load_csv_dir(rc.data);
        test_data = data::load_csv_dir(rc.test_data);
    }
    const auto rows = run_ablation(rc, train_data, test_data, &std::cerr);
    ensure_dir(rc.out);

    std::ostringstream runs, table;
    runs << "variant,seed,mean_r2_pct,mean_nrmse_pct,best_epoch,best_val_loss\n";
    for (const auto& r : rows)
        runs << model::to_string(r.variant) << ',' << r.seed << ',' << fmt(r.mean_r2) << ',' << fmt(r.mean_nrmse) << ','
             << r.best_epoch << ',' << fmt(r.best_val) << '\n';
    table << "variant,mean_r2_pct,mean_nrmse_pct\n";
    for (auto variant : {model::Variant::PureFno, model::Variant::ResFnoNoDbdt, model::Variant::ResFno}) {
        double r2 = 0.0, nr = 0.0;
        std::size_t n = 0;
        for (const auto& r : rows)
            if (r.variant == variant) {
                r2 += r.mean_r2;
                nr += r.mean_nrmse;
                ++n;
            }
        table << model::to_string(variant) << ',' << fmt(r2 / static_cast<double>(n)) << ','
              << fmt(nr / static_cast<double>(n)) << '\n';
    }
    write_text(rc.out / "ablation_runs.csv", runs.str());
    write_text(rc.out / "ablation.csv", table.str());
    std::cout << table.str();
    return 0;
}

namespace {

std::vector<std::vector<double>> read_numeric_rows(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) {
            double v = 0.0;
            const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (r.ec != std::errc()) throw DataError(path.string() + ": non-numeric cell '" + cell + "'");
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string loop_svg(const std::vector<double>& b, const std::vector<double>& h, const std::vector<double>& hp)
{
    const double w = 360, ht = 300, pad = 30;
    double bmin = b[0], bmax = b[0], hmin = h[0], hmax = h[0];
    for (std::size_t i = 0; i < b.size(); ++i) {
        bmin = std::min(bmin, b[i]);
        bmax = std::max(bmax, b[i]);
        hmin = std::min({hmin, h[i], hp[i]});
        hmax = std::max({hmax, h[i], hp[i]});
    }
    if (bmax == bmin) bmax = bmin + 1;
    if (hmax == hmin) hmax = hmin + 1;
    auto pts = [&](const std::vector<double>& hs) {
        std::ostringstream s;
        s << std::fixed << std::setprecision(2);
        for (std::size_t i = 0; i <= b.size(); ++i) {
            const std::size_t k = i % b.size();
            s << pad + (hs[k] - hmin) / (hmax - hmin) * (w - 2 * pad) << ','
              << ht - pad - (b[k] - bmin) / (bmax - bmin) * (ht - 2 * pad) << ' ';
        }
        return s.str();
    };
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << ht << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"" << pts(h) << "\"/>\n"
      << "<polyline fill=\"none\" stroke=\"crimson\" stroke-dasharray=\"4 2\" points=\"" << pts(hp) << "\"/>\n"
      << "<text x=\"" << pad << "\" y=\"18\" font-size=\"11\">B-H loop: measured (black), predicted (red)</text>\n"
      << "</svg>\n";
    return s.str();
}

} // namespace

int cmd_report(const RunConfig& rc)
{
    const fs::path per_sample = rc.out / "per_sample.csv";
    std::ifstream in(per_sample);
    if (!in) throw IoError("cannot open " + per_sample.string() + " (run eval first)");
    std::string line;
    std::getline(in, line);
    std::vector<double> nr;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::vector<std::string> cells;
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        if (cells.size() < 3 || cells[1] == "1") continue;
        double v = 0.0;
        std::from_chars(cells[2].data(), cells[2].data() + cells[2].size(), v);
        nr.push_back(v);
    }
    const auto hist = metrics::histogram(nr, rc.bins);
    metrics::write_histogram_csv(hist, rc.out / "histogram.csv");
    metrics::write_histogram_svg(hist, rc.out / "histogram.svg");

    const fs::path pred_path = rc.out / "predictions.csv";
    std::size_t loops = 0;
    if (!rc.data.empty() && fs::exists(pred_path)) {
        ensure_dir(rc.out / "loops");
        const auto pred = read_numeric_rows(pred_path);
        const auto d = data::load_csv_dir(rc.data);
        if (d.size() != pred.size()) throw DataError("predictions and dataset hold different sample counts");
        // Predictions live on the model grid; reproduce that grid from the stored length.
        for (std::size_t i = 0; i < std::min<std::size_t>(pred.size(), 8); ++i) {
            features::Pipeline p;
            p.seq_len = pred[i].size();
            p.resample_len = rc.resample_len;
            const auto prep = features::prepare(d.samples[i], p);
            if (prep.h.empty()) continue;
            write_text(rc.out / "loops" / ("loop_" + std::to_string(i) + ".svg"), loop_svg(prep.b, prep.h, pred[i]));
            ++loops;
        }
    }
    std::cout << "histogram over " << nr.size() << " samples";
    if (loops) std::cout << ", " << loops << " loop plots";
    std::cout << '\n';
    return 0;
}

} // namespace resfno::cli
