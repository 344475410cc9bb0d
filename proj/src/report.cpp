#include "resfno/error.hpp"
#include "resfno/metrics.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace resfno::metrics {

namespace {

std::string fmt(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path)
{
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

nlohmann::ordered_json aggregate_json(const Aggregate& a)
{
    return {{"mean", a.mean}, {"median", a.median}, {"p95", a.p95}, {"min", a.min}, {"max", a.max}};
}

} // namespace

void write_per_sample_csv(const EvalReport& r, const std::filesystem::path& path)
{
    auto out = open_out(path);
    out << "index,flagged,nrmse_pct,r2_pct,core_loss_pred,core_loss_meas,error\n";
    for (const auto& s : r.samples) {
        out << s.index << ',' << (s.flagged ? 1 : 0) << ',';
        if (!s.flagged) out << fmt(s.nrmse) << ',' << fmt(s.r2);
        else out << ',';
        out << ',' << (s.core_loss_pred && !s.flagged ? fmt(*s.core_loss_pred) : "");
        out << ',' << (s.core_loss_meas && !s.flagged ? fmt(*s.core_loss_meas) : "");
        std::string err = s.error;
        for (auto& c : err)
            if (c == ',' || c == '\n') c = ';';
        out << ',' << err << '\n';
    }
    finish(out, path);
}

void write_summary_json(const EvalReport& r, const std::filesystem::path& path, const std::string& label)
{
    nlohmann::ordered_json j;
    if (!label.empty()) j["label"] = label;
    j["samples"] = r.samples.size();
    j["flagged"] = r.flagged;
    j["nrmse_pct"] = aggregate_json(r.nrmse);
    j["r2_pct"] = aggregate_json(r.r2);
    double pred = 0.0, meas = 0.0;
    std::size_t n = 0;
    for (const auto& s : r.samples)
        if (!s.flagged && s.core_loss_pred) {
            pred += *s.core_loss_pred;
            meas += *s.core_loss_meas;
            ++n;
        }
    if (n > 0) j["core_loss_mean"] = {{"predicted", pred / static_cast<double>(n)}, {"measured", meas / static_cast<double>(n)}};
    j["histogram_bins"] = r.nrmse_hist.counts.size();
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    finish(out, path);
}

void write_histogram_csv(const Histogram& h, const std::filesystem::path& path)
{
    auto out = open_out(path);
    out << "bin_left,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) out << fmt(h.edges[i]) << ',' << h.counts[i] << '\n';
    finish(out, path);
}

void write_histogram_svg(const Histogram& h, const std::filesystem::path& path, const std::string& title)
{
    const double width = 640, height = 360, left = 50, right = 20, top = 30, bottom = 40;
    const double pw = width - left - right, ph = height - top - bottom;
    std::size_t peak = 1;
    for (auto c : h.counts) peak = std::max(peak, c);
    std::ostringstream s;
    s << std::fixed << std::setprecision(2);
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    const double bw = h.counts.empty() ? 0 : pw / static_cast<double>(h.counts.size());
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double bh = ph * static_cast<double>(h.counts[i]) / static_cast<double>(peak);
        s << "<rect x=\"" << left + bw * static_cast<double>(i) << "\" y=\"" << top + ph - bh << "\" width=\""
          << std::max(bw - 1.0, 0.5) << "\" height=\"" << bh << "\" fill=\"steelblue\"/>\n";
    }
    s << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
    if (!h.edges.empty()) {
        s << "<text x=\"" << left << "\" y=\"" << height - 15 << "\" font-size=\"11\">" << fmt(h.edges.front())
          << "</text>\n";
        s << "<text x=\"" << left + pw << "\" y=\"" << height - 15 << "\" text-anchor=\"end\" font-size=\"11\">"
          << fmt(h.edges.back()) << "</text>\n";
    }
    s << "<text x=\"" << left - 5 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\" font-size=\"11\">" << peak
      << "</text>\n";
    s << "</svg>\n";
    auto out = open_out(path);
    out << s.str();
    finish(out, path);
}

void write_predictions_csv(const EvalReport& r, const std::filesystem::path& path)
{
    auto out = open_out(path);
    for (const auto& p : r.predictions) {
        for (std::size_t i = 0; i < p.size(); ++i) out << (i ? "," : "") << fmt(p[i]);
        out << '\n';
    }
    finish(out, path);
}

} // namespace resfno::metrics
