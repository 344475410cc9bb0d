#include "resfno/data.hpp"

#include "resfno/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>

namespace resfno::data {

namespace {

using Rows = std::vector<std::vector<double>>;

Rows read_rows(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    Rows rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> row;
        std::size_t col = 0, start = 0;
        while (start <= line.size()) {
            std::size_t end = line.find(',', start);
            if (end == std::string::npos) end = line.size();
            std::string_view cell(line.data() + start, end - start);
            while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
            while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
            ++col;
            double v = 0.0;
            if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
                throw DataError(path.filename().string() + ": non-numeric cell at row " + std::to_string(lineno) +
                                ", column " + std::to_string(col));
            row.push_back(v);
            start = end + 1;
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError(path.filename().string() + ": file is empty");
    return rows;
}

std::vector<double> read_scalars(const std::filesystem::path& path)
{
    auto rows = read_rows(path);
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != 1)
            throw DataError(path.filename().string() + ": row " + std::to_string(i + 1) + " holds " +
                            std::to_string(rows[i].size()) + " values, expected one scalar");
        out.push_back(rows[i][0]);
    }
    return out;
}

void require_rows(const std::string& a, std::size_t na, const std::string& b, std::size_t nb)
{
    if (na != nb)
        throw DataError("row-count mismatch: " + a + " has " + std::to_string(na) + " rows, " + b + " has " +
                        std::to_string(nb));
}

std::string fmt(double v)
{
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

void write_rows(const std::filesystem::path& path, const std::vector<const std::vector<double>*>& rows)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto* r : rows) {
        for (std::size_t i = 0; i < r->size(); ++i) {
            if (i) out << ',';
            out << fmt((*r)[i]);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace

Dataset load_csv_dir(const std::filesystem::path& dir, const CsvFiles& files)
{
    for (const auto* name : {&files.b, &files.f, &files.t})
        if (!std::filesystem::exists(dir / *name)) throw IoError("missing " + (dir / *name).string());
    const auto b_rows = read_rows(dir / files.b);
    const auto freqs = read_scalars(dir / files.f);
    const auto temps = read_scalars(dir / files.t);
    Rows h_rows;
    const bool has_h = std::filesystem::exists(dir / files.h);
    if (has_h) h_rows = read_rows(dir / files.h);

    if (has_h) require_rows(files.b, b_rows.size(), files.h, h_rows.size());
    require_rows(files.b, b_rows.size(), files.f, freqs.size());
    require_rows(files.b, b_rows.size(), files.t, temps.size());

    Dataset d;
    d.provenance = "csv:" + dir.string();
    d.samples.reserve(b_rows.size());
    for (std::size_t i = 0; i < b_rows.size(); ++i) {
        features::WaveformSample s;
        s.b = b_rows[i];
        if (has_h) {
            s.h = h_rows[i];
            if (s.h.size() != s.b.size())
                throw DataError("row " + std::to_string(i + 1) + ": " + files.b + " has " + std::to_string(s.b.size()) +
                                " columns but " + files.h + " has " + std::to_string(s.h.size()));
        }
        s.freq = freqs[i];
        s.temp = temps[i];
        try {
            s.validate();
        } catch (const DataError& e) {
            throw DataError("row " + std::to_string(i + 1) + ": " + e.what());
        }
        d.samples.push_back(std::move(s));
    }
    return d;
}

void write_csv_dir(const Dataset& d, const std::filesystem::path& dir, const CsvFiles& files)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::vector<const std::vector<double>*> b, h;
    std::vector<std::vector<double>> f, t;
    bool all_h = !d.samples.empty();
    for (const auto& s : d.samples) {
        b.push_back(&s.b);
        h.push_back(&s.h);
        f.push_back({s.freq});
        t.push_back({s.temp});
        all_h = all_h && s.has_h();
    }
    std::vector<const std::vector<double>*> fp, tp;
    for (const auto& v : f) fp.push_back(&v);
    for (const auto& v : t) tp.push_back(&v);
    write_rows(dir / files.b, b);
    if (all_h) write_rows(dir / files.h, h);
    write_rows(dir / files.f, fp);
    write_rows(dir / files.t, tp);
}

std::pair<Dataset, Dataset> split_train_val(const Dataset& d, double ratio, std::uint64_t seed)
{
    if (!(ratio > 0.0 && ratio < 1.0)) throw ValueError("split: ratio must lie strictly between 0 and 1");
    const std::size_t n = d.size();
    if (n < 2) throw DataError("split: need at least 2 samples, got " + std::to_string(n));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng() % (i + 1)]);

    auto first = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
    first = std::clamp<std::size_t>(first, 1, n - 1);
    Dataset a, b;
    a.provenance = d.provenance + "#split(" + std::to_string(seed) + ",0)";
    b.provenance = d.provenance + "#split(" + std::to_string(seed) + ",1)";
    for (std::size_t i = 0; i < n; ++i) (i < first ? a : b).samples.push_back(d.samples[idx[i]]);
    return {std::move(a), std::move(b)};
}

} // namespace resfno::data
