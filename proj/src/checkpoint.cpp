#include "resfno/checkpoint.hpp"

#include "resfno/error.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace resfno {

namespace {

constexpr const char* kMagic = "RESFNO-CHECKPOINT 1";

std::string fmt(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_double(const std::string& s, const std::filesystem::path& path)
{
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw DataError(path.string() + ": bad number '" + s + "'");
    return v;
}

std::size_t parse_size(const std::string& s, const std::filesystem::path& path)
{
    std::size_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw DataError(path.string() + ": bad integer '" + s + "'");
    return v;
}

constexpr features::Feature kFeatures[] = {features::Feature::B,    features::Feature::H,    features::Feature::DbDt,
                                           features::Feature::Freq, features::Feature::Temp, features::Feature::DeltaB};

} // namespace

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path)
{
    model::check_structure(c.model, c.params);
    std::ostringstream s;
    s << kMagic << '\n';
    const auto& m = c.model;
    s << "config d_model " << m.d_model << '\n';
    s << "config n_fno " << m.n_fno << '\n';
    s << "config modes " << m.modes << '\n';
    s << "config m_res " << m.m_res << '\n';
    s << "config kernel_sizes";
    for (auto k : m.kernel_sizes) s << ' ' << k;
    s << '\n';
    s << "config seq_len " << m.seq_len << '\n';
    s << "config variant " << model::to_string(m.variant) << '\n';
    s << "config lift_ksize " << m.lift_ksize << '\n';
    s << "config enc_hidden " << m.enc_hidden << '\n';
    s << "config head_hidden " << m.head_hidden << '\n';
    s << "pipeline resample_len " << c.pipeline.resample_len << '\n';
    s << "pipeline include_dbdt " << (c.pipeline.include_dbdt ? 1 : 0) << '\n';
    for (auto f : kFeatures) {
        const auto& r = c.scaler.range(f);
        s << "scaler " << features::feature_name(f) << ' ' << fmt(r.min) << ' ' << fmt(r.max) << ' '
          << (r.constant ? 1 : 0) << '\n';
    }
    c.params.visit([&](const std::string& name, const Tensor& t) {
        s << "tensor " << name << ' ' << t.rank();
        for (auto d : t.shape()) s << ' ' << d;
        s << '\n';
        for (std::size_t i = 0; i < t.size(); ++i) s << (i ? " " : "") << fmt(t[i]);
        s << '\n';
    });
    s << "end\n";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out << s.str();
    if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kMagic) throw DataError(path.string() + ": not a checkpoint (bad header)");

    Checkpoint c;
    std::map<std::string, Tensor> tensors;
    bool ended = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind.empty()) continue;
        if (kind == "end") {
            ended = true;
            break;
        }
        std::string key;
        ls >> key;
        std::vector<std::string> rest;
        for (std::string w; ls >> w;) rest.push_back(w);
        auto one = [&]() -> const std::string& {
            if (rest.size() != 1) throw DataError(path.string() + ": malformed line '" + line + "'");
            return rest[0];
        };
        if (kind == "config") {
            auto& m = c.model;
            if (key == "d_model") m.d_model = parse_size(one(), path);
            else if (key == "n_fno") m.n_fno = parse_size(one(), path);
            else if (key == "modes") m.modes = parse_size(one(), path);
            else if (key == "m_res") m.m_res = parse_size(one(), path);
            else if (key == "kernel_sizes") {
                m.kernel_sizes.clear();
                for (const auto& w : rest) m.kernel_sizes.push_back(parse_size(w, path));
            } else if (key == "seq_len") m.seq_len = parse_size(one(), path);
            else if (key == "variant") m.variant = model::parse_variant(one());
            else if (key == "lift_ksize") m.lift_ksize = parse_size(one(), path);
            else if (key == "enc_hidden") m.enc_hidden = parse_size(one(), path);
            else if (key == "head_hidden") m.head_hidden = parse_size(one(), path);
            else throw DataError(path.string() + ": unknown config key '" + key + "'");
        } else if (kind == "pipeline") {
            if (key == "resample_len") c.pipeline.resample_len = parse_size(one(), path);
            else if (key == "include_dbdt") c.pipeline.include_dbdt = parse_size(one(), path) != 0;
            else throw DataError(path.string() + ": unknown pipeline key '" + key + "'");
        } else if (kind == "scaler") {
            if (rest.size() != 3) throw DataError(path.string() + ": malformed scaler line '" + line + "'");
            bool found = false;
            for (auto f : kFeatures)
                if (features::feature_name(f) == key) {
                    c.scaler.set_range(f, {parse_double(rest[0], path), parse_double(rest[1], path), rest[2] == "1"});
                    found = true;
                }
            if (!found) throw DataError(path.string() + ": unknown scaler feature '" + key + "'");
        } else if (kind == "tensor") {
            if (rest.empty()) throw DataError(path.string() + ": malformed tensor line '" + line + "'");
            const std::size_t rank = parse_size(rest[0], path);
            if (rest.size() != rank + 1) throw DataError(path.string() + ": tensor '" + key + "' has a bad shape");
            Shape shape;
            for (std::size_t i = 0; i < rank; ++i) shape.push_back(parse_size(rest[i + 1], path));
            Tensor t(shape);
            std::string values;
            if (!std::getline(in, values)) throw DataError(path.string() + ": truncated tensor '" + key + "'");
            std::istringstream vs(values);
            std::size_t i = 0;
            for (std::string w; vs >> w; ++i) {
                if (i >= t.size()) throw DataError(path.string() + ": tensor '" + key + "' has too many values");
                t[i] = parse_double(w, path);
            }
            if (i != t.size()) throw DataError(path.string() + ": tensor '" + key + "' has too few values");
            if (!tensors.emplace(key, std::move(t)).second)
                throw DataError(path.string() + ": duplicate tensor '" + key + "'");
        } else {
            throw DataError(path.string() + ": unknown record '" + kind + "'");
        }
    }
    if (!ended) throw DataError(path.string() + ": truncated checkpoint (no end marker)");

    c.model.validate();
    c.pipeline.seq_len = c.model.seq_len;
    c.pipeline.include_dbdt = c.model.variant != model::Variant::ResFnoNoDbdt;
    c.params = model::build(c.model, 0);
    std::size_t used = 0;
    c.params.visit([&](const std::string& name, Tensor& t) {
        const auto it = tensors.find(name);
        if (it == tensors.end()) throw DataError(path.string() + ": missing tensor '" + name + "'");
        if (it->second.shape() != t.shape())
            throw ShapeError(path.string() + ": tensor '" + name + "' has shape " + shape_string(it->second.shape()) +
                             ", model expects " + shape_string(t.shape()));
        t = it->second;
        ++used;
    });
    if (used != tensors.size()) throw DataError(path.string() + ": checkpoint holds tensors the model does not use");
    return c;
}

} // namespace resfno
