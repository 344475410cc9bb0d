#include "resfno/model.hpp"

#include "resfno/error.hpp"

namespace resfno::model {

std::string to_string(Variant v)
{
    switch (v) {
    case Variant::PureFno: return "pure_fno";
    case Variant::ResFno: return "res_fno";
    case Variant::ResFnoNoDbdt: return "res_fno_no_dbdt";
    }
    return "unknown";
}

Variant parse_variant(const std::string& s)
{
    if (s == "pure_fno") return Variant::PureFno;
    if (s == "res_fno") return Variant::ResFno;
    if (s == "res_fno_no_dbdt") return Variant::ResFnoNoDbdt;
    throw ConfigError("unknown variant '" + s + "' (expected pure_fno, res_fno or res_fno_no_dbdt)");
}

void ModelConfig::validate() const
{
    if (d_model == 0 || n_fno == 0 || seq_len < 2 || enc_hidden == 0 || head_hidden == 0)
        throw ConfigError("model: d_model, n_fno, enc_hidden, head_hidden must be positive and seq_len >= 2");
    if (modes == 0 || modes > seq_len / 2 + 1)
        throw ConfigError("model: modes=" + std::to_string(modes) + " must lie in [1, floor(N/2)+1] = [1, " +
                          std::to_string(seq_len / 2 + 1) + "]");
    if (lift_ksize % 2 == 0 || lift_ksize > seq_len)
        throw ConfigError("model: lift_ksize must be odd and <= seq_len");
    if (has_res_path()) {
        if (kernel_sizes.size() != m_res)
            throw ConfigError("model: kernel_sizes lists " + std::to_string(kernel_sizes.size()) +
                              " entries but m_res=" + std::to_string(m_res));
        for (auto k : kernel_sizes)
            if (k % 2 == 0 || k > seq_len) throw ConfigError("model: kernel size " + std::to_string(k) + " must be odd and <= seq_len");
    }
}

namespace {

template <class Params, class Fn>
void visit_impl(Params& p, Fn&& fn)
{
    fn("lift.kernel", p.lift.kernel);
    fn("lift.bias", p.lift.bias);
    for (std::size_t i = 0; i < p.scalar_enc.layers.size(); ++i) {
        fn("scalar_enc." + std::to_string(i) + ".weight", p.scalar_enc.layers[i].weight);
        fn("scalar_enc." + std::to_string(i) + ".bias", p.scalar_enc.layers[i].bias);
    }
    for (std::size_t i = 0; i < p.fno_blocks.size(); ++i) {
        const std::string pre = "fno." + std::to_string(i) + ".";
        fn(pre + "spectral", p.fno_blocks[i].spectral.weights);
        fn(pre + "pointwise.kernel", p.fno_blocks[i].pointwise.kernel);
        fn(pre + "pointwise.bias", p.fno_blocks[i].pointwise.bias);
    }
    for (std::size_t i = 0; i < p.res_blocks.size(); ++i) {
        const std::string pre = "res." + std::to_string(i) + ".";
        auto& b = p.res_blocks[i];
        fn(pre + "conv1.kernel", b.conv1.kernel);
        fn(pre + "conv1.bias", b.conv1.bias);
        fn(pre + "norm1.gain", b.norm1.gain);
        fn(pre + "norm1.shift", b.norm1.shift);
        fn(pre + "conv2.kernel", b.conv2.kernel);
        fn(pre + "conv2.bias", b.conv2.bias);
        fn(pre + "norm2.gain", b.norm2.gain);
        fn(pre + "norm2.shift", b.norm2.shift);
    }
    for (std::size_t i = 0; i < p.head.layers.size(); ++i) {
        fn("head." + std::to_string(i) + ".weight", p.head.layers[i].weight);
        fn("head." + std::to_string(i) + ".bias", p.head.layers[i].bias);
    }
}

} // namespace

void ModelParams::visit(const std::function<void(const std::string&, Tensor&)>& fn) { visit_impl(*this, fn); }

void ModelParams::visit(const std::function<void(const std::string&, const Tensor&)>& fn) const { visit_impl(*this, fn); }

std::vector<std::pair<std::string, Tensor*>> ModelParams::named()
{
    std::vector<std::pair<std::string, Tensor*>> out;
    visit([&](const std::string& name, Tensor& t) { out.emplace_back(name, &t); });
    return out;
}

std::size_t ModelParams::parameter_count() const
{
    std::size_t n = 0;
    visit([&](const std::string&, const Tensor& t) { n += t.size(); });
    return n;
}

std::size_t expected_parameter_count(const ModelConfig& c)
{
    const std::size_t d = c.d_model;
    std::size_t n = d * c.seq_channels() * c.lift_ksize + d;        // lift
    n += c.enc_hidden * 3 + c.enc_hidden + d * c.enc_hidden + d;    // scalar encoder
    n += c.n_fno * (2 * d * d * c.modes + d * d + d);               // FNO blocks
    if (c.has_res_path())
        for (auto k : c.kernel_sizes) n += 2 * (d * d * k + d) + 4 * d;  // two convs, two norms
    n += c.head_hidden * d + c.head_hidden + c.head_hidden + 1;     // head
    return n;
}

ModelParams build(const ModelConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    std::mt19937_64 rng(seed);
    const std::size_t d = cfg.d_model;
    ModelParams p;
    p.lift = layers::Conv1dParams::random(d, cfg.seq_channels(), cfg.lift_ksize, rng);
    p.scalar_enc = layers::MlpParams::random({3, cfg.enc_hidden, d}, rng);
    for (std::size_t i = 0; i < cfg.n_fno; ++i)
        p.fno_blocks.push_back({spectral::SpectralWeights::random(d, d, cfg.modes, rng), layers::Conv1dParams::random(d, d, 1, rng)});
    if (cfg.has_res_path()) {
        for (auto k : cfg.kernel_sizes) {
            layers::ResBlockParams b;
            b.conv1 = layers::Conv1dParams::random(d, d, k, rng);
            b.norm1 = layers::ChannelAffine::unit(d);
            b.conv2 = layers::Conv1dParams::random(d, d, k, rng);
            b.norm2 = layers::ChannelAffine::unit(d);
            b.norm2.gain.fill(0.0);  // each block starts as relu(x); keeps early training close to the FNO path
            p.res_blocks.push_back(std::move(b));
        }
    }
    p.head = layers::MlpParams::random({d, cfg.head_hidden, 1}, rng);
    return p;
}

void check_structure(const ModelConfig& cfg, const ModelParams& p)
{
    cfg.validate();
    const std::size_t d = cfg.d_model;
    auto expect = [](const Tensor& t, const Shape& s, const std::string& what) {
        if (t.shape() != s)
            throw ShapeError("model: " + what + " has shape " + shape_string(t.shape()) + ", config implies " + shape_string(s));
    };
    expect(p.lift.kernel, {d, cfg.seq_channels(), cfg.lift_ksize}, "lift.kernel");
    if (p.fno_blocks.size() != cfg.n_fno) throw ShapeError("model: FNO block count differs from n_fno");
    for (const auto& b : p.fno_blocks) expect(b.spectral.weights, {d, d, cfg.modes, 2}, "fno spectral weights");
    const std::size_t want_res = cfg.has_res_path() ? cfg.m_res : 0;
    if (p.res_blocks.size() != want_res) throw ShapeError("model: residual block count differs from config");
    for (std::size_t i = 0; i < p.res_blocks.size(); ++i)
        expect(p.res_blocks[i].conv1.kernel, {d, d, cfg.kernel_sizes[i]}, "res." + std::to_string(i) + ".conv1.kernel");
    if (p.parameter_count() != expected_parameter_count(cfg)) throw ShapeError("model: parameter count differs from config");
}

void bind_parameters(layers::Binder& bind, const ModelParams& params)
{
    params.visit([&](const std::string& name, const Tensor& t) { bind.name(t, name); });
}

ad::Var forward(layers::Binder& bind, const ModelConfig& cfg, const ModelParams& params, ad::Var seq, ad::Var scalars,
                ForwardTaps* taps)
{
    const auto& s = seq.shape();
    const std::size_t channels = s.size() == 3 ? s[1] : (s.size() == 2 ? s[0] : 0);
    const std::size_t n = s.empty() ? 0 : s.back();
    if (channels != cfg.seq_channels())
        throw ShapeError("model: variant " + to_string(cfg.variant) + " expects " + std::to_string(cfg.seq_channels()) +
                         " sequence channels, got " + shape_string(s));
    if (n != cfg.seq_len)
        throw ShapeError("model: configured for N=" + std::to_string(cfg.seq_len) + ", got sequence " + shape_string(s));

    auto fused = layers::fuse_inputs(bind, seq, scalars, params.lift, params.scalar_enc);

    // Global operator path.
    auto x_fno = fused;
    for (const auto& b : params.fno_blocks) x_fno = layers::fno_block(bind, x_fno, b);

    if (taps) {
        taps->fused = fused.id;
        taps->fno_input = fused.id;
        taps->fno_output = x_fno.id;
    }
    if (!cfg.has_res_path()) return layers::output_head(bind, x_fno, params.head);

    // Local refinement path, in parallel on the same fused input.
    auto x_res = fused;
    for (const auto& b : params.res_blocks) x_res = layers::res_block(bind, x_res, b);
    if (taps) {
        taps->res_input = fused.id;
        taps->res_output = x_res.id;
    }
    return layers::output_head(bind, ad::relu(ad::add(x_fno, x_res)), params.head);
}

Tensor forward(const ModelConfig& cfg, const ModelParams& params, const Tensor& seq, const Tensor& scalars)
{
    ad::Tape tape(ad::Tape::Mode::Inference);
    layers::Binder bind(tape);
    return forward(bind, cfg, params, tape.constant(seq), tape.constant(scalars)).value();
}

} // namespace resfno::model
