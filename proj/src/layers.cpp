#include "resfno/layers.hpp"

#include "resfno/error.hpp"

#include <cmath>

namespace resfno::layers {

namespace {

void fill_uniform(Tensor& t, double bound, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : t.values()) v = dist(rng);
}

} // namespace

Conv1dParams Conv1dParams::zeros(std::size_t c_out, std::size_t c_in, std::size_t k)
{
    return {Tensor(Shape{c_out, c_in, k}), Tensor(Shape{c_out})};
}

Conv1dParams Conv1dParams::identity(std::size_t channels, std::size_t k)
{
    auto p = zeros(channels, channels, k);
    for (std::size_t c = 0; c < channels; ++c) p.kernel[(c * channels + c) * k + (k - 1) / 2] = 1.0;
    return p;
}

Conv1dParams Conv1dParams::random(std::size_t c_out, std::size_t c_in, std::size_t k, std::mt19937_64& rng)
{
    auto p = zeros(c_out, c_in, k);
    const double bound = std::sqrt(1.0 / static_cast<double>(c_in * k));
    fill_uniform(p.kernel, bound, rng);
    fill_uniform(p.bias, bound, rng);
    return p;
}

AffineParams AffineParams::zeros(std::size_t out, std::size_t in)
{
    return {Tensor(Shape{out, in}), Tensor(Shape{out})};
}

AffineParams AffineParams::random(std::size_t out, std::size_t in, std::mt19937_64& rng)
{
    auto p = zeros(out, in);
    const double bound = std::sqrt(1.0 / static_cast<double>(in));
    fill_uniform(p.weight, bound, rng);
    fill_uniform(p.bias, bound, rng);
    return p;
}

void MlpParams::validate(const char* what) const
{
    if (layers.empty()) throw ShapeError(std::string(what) + ": MLP has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.weight.rank() != 2 || l.bias.rank() != 1 || l.bias.dim(0) != l.weight.dim(0))
            throw ShapeError(std::string(what) + ": layer " + std::to_string(i) + " weight " +
                             shape_string(l.weight.shape()) + " / bias " + shape_string(l.bias.shape()));
        if (i > 0 && layers[i - 1].out_features() != l.in_features())
            throw ShapeError(std::string(what) + ": layer " + std::to_string(i - 1) + " emits " +
                             std::to_string(layers[i - 1].out_features()) + " features but layer " + std::to_string(i) +
                             " takes " + std::to_string(l.in_features()));
    }
}

MlpParams MlpParams::random(const std::vector<std::size_t>& widths, std::mt19937_64& rng)
{
    if (widths.size() < 2) throw ShapeError("mlp: need at least input and output widths");
    MlpParams p;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) p.layers.push_back(AffineParams::random(widths[i + 1], widths[i], rng));
    return p;
}

ChannelAffine ChannelAffine::unit(std::size_t channels)
{
    return {Tensor(Shape{channels}, 1.0), Tensor(Shape{channels})};
}

ad::Var Binder::operator()(const Tensor& t)
{
    if (auto it = bound_.find(&t); it != bound_.end()) return it->second;
    ad::Var v;
    if (auto it = names_.find(&t); it != names_.end())
        v = tape_.parameter(it->second, t);
    else
        v = tape_.constant(t);
    bound_.emplace(&t, v);
    return v;
}

ad::Var conv1d_circular(Binder& bind, ad::Var x, const Conv1dParams& p)
{
    return ad::conv1d_circular(x, bind(p.kernel), bind(p.bias));
}

ad::Var instance_norm(Binder& bind, ad::Var x, const ChannelAffine& p, double eps)
{
    return ad::instance_norm(x, bind(p.gain), bind(p.shift), eps);
}

ad::Var mlp(Binder& bind, ad::Var x, const MlpParams& p)
{
    p.validate("mlp");
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        x = ad::affine(x, bind(p.layers[i].weight), bind(p.layers[i].bias));
        if (i + 1 < p.layers.size()) x = ad::relu(x);
    }
    return x;
}

ad::Var mlp_pointwise(Binder& bind, ad::Var x, const MlpParams& p)
{
    p.validate("mlp_pointwise");
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        const auto& l = p.layers[i];
        auto kernel = ad::reshape(bind(l.weight), Shape{l.out_features(), l.in_features(), 1});
        x = ad::conv1d_circular(x, kernel, bind(l.bias));
        if (i + 1 < p.layers.size()) x = ad::relu(x);
    }
    return x;
}

ad::Var spectral_conv(Binder& bind, ad::Var x, const spectral::SpectralWeights& w)
{
    const std::size_t n = x.shape().back();
    if (w.modes > n / 2 + 1)
        throw ShapeError("spectral_conv: " + std::to_string(w.modes) + " modes exceed floor(N/2)+1 for N=" +
                         std::to_string(n));
    auto spectrum = ad::rfft(x, w.modes);
    auto mixed = ad::complex_mode_multiply(spectrum, bind(w.weights));
    return ad::irfft(mixed, n);
}

ad::Var fno_block(Binder& bind, ad::Var x, const FnoBlockParams& p)
{
    if (p.pointwise.ksize() != 1) throw ShapeError("fno_block: pointwise path must have kernel size 1");
    if (p.spectral.in_channels() != p.pointwise.in_channels() || p.spectral.out_channels() != p.pointwise.out_channels())
        throw ShapeError("fno_block: spectral and pointwise channel counts differ");
    return ad::relu(ad::add(spectral_conv(bind, x, p.spectral), conv1d_circular(bind, x, p.pointwise)));
}

ad::Var res_block(Binder& bind, ad::Var x, const ResBlockParams& p)
{
    const std::size_t channels = x.shape().size() == 3 ? x.shape()[1] : x.shape()[0];
    if (p.conv1.in_channels() != channels || p.conv2.out_channels() != channels)
        throw ShapeError("res_block: block maps " + std::to_string(p.conv1.in_channels()) + " -> " +
                         std::to_string(p.conv2.out_channels()) + " channels but the shortcut carries " +
                         std::to_string(channels));
    auto f = conv1d_circular(bind, x, p.conv1);
    f = ad::relu(instance_norm(bind, f, p.norm1));
    f = conv1d_circular(bind, f, p.conv2);
    f = instance_norm(bind, f, p.norm2);
    return ad::relu(ad::add(f, x));
}

ad::Var fuse_inputs(Binder& bind, ad::Var seq, ad::Var scalars, const Conv1dParams& lift, const MlpParams& enc)
{
    enc.validate("fuse_inputs");
    if (enc.in_features() != scalars.shape().back())
        throw ShapeError("fuse_inputs: scalar encoder takes " + std::to_string(enc.in_features()) + " inputs, got " +
                         shape_string(scalars.shape()));
    if (enc.out_features() != lift.out_channels())
        throw ShapeError("fuse_inputs: scalar encoding width " + std::to_string(enc.out_features()) +
                         " differs from lifted width " + std::to_string(lift.out_channels()));
    auto lifted = conv1d_circular(bind, seq, lift);
    auto code = mlp(bind, scalars, enc);
    return ad::add(lifted, ad::broadcast_over_time(code, seq.shape().back()));
}

ad::Var output_head(Binder& bind, ad::Var x, const MlpParams& head)
{
    head.validate("output_head");
    if (head.out_features() != 1) throw ShapeError("output_head: head must emit one feature");
    const auto& s = x.shape();
    const std::size_t channels = s.size() == 3 ? s[1] : s[0];
    if (head.in_features() != channels)
        throw ShapeError("output_head: head takes " + std::to_string(head.in_features()) + " channels, got " +
                         shape_string(s));
    auto y = mlp_pointwise(bind, x, head);
    return s.size() == 3 ? ad::reshape(y, Shape{s[0], s[2]}) : ad::reshape(y, Shape{s[1]});
}

Tensor conv1d_circular(const Tensor& x, const Conv1dParams& p)
{
    ad::Tape tape(ad::Tape::Mode::Inference);
    Binder bind(tape);
    return conv1d_circular(bind, tape.constant(x), p).value();
}

Tensor instance_norm(const Tensor& x, const ChannelAffine& p, double eps)
{
    ad::Tape tape(ad::Tape::Mode::Inference);
    Binder bind(tape);
    return instance_norm(bind, tape.constant(x), p, eps).value();
}

Tensor fno_block(const Tensor& x, const FnoBlockParams& p)
{
    ad::Tape tape(ad::Tape::Mode::Inference);
    Binder bind(tape);
    return fno_block(bind, tape.constant(x), p).value();
}

Tensor res_block(const Tensor& x, const ResBlockParams& p)
{
    ad::Tape tape(ad::Tape::Mode::Inference);
    Binder bind(tape);
    return res_block(bind, tape.constant(x), p).value();
}

Tensor fuse_inputs(const Tensor& seq, const Tensor& scalars, const Conv1dParams& lift, const MlpParams& enc)
{
    ad::Tape tape(ad::Tape::Mode::Inference);
    Binder bind(tape);
    return fuse_inputs(bind, tape.constant(seq), tape.constant(scalars), lift, enc).value();
}

Tensor output_head(const Tensor& x, const MlpParams& head)
{
    ad::Tape tape(ad::Tape::Mode::Inference);
    Binder bind(tape);
    return output_head(bind, tape.constant(x), head).value();
}

} // namespace resfno::layers
