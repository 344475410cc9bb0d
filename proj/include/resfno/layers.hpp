#pragma once

#include "resfno/autodiff.hpp"
#include "resfno/spectral.hpp"

#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace resfno::layers {

struct Conv1dParams {
    Tensor kernel;  // [C_out, C_in, K]
    Tensor bias;    // [C_out]

    std::size_t out_channels() const { return kernel.dim(0); }
    std::size_t in_channels() const { return kernel.dim(1); }
    std::size_t ksize() const { return kernel.dim(2); }

    static Conv1dParams zeros(std::size_t c_out, std::size_t c_in, std::size_t k);
    /// Centered delta on the matching channel (c_out == c_in).
    static Conv1dParams identity(std::size_t channels, std::size_t k);
    /// Kernel and bias uniform in +-sqrt(1/(c_in*k)).
    static Conv1dParams random(std::size_t c_out, std::size_t c_in, std::size_t k, std::mt19937_64& rng);
};

struct AffineParams {
    Tensor weight;  // [out, in]
    Tensor bias;    // [out]

    std::size_t in_features() const { return weight.dim(1); }
    std::size_t out_features() const { return weight.dim(0); }

    static AffineParams zeros(std::size_t out, std::size_t in);
    static AffineParams random(std::size_t out, std::size_t in, std::mt19937_64& rng);
};

/// Affine layers with ReLU between consecutive layers (none after the last).
struct MlpParams {
    std::vector<AffineParams> layers;

    std::size_t in_features() const { return layers.front().in_features(); }
    std::size_t out_features() const { return layers.back().out_features(); }
    void validate(const char* what) const;

    static MlpParams random(const std::vector<std::size_t>& widths, std::mt19937_64& rng);
};

struct ChannelAffine {
    Tensor gain;   // [C]
    Tensor shift;  // [C]

    static ChannelAffine unit(std::size_t channels);
};

struct FnoBlockParams {
    spectral::SpectralWeights spectral;
    Conv1dParams pointwise;  // ksize 1
};

struct ResBlockParams {
    Conv1dParams conv1;
    ChannelAffine norm1;
    Conv1dParams conv2;
    ChannelAffine norm2;
};

/// Maps parameter tensors onto tape leaves. Tensors registered with a name
/// become trainable parameters on a recording tape; anything else is bound
/// as a constant. Each tensor is bound at most once per tape.
class Binder {
public:
    explicit Binder(ad::Tape& tape) : tape_(tape) {}

    void name(const Tensor& t, std::string name) { names_[&t] = std::move(name); }
    ad::Var operator()(const Tensor& t);
    ad::Tape& tape() { return tape_; }

private:
    ad::Tape& tape_;
    std::unordered_map<const Tensor*, std::string> names_;
    std::unordered_map<const Tensor*, ad::Var> bound_;
};

// Tape-level building blocks. Sequences are [C, N] or [B, C, N].

ad::Var conv1d_circular(Binder& bind, ad::Var x, const Conv1dParams& p);
ad::Var instance_norm(Binder& bind, ad::Var x, const ChannelAffine& p, double eps = 1e-5);
/// x [R, in] or [in]; ReLU between layers.
ad::Var mlp(Binder& bind, ad::Var x, const MlpParams& p);
/// MLP applied independently at every time step: [B, in, N] -> [B, out, N].
ad::Var mlp_pointwise(Binder& bind, ad::Var x, const MlpParams& p);
ad::Var spectral_conv(Binder& bind, ad::Var x, const spectral::SpectralWeights& w);
/// relu(spectral_conv(x) + pointwise(x))
ad::Var fno_block(Binder& bind, ad::Var x, const FnoBlockParams& p);
/// relu(F(x) + x), F = conv1 -> norm1 -> relu -> conv2 -> norm2
ad::Var res_block(Binder& bind, ad::Var x, const ResBlockParams& p);
/// lift(seq) + broadcast(enc(scalars)); seq [B, C_seq, N], scalars [B, 3].
ad::Var fuse_inputs(Binder& bind, ad::Var seq, ad::Var scalars, const Conv1dParams& lift, const MlpParams& enc);
/// Pointwise head MLP with one output; [B, d, N] -> [B, N] (or [d, N] -> [N]).
ad::Var output_head(Binder& bind, ad::Var x, const MlpParams& head);

// Plain-tensor evaluations of the same blocks (single sample, no gradients).

Tensor conv1d_circular(const Tensor& x, const Conv1dParams& p);
Tensor instance_norm(const Tensor& x, const ChannelAffine& p, double eps = 1e-5);
Tensor fno_block(const Tensor& x, const FnoBlockParams& p);
Tensor res_block(const Tensor& x, const ResBlockParams& p);
Tensor fuse_inputs(const Tensor& seq, const Tensor& scalars, const Conv1dParams& lift, const MlpParams& enc);
Tensor output_head(const Tensor& x, const MlpParams& head);

} // namespace resfno::layers
