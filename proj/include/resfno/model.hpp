#pragma once

#include "resfno/layers.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace resfno::model {

enum class Variant { PureFno, ResFno, ResFnoNoDbdt };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

struct ModelConfig {
    std::size_t d_model = 64;
    std::size_t n_fno = 2;
    std::size_t modes = 48;
    std::size_t m_res = 2;
    std::vector<std::size_t> kernel_sizes{5, 7};
    std::size_t seq_len = 205;
    Variant variant = Variant::ResFno;
    std::size_t lift_ksize = 3;
    std::size_t enc_hidden = 64;
    std::size_t head_hidden = 64;

    /// 3 for {B, dB/dt, t}; 2 when the derivative channel is dropped.
    std::size_t seq_channels() const { return variant == Variant::ResFnoNoDbdt ? 2 : 3; }
    bool has_res_path() const { return variant != Variant::PureFno; }
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

struct ModelParams {
    layers::Conv1dParams lift;
    layers::MlpParams scalar_enc;
    std::vector<layers::FnoBlockParams> fno_blocks;
    std::vector<layers::ResBlockParams> res_blocks;
    layers::MlpParams head;

    /// Every tensor with its stable name, in a fixed order.
    void visit(const std::function<void(const std::string&, Tensor&)>& fn);
    void visit(const std::function<void(const std::string&, const Tensor&)>& fn) const;
    std::vector<std::pair<std::string, Tensor*>> named();
    std::size_t parameter_count() const;
};

/// Closed-form learnable-scalar count for a configuration (complex weights count twice).
std::size_t expected_parameter_count(const ModelConfig& cfg);

/// Deterministic initialization for a given seed.
ModelParams build(const ModelConfig& cfg, std::uint64_t seed);

/// Checks that `params` has the structure `cfg` describes.
void check_structure(const ModelConfig& cfg, const ModelParams& params);

/// Registers every parameter tensor with the binder under its stable name.
void bind_parameters(layers::Binder& bind, const ModelParams& params);

/// Node ids feeding each path, recorded for topology checks.
struct ForwardTaps {
    int fused = -1;
    int fno_input = -1;
    int res_input = -1;
    int fno_output = -1;
    int res_output = -1;
};

/// seq [B, C_seq, N] (or [C_seq, N]), scalars [B, 3] (or [3]) -> [B, N] (or [N]).
ad::Var forward(layers::Binder& bind, const ModelConfig& cfg, const ModelParams& params, ad::Var seq, ad::Var scalars,
                ForwardTaps* taps = nullptr);

/// Single-sample inference: seq [C_seq, N], scalars [3] -> H sequence [N] in normalized units.
Tensor forward(const ModelConfig& cfg, const ModelParams& params, const Tensor& seq, const Tensor& scalars);

} // namespace resfno::model
