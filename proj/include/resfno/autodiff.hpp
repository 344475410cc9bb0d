#pragma once

// Define-by-run reverse-mode differentiation over dense double tensors.
//
// A Tape is rebuilt for every forward pass. Each primitive appends one node
// holding its value and, when any input needs a gradient, a closure that
// pushes the node's gradient back to its inputs. Nodes are appended in
// evaluation order, so walking the tape backwards is a valid reverse
// topological order and every node is visited exactly once.

#include "resfno/tensor.hpp"

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace resfno::ad {

class Tape;

/// Handle to a node on a tape.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
};

using Gradients = std::map<std::string, Tensor>;

class Tape {
public:
    enum class Mode { Record, Inference };
    using BackwardFn = std::function<void(Tape&, int self)>;

    explicit Tape(Mode mode = Mode::Record) : mode_(mode) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const noexcept { return mode_ == Mode::Record; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Leaf that never receives a gradient (data, targets).
    Var constant(Tensor value);
    /// Leaf that receives a gradient but is not reported by backward().
    Var variable(Tensor value);
    /// Trainable leaf; its gradient is reported under `name`.
    Var parameter(std::string name, Tensor value);

    const Tensor& value(int id) const { return nodes_.at(id).value; }
    bool requires_grad(int id) const { return nodes_[id].requires_grad; }

    /// Appends a computed node. `fn` is dropped unless recording and some input needs a gradient.
    Var push(Tensor value, std::vector<int> inputs, BackwardFn fn);

    /// Gradient accumulator for node `id`, allocated on first use; nullptr when `id` needs none.
    Tensor* grad_buffer(int id);
    /// Gradient of node `id` after backward(), if any reached it.
    const Tensor* grad(int id) const;

    /// Gradient of a non-parameter variable leaf after backward().
    std::optional<Tensor> input_grad(Var v) const;

    friend Gradients backward(Tape& tape, Var loss);

private:
    struct Node {
        Tensor value;
        std::vector<int> inputs;
        BackwardFn backward;
        std::optional<Tensor> grad;
        std::string param_name;
        bool requires_grad = false;
        bool is_parameter = false;
    };

    Mode mode_;
    std::deque<Node> nodes_;  // stable references across push
};

/// d(loss)/d(p) for every parameter leaf on the tape. `loss` must be a scalar on `tape`.
Gradients backward(Tape& tape, Var loss);

// Primitives. Sequence tensors are [C, N] or batched [B, C, N]; time is the last axis.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var matmul(Var a, Var b);
Var relu(Var a);
/// x [R, in] -> x W^T + b, W [out, in], b [out].
Var affine(Var x, Var weight, Var bias);
/// Circular "same" convolution; kernel [C_out, C_in, K] with K odd, bias [C_out].
Var conv1d_circular(Var x, Var kernel, Var bias);
/// Per-(sample, channel) normalization over time followed by per-channel gain and shift.
Var instance_norm(Var x, Var gain, Var shift, double eps = 1e-5);
/// v [C] or [B, C] repeated along a new trailing time axis of length n.
Var broadcast_over_time(Var v, std::size_t n);
/// Real DFT over the last axis keeping the first `keep` modes; output has a trailing (re, im) axis.
Var rfft(Var x, std::size_t keep);
/// Inverse of rfft for length n; modes missing from the input spectrum are zero.
Var irfft(Var spectrum, std::size_t n);
/// X [.., C_in, K, 2] times W [C_in, C_out, k, 2] per mode; modes >= k are zeroed.
Var complex_mode_multiply(Var spectrum, Var weights);
Var reduce_sum(Var a);
Var reduce_mean(Var a);
Var reshape(Var a, Shape shape);

} // namespace resfno::ad
