#include "resfno/autodiff.hpp"

#include "eigen_util.hpp"
#include "resfno/error.hpp"
#include "resfno/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace resfno::ad {

using detail::cmap;
using detail::map;
using detail::RowMat;
using detail::CRowMat;

const Tensor& Var::value() const
{
    if (!tape) throw ValueError("autodiff: unbound variable");
    return tape->value(id);
}

Var Tape::constant(Tensor value)
{
    nodes_.push_back(Node{std::move(value), {}, {}, std::nullopt, {}, false, false});
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::variable(Tensor value)
{
    nodes_.push_back(Node{std::move(value), {}, {}, std::nullopt, {}, recording(), false});
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::parameter(std::string name, Tensor value)
{
    if (!recording()) return constant(std::move(value));
    for (const auto& n : nodes_)
        if (n.is_parameter && n.param_name == name) throw ValueError("autodiff: duplicate parameter '" + name + "'");
    nodes_.push_back(Node{std::move(value), {}, {}, std::nullopt, std::move(name), true, true});
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::push(Tensor value, std::vector<int> inputs, BackwardFn fn)
{
    bool needs = false;
    if (recording())
        for (int i : inputs) needs = needs || nodes_[i].requires_grad;
    Node node{std::move(value), std::move(inputs), needs ? std::move(fn) : BackwardFn{}, std::nullopt, {}, needs, false};
    nodes_.push_back(std::move(node));
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Tensor* Tape::grad_buffer(int id)
{
    auto& n = nodes_[id];
    if (!n.requires_grad) return nullptr;
    if (!n.grad) n.grad = Tensor(n.value.shape());
    return &*n.grad;
}

const Tensor* Tape::grad(int id) const
{
    const auto& n = nodes_.at(id);
    return n.grad ? &*n.grad : nullptr;
}

std::optional<Tensor> Tape::input_grad(Var v) const
{
    if (v.tape != this) throw ValueError("autodiff: variable belongs to another tape");
    if (const Tensor* g = grad(v.id)) return *g;
    return std::nullopt;
}

Gradients backward(Tape& tape, Var loss)
{
    if (loss.tape != &tape || loss.id < 0 || static_cast<std::size_t>(loss.id) >= tape.nodes_.size())
        throw ValueError("backward: loss is not on this tape");
    if (!tape.recording()) throw ValueError("backward: tape was built in inference mode");
    const Tensor& lv = tape.value(loss.id);
    if (lv.size() != 1) throw ShapeError("backward: loss must be a scalar, got shape " + shape_string(lv.shape()));

    for (auto& n : tape.nodes_) n.grad.reset();
    if (Tensor* g = tape.grad_buffer(loss.id)) g->fill(1.0);

    for (int id = loss.id; id >= 0; --id) {
        auto& n = tape.nodes_[id];
        if (n.backward && n.grad) n.backward(tape, id);
    }

    Gradients out;
    for (auto& n : tape.nodes_) {
        if (!n.is_parameter) continue;
        out.emplace(n.param_name, n.grad ? *n.grad : Tensor(n.value.shape()));
    }
    return out;
}

namespace {

void require_same_tape(const char* op, Var a, Var b)
{
    if (a.tape == nullptr || a.tape != b.tape) throw ValueError(std::string(op) + ": operands live on different tapes");
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b)
{
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

void add_into(Tensor& dst, const Tensor& src, double c = 1.0)
{
    double* d = dst.data();
    const double* s = src.data();
    for (std::size_t i = 0; i < dst.size(); ++i) d[i] += c * s[i];
}

// Sequence layout helper: [C, N] counts as one sample.
struct SeqDims {
    std::size_t batch, channels, length;
    bool batched;
};

SeqDims seq_dims(const char* op, const Tensor& x)
{
    if (x.rank() == 2) return {1, x.dim(0), x.dim(1), false};
    if (x.rank() == 3) return {x.dim(0), x.dim(1), x.dim(2), true};
    throw ShapeError(std::string(op) + ": expected [C, N] or [B, C, N], got " + shape_string(x.shape()));
}

Shape seq_shape(const SeqDims& d, std::size_t channels)
{
    return d.batched ? Shape{d.batch, channels, d.length} : Shape{channels, d.length};
}

} // namespace

Var add(Var a, Var b)
{
    require_same_tape("add", a, b);
    const Tensor &x = a.value(), &y = b.value();
    require_same_shape("add", x, y);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
    const int ia = a.id, ib = b.id;
    return a.tape->push(std::move(out), {ia, ib}, [ia, ib](Tape& t, int self) {
        const Tensor& g = *t.grad(self);
        if (Tensor* ga = t.grad_buffer(ia)) add_into(*ga, g);
        if (Tensor* gb = t.grad_buffer(ib)) add_into(*gb, g);
    });
}

Var sub(Var a, Var b)
{
    require_same_tape("sub", a, b);
    const Tensor &x = a.value(), &y = b.value();
    require_same_shape("sub", x, y);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
    const int ia = a.id, ib = b.id;
    return a.tape->push(std::move(out), {ia, ib}, [ia, ib](Tape& t, int self) {
        const Tensor& g = *t.grad(self);
        if (Tensor* ga = t.grad_buffer(ia)) add_into(*ga, g);
        if (Tensor* gb = t.grad_buffer(ib)) add_into(*gb, g, -1.0);
    });
}

Var mul(Var a, Var b)
{
    require_same_tape("mul", a, b);
    const Tensor &x = a.value(), &y = b.value();
    require_same_shape("mul", x, y);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
    const int ia = a.id, ib = b.id;
    return a.tape->push(std::move(out), {ia, ib}, [ia, ib](Tape& t, int self) {
        const Tensor& g = *t.grad(self);
        const Tensor &xa = t.value(ia), &xb = t.value(ib);
        if (Tensor* ga = t.grad_buffer(ia))
            for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * xb[i];
        if (Tensor* gb = t.grad_buffer(ib))
            for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * xa[i];
    });
}

Var scale(Var a, double c)
{
    const Tensor& x = a.value();
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * x[i];
    const int ia = a.id;
    return a.tape->push(std::move(out), {ia}, [ia, c](Tape& t, int self) {
        if (Tensor* ga = t.grad_buffer(ia)) add_into(*ga, *t.grad(self), c);
    });
}

Var matmul(Var a, Var b)
{
    require_same_tape("matmul", a, b);
    const Tensor &x = a.value(), &y = b.value();
    if (x.rank() != 2 || y.rank() != 2 || x.dim(1) != y.dim(0))
        throw ShapeError("matmul: incompatible shapes " + shape_string(x.shape()) + " x " + shape_string(y.shape()));
    const auto m = static_cast<Eigen::Index>(x.dim(0)), k = static_cast<Eigen::Index>(x.dim(1)),
               n = static_cast<Eigen::Index>(y.dim(1));
    Tensor out(Shape{x.dim(0), y.dim(1)});
    map(out.data(), m, n).noalias() = cmap(x.data(), m, k) * cmap(y.data(), k, n);
    const int ia = a.id, ib = b.id;
    return a.tape->push(std::move(out), {ia, ib}, [ia, ib, m, k, n](Tape& t, int self) {
        const auto g = cmap(t.grad(self)->data(), m, n);
        if (Tensor* ga = t.grad_buffer(ia)) map(ga->data(), m, k).noalias() += g * cmap(t.value(ib).data(), k, n).transpose();
        if (Tensor* gb = t.grad_buffer(ib)) map(gb->data(), k, n).noalias() += cmap(t.value(ia).data(), m, k).transpose() * g;
    });
}

Var relu(Var a)
{
    const Tensor& x = a.value();
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
    const int ia = a.id;
    return a.tape->push(std::move(out), {ia}, [ia](Tape& t, int self) {
        Tensor* ga = t.grad_buffer(ia);
        if (!ga) return;
        const Tensor& g = *t.grad(self);
        const Tensor& x = t.value(ia);
        // Subgradient at exactly zero is 0.
        for (std::size_t i = 0; i < g.size(); ++i)
            if (x[i] > 0.0) (*ga)[i] += g[i];
    });
}

Var affine(Var x, Var weight, Var bias)
{
    require_same_tape("affine", x, weight);
    require_same_tape("affine", x, bias);
    const Tensor &xv = x.value(), &w = weight.value(), &b = bias.value();
    if (w.rank() != 2 || b.rank() != 1 || b.dim(0) != w.dim(0))
        throw ShapeError("affine: weight " + shape_string(w.shape()) + " and bias " + shape_string(b.shape()) +
                         " are inconsistent");
    const std::size_t in = w.dim(1), outw = w.dim(0);
    if (xv.rank() < 1 || xv.rank() > 2 || xv.shape().back() != in)
        throw ShapeError("affine: input " + shape_string(xv.shape()) + " does not match weight " + shape_string(w.shape()));
    const std::size_t rows = xv.rank() == 2 ? xv.dim(0) : 1;
    Shape os = xv.rank() == 2 ? Shape{rows, outw} : Shape{outw};
    Tensor out(os);
    const auto R = static_cast<Eigen::Index>(rows), I = static_cast<Eigen::Index>(in), O = static_cast<Eigen::Index>(outw);
    auto om = map(out.data(), R, O);
    om.noalias() = cmap(xv.data(), R, I) * cmap(w.data(), O, I).transpose();
    om.rowwise() += cmap(b.data(), 1, O).row(0);
    const int ix = x.id, iw = weight.id, ib = bias.id;
    return x.tape->push(std::move(out), {ix, iw, ib}, [ix, iw, ib, R, I, O](Tape& t, int self) {
        const auto g = cmap(t.grad(self)->data(), R, O);
        if (Tensor* gx = t.grad_buffer(ix)) map(gx->data(), R, I).noalias() += g * cmap(t.value(iw).data(), O, I);
        if (Tensor* gw = t.grad_buffer(iw)) map(gw->data(), O, I).noalias() += g.transpose() * cmap(t.value(ix).data(), R, I);
        if (Tensor* gb = t.grad_buffer(ib)) map(gb->data(), 1, O) += g.colwise().sum();
    });
}

namespace {

// cols[(ci*K + j), t] = x[ci, (t + j - h) mod N]
void im2col(const double* x, std::size_t cin, std::size_t n, std::size_t k, double* cols)
{
    const std::size_t h = (k - 1) / 2;
    for (std::size_t ci = 0; ci < cin; ++ci) {
        const double* row = x + ci * n;
        for (std::size_t j = 0; j < k; ++j) {
            double* dst = cols + (ci * k + j) * n;
            // (t + j - h) mod n, split into two contiguous runs.
            const std::size_t shift = (j + n - h % n) % n;
            const std::size_t first = n - shift;
            std::copy(row + shift, row + n, dst);
            std::copy(row, row + shift, dst + first);
        }
    }
}

void col2im_add(const double* cols, std::size_t cin, std::size_t n, std::size_t k, double* gx)
{
    const std::size_t h = (k - 1) / 2;
    for (std::size_t ci = 0; ci < cin; ++ci) {
        double* row = gx + ci * n;
        for (std::size_t j = 0; j < k; ++j) {
            const double* src = cols + (ci * k + j) * n;
            const std::size_t shift = (j + n - h % n) % n;
            const std::size_t first = n - shift;
            for (std::size_t t = 0; t < first; ++t) row[shift + t] += src[t];
            for (std::size_t t = 0; t < shift; ++t) row[t] += src[first + t];
        }
    }
}

} // namespace

Var conv1d_circular(Var x, Var kernel, Var bias)
{
    require_same_tape("conv1d_circular", x, kernel);
    require_same_tape("conv1d_circular", x, bias);
    const Tensor &xv = x.value(), &w = kernel.value(), &b = bias.value();
    const SeqDims d = seq_dims("conv1d_circular", xv);
    if (w.rank() != 3 || b.rank() != 1 || b.dim(0) != w.dim(0))
        throw ShapeError("conv1d_circular: kernel " + shape_string(w.shape()) + " and bias " + shape_string(b.shape()) +
                         " are inconsistent");
    const std::size_t cout = w.dim(0), cin = w.dim(1), k = w.dim(2);
    if (cin != d.channels)
        throw ShapeError("conv1d_circular: input " + shape_string(xv.shape()) + " has " + std::to_string(d.channels) +
                         " channels, kernel " + shape_string(w.shape()) + " expects " + std::to_string(cin));
    if (k % 2 == 0) throw ShapeError("conv1d_circular: kernel size " + std::to_string(k) + " must be odd");
    if (k > d.length)
        throw ShapeError("conv1d_circular: kernel size " + std::to_string(k) + " exceeds sequence length " +
                         std::to_string(d.length));

    const std::size_t n = d.length, ck = cin * k;
    Tensor out(seq_shape(d, cout));
    const auto O = static_cast<Eigen::Index>(cout), CK = static_cast<Eigen::Index>(ck), N = static_cast<Eigen::Index>(n);
    const auto wm = cmap(w.data(), O, CK);
    AlignedBuffer cols(k == 1 ? 0 : ck * n);
    for (std::size_t s = 0; s < d.batch; ++s) {
        const double* xs = xv.data() + s * cin * n;
        auto ys = map(out.data() + s * cout * n, O, N);
        if (k == 1) {
            ys.noalias() = wm * cmap(xs, CK, N);
        } else {
            im2col(xs, cin, n, k, cols.data());
            ys.noalias() = wm * cmap(cols.data(), CK, N);
        }
        ys.colwise() += cmap(b.data(), O, 1).col(0);
    }

    const int ix = x.id, iw = kernel.id, ib = bias.id;
    return x.tape->push(std::move(out), {ix, iw, ib}, [ix, iw, ib, d, cin, cout, k, n](Tape& t, int self) {
        const Tensor& g = *t.grad(self);
        const auto O = static_cast<Eigen::Index>(cout), CK = static_cast<Eigen::Index>(cin * k),
                   N = static_cast<Eigen::Index>(n);
        const Tensor &xv = t.value(ix), &w = t.value(iw);
        Tensor* gx = t.grad_buffer(ix);
        Tensor* gw = t.grad_buffer(iw);
        Tensor* gb = t.grad_buffer(ib);
        AlignedBuffer cols(cin * k * n), gcols(gx ? cin * k * n : 0);
        for (std::size_t s = 0; s < d.batch; ++s) {
            const auto gs = cmap(g.data() + s * cout * n, O, N);
            const double* xs = xv.data() + s * cin * n;
            if (gb) map(gb->data(), O, 1) += gs.rowwise().sum();
            if (gw) {
                if (k == 1) {
                    map(gw->data(), O, CK).noalias() += gs * cmap(xs, CK, N).transpose();
                } else {
                    im2col(xs, cin, n, k, cols.data());
                    map(gw->data(), O, CK).noalias() += gs * cmap(cols.data(), CK, N).transpose();
                }
            }
            if (gx) {
                double* gxs = gx->data() + s * cin * n;
                if (k == 1) {
                    map(gxs, CK, N).noalias() += cmap(w.data(), O, CK).transpose() * gs;
                } else {
                    map(gcols.data(), CK, N).noalias() = cmap(w.data(), O, CK).transpose() * gs;
                    col2im_add(gcols.data(), cin, n, k, gxs);
                }
            }
        }
    });
}

Var instance_norm(Var x, Var gain, Var shift, double eps)
{
    require_same_tape("instance_norm", x, gain);
    require_same_tape("instance_norm", x, shift);
    const Tensor &xv = x.value(), &gv = gain.value(), &sv = shift.value();
    const SeqDims d = seq_dims("instance_norm", xv);
    if (d.length < 2) throw ShapeError("instance_norm: need at least 2 time steps, got " + std::to_string(d.length));
    if (gv.shape() != Shape{d.channels} || sv.shape() != Shape{d.channels})
        throw ShapeError("instance_norm: gain " + shape_string(gv.shape()) + " / shift " + shape_string(sv.shape()) +
                         " do not match " + std::to_string(d.channels) + " channels");
    const std::size_t rows = d.batch * d.channels, n = d.length, c = d.channels;
    auto mean = std::make_shared<std::vector<double>>(rows);
    auto inv = std::make_shared<std::vector<double>>(rows);
    Tensor out(xv.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = xv.data() + r * n;
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += row[i];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (row[i] - mu) * (row[i] - mu);
        var /= static_cast<double>(n);
        const double s = 1.0 / std::sqrt(var + eps);
        (*mean)[r] = mu;
        (*inv)[r] = s;
        const double gch = gv[r % c], sch = sv[r % c];
        double* o = out.data() + r * n;
        for (std::size_t i = 0; i < n; ++i) o[i] = gch * (row[i] - mu) * s + sch;
    }
    const int ix = x.id, ig = gain.id, is = shift.id;
    return x.tape->push(std::move(out), {ix, ig, is}, [ix, ig, is, rows, n, c, mean, inv](Tape& t, int self) {
        const Tensor& g = *t.grad(self);
        const Tensor& xv = t.value(ix);
        const Tensor& gv = t.value(ig);
        Tensor* gx = t.grad_buffer(ix);
        Tensor* gg = t.grad_buffer(ig);
        Tensor* gs = t.grad_buffer(is);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* row = xv.data() + r * n;
            const double* gr = g.data() + r * n;
            const double mu = (*mean)[r], s = (*inv)[r];
            double sum_g = 0.0, sum_gx = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double xhat = (row[i] - mu) * s;
                sum_g += gr[i];
                sum_gx += gr[i] * xhat;
            }
            if (gg) (*gg)[r % c] += sum_gx;
            if (gs) (*gs)[r % c] += sum_g;
            if (gx) {
                const double gch = gv[r % c];
                double* out = gx->data() + r * n;
                for (std::size_t i = 0; i < n; ++i) {
                    const double xhat = (row[i] - mu) * s;
                    out[i] += gch * s * (gr[i] - sum_g * inv_n - xhat * sum_gx * inv_n);
                }
            }
        }
    });
}

Var broadcast_over_time(Var v, std::size_t n)
{
    const Tensor& x = v.value();
    if (x.rank() < 1 || x.rank() > 2)
        throw ShapeError("broadcast_over_time: expected [C] or [B, C], got " + shape_string(x.shape()));
    if (n == 0) throw ShapeError("broadcast_over_time: zero-length time axis");
    Shape s = x.shape();
    s.push_back(n);
    Tensor out(s);
    for (std::size_t r = 0; r < x.size(); ++r) std::fill_n(out.data() + r * n, n, x[r]);
    const int iv = v.id;
    return v.tape->push(std::move(out), {iv}, [iv, n](Tape& t, int self) {
        Tensor* gv = t.grad_buffer(iv);
        if (!gv) return;
        const Tensor& g = *t.grad(self);
        for (std::size_t r = 0; r < gv->size(); ++r) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += g[r * n + i];
            (*gv)[r] += acc;
        }
    });
}

Var rfft(Var x, std::size_t keep)
{
    const Tensor& xv = x.value();
    if (xv.rank() < 1) throw ShapeError("rfft: scalar input");
    const std::size_t n = xv.shape().back();
    if (n == 0) throw ShapeError("rfft: empty time axis");
    if (keep == 0 || keep > n / 2 + 1)
        throw ShapeError("rfft: keep=" + std::to_string(keep) + " outside [1, " + std::to_string(n / 2 + 1) + "]");
    const auto basis = spectral::RealDftBasis::cached(n, keep);
    const std::size_t rows = xv.size() / n;
    const auto R = static_cast<Eigen::Index>(rows), N = static_cast<Eigen::Index>(n), K = static_cast<Eigen::Index>(keep);
    RowMat re = cmap(xv.data(), R, N) * cmap(basis->fwd_cos.data(), N, K);
    RowMat im = -(cmap(xv.data(), R, N) * cmap(basis->fwd_sin.data(), N, K));
    Shape s(xv.shape().begin(), xv.shape().end() - 1);
    s.push_back(keep);
    s.push_back(2);
    Tensor out(s);
    for (Eigen::Index r = 0; r < R; ++r)
        for (Eigen::Index m = 0; m < K; ++m) {
            out[2 * (r * K + m)] = re(r, m);
            out[2 * (r * K + m) + 1] = im(r, m);
        }
    const int ix = x.id;
    return x.tape->push(std::move(out), {ix}, [ix, basis, R, N, K](Tape& t, int self) {
        Tensor* gx = t.grad_buffer(ix);
        if (!gx) return;
        const Tensor& g = *t.grad(self);
        RowMat gre(R, K), gim(R, K);
        for (Eigen::Index r = 0; r < R; ++r)
            for (Eigen::Index m = 0; m < K; ++m) {
                gre(r, m) = g[2 * (r * K + m)];
                gim(r, m) = g[2 * (r * K + m) + 1];
            }
        auto gm = map(gx->data(), R, N);
        gm.noalias() += gre * cmap(basis->fwd_cos.data(), N, K).transpose();
        gm.noalias() -= gim * cmap(basis->fwd_sin.data(), N, K).transpose();
    });
}

Var irfft(Var spectrum, std::size_t n)
{
    const Tensor& xv = spectrum.value();
    if (xv.rank() < 2 || xv.shape().back() != 2)
        throw ShapeError("irfft: expected [..., K, 2] spectrum, got " + shape_string(xv.shape()));
    const std::size_t keep = xv.shape()[xv.rank() - 2];
    if (n == 0 || keep == 0 || keep > n / 2 + 1)
        throw ShapeError("irfft: " + std::to_string(keep) + " modes inconsistent with length " + std::to_string(n));
    const auto basis = spectral::RealDftBasis::cached(n, keep);
    const std::size_t rows = xv.size() / (2 * keep);
    const auto R = static_cast<Eigen::Index>(rows), N = static_cast<Eigen::Index>(n), K = static_cast<Eigen::Index>(keep);
    RowMat re(R, K), im(R, K);
    for (Eigen::Index r = 0; r < R; ++r)
        for (Eigen::Index m = 0; m < K; ++m) {
            re(r, m) = xv[2 * (r * K + m)];
            im(r, m) = xv[2 * (r * K + m) + 1];
        }
    Shape s(xv.shape().begin(), xv.shape().end() - 2);
    s.push_back(n);
    Tensor out(s);
    auto om = map(out.data(), R, N);
    om.noalias() = re * cmap(basis->inv_cos.data(), K, N);
    om.noalias() -= im * cmap(basis->inv_sin.data(), K, N);
    const int ix = spectrum.id;
    return spectrum.tape->push(std::move(out), {ix}, [ix, basis, R, N, K](Tape& t, int self) {
        Tensor* gx = t.grad_buffer(ix);
        if (!gx) return;
        const auto g = cmap(t.grad(self)->data(), R, N);
        RowMat gre = g * cmap(basis->inv_cos.data(), K, N).transpose();
        RowMat gim = -(g * cmap(basis->inv_sin.data(), K, N).transpose());
        for (Eigen::Index r = 0; r < R; ++r)
            for (Eigen::Index m = 0; m < K; ++m) {
                (*gx)[2 * (r * K + m)] += gre(r, m);
                (*gx)[2 * (r * K + m) + 1] += gim(r, m);
            }
    });
}

Var complex_mode_multiply(Var spectrum, Var weights)
{
    require_same_tape("complex_mode_multiply", spectrum, weights);
    const Tensor &xv = spectrum.value(), &w = weights.value();
    const bool batched = xv.rank() == 4;
    if ((xv.rank() != 3 && xv.rank() != 4) || xv.shape().back() != 2)
        throw ShapeError("complex_mode_multiply: spectrum must be [C_in, K, 2] or [B, C_in, K, 2], got " +
                         shape_string(xv.shape()));
    if (w.rank() != 4 || w.dim(3) != 2)
        throw ShapeError("complex_mode_multiply: weights must be [C_in, C_out, k, 2], got " + shape_string(w.shape()));
    const std::size_t batch = batched ? xv.dim(0) : 1;
    const std::size_t cin = xv.dim(batched ? 1 : 0), kx = xv.dim(batched ? 2 : 1);
    const std::size_t cout = w.dim(1), kw = w.dim(2);
    if (w.dim(0) != cin)
        throw ShapeError("complex_mode_multiply: spectrum " + shape_string(xv.shape()) + " and weights " +
                         shape_string(w.shape()) + " disagree on C_in");
    if (kw > kx)
        throw ShapeError("complex_mode_multiply: weights carry " + std::to_string(kw) + " modes but spectrum only " +
                         std::to_string(kx));
    Shape os = batched ? Shape{batch, cout, kx, 2} : Shape{cout, kx, 2};
    Tensor out(os);

    const auto B = static_cast<Eigen::Index>(batch), CI = static_cast<Eigen::Index>(cin),
               CO = static_cast<Eigen::Index>(cout);
    auto xat = [kx](std::size_t b, std::size_t c, std::size_t m, std::size_t channels) {
        return 2 * ((b * channels + c) * kx + m);
    };
    auto wat = [cout, kw](std::size_t ci, std::size_t co, std::size_t m) { return 2 * ((ci * cout + co) * kw + m); };

    CRowMat xm(B, CI), wm(CI, CO), om(B, CO);
    for (std::size_t m = 0; m < kw; ++m) {
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t c = 0; c < cin; ++c) {
                const auto i = xat(b, c, m, cin);
                xm(b, c) = {xv[i], xv[i + 1]};
            }
        for (std::size_t ci = 0; ci < cin; ++ci)
            for (std::size_t co = 0; co < cout; ++co) {
                const auto i = wat(ci, co, m);
                wm(ci, co) = {w[i], w[i + 1]};
            }
        om.noalias() = xm * wm;
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t co = 0; co < cout; ++co) {
                const auto i = xat(b, co, m, cout);
                out[i] = om(b, co).real();
                out[i + 1] = om(b, co).imag();
            }
    }

    const int ix = spectrum.id, iw = weights.id;
    return spectrum.tape->push(std::move(out), {ix, iw}, [=](Tape& t, int self) {
        const Tensor& g = *t.grad(self);
        const Tensor &xv = t.value(ix), &w = t.value(iw);
        Tensor* gx = t.grad_buffer(ix);
        Tensor* gw = t.grad_buffer(iw);
        CRowMat xm(B, CI), wm(CI, CO), gm(B, CO);
        for (std::size_t m = 0; m < kw; ++m) {
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t co = 0; co < cout; ++co) {
                    const auto i = xat(b, co, m, cout);
                    gm(b, co) = {g[i], g[i + 1]};
                }
            if (gx) {
                for (std::size_t ci = 0; ci < cin; ++ci)
                    for (std::size_t co = 0; co < cout; ++co) {
                        const auto i = wat(ci, co, m);
                        wm(ci, co) = {w[i], w[i + 1]};
                    }
                const CRowMat gxm = gm * wm.adjoint();
                for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t c = 0; c < cin; ++c) {
                        const auto i = xat(b, c, m, cin);
                        (*gx)[i] += gxm(b, c).real();
                        (*gx)[i + 1] += gxm(b, c).imag();
                    }
            }
            if (gw) {
                for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t c = 0; c < cin; ++c) {
                        const auto i = xat(b, c, m, cin);
                        xm(b, c) = {xv[i], xv[i + 1]};
                    }
                const CRowMat gwm = xm.adjoint() * gm;
                for (std::size_t ci = 0; ci < cin; ++ci)
                    for (std::size_t co = 0; co < cout; ++co) {
                        const auto i = wat(ci, co, m);
                        (*gw)[i] += gwm(ci, co).real();
                        (*gw)[i + 1] += gwm(ci, co).imag();
                    }
            }
        }
    });
}

Var reduce_sum(Var a)
{
    const Tensor& x = a.value();
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    const int ia = a.id;
    return a.tape->push(Tensor::scalar(acc), {ia}, [ia](Tape& t, int self) {
        Tensor* ga = t.grad_buffer(ia);
        if (!ga) return;
        const double g = t.grad(self)->item();
        for (auto& v : ga->values()) v += g;
    });
}

Var reduce_mean(Var a)
{
    const Tensor& x = a.value();
    if (x.size() == 0) throw ShapeError("reduce_mean: empty tensor");
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    const double inv = 1.0 / static_cast<double>(x.size());
    const int ia = a.id;
    return a.tape->push(Tensor::scalar(acc * inv), {ia}, [ia, inv](Tape& t, int self) {
        Tensor* ga = t.grad_buffer(ia);
        if (!ga) return;
        const double g = t.grad(self)->item() * inv;
        for (auto& v : ga->values()) v += g;
    });
}

Var reshape(Var a, Shape shape)
{
    Tensor out = a.value().reshaped(std::move(shape));
    const int ia = a.id;
    return a.tape->push(std::move(out), {ia}, [ia](Tape& t, int self) {
        Tensor* ga = t.grad_buffer(ia);
        if (!ga) return;
        const Tensor& g = *t.grad(self);
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    });
}

} // namespace resfno::ad
