#include "resfno/error.hpp"
#include "resfno/layers.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace resfno;
using namespace resfno::layers;
using testing::uniform_tensor;

namespace {

Tensor shift_time(const Tensor& x, std::size_t s)
{
    const std::size_t n = x.shape().back(), rows = x.size() / n;
    Tensor y(x.shape());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t t = 0; t < n; ++t) y[r * n + (t + s) % n] = x[r * n + t];
    return y;
}

Tensor relu_of(Tensor x)
{
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::max(x[i], 0.0);
    return x;
}

ResBlockParams random_res(std::size_t d, std::size_t k, std::mt19937_64& rng)
{
    ResBlockParams p{Conv1dParams::random(d, d, k, rng), ChannelAffine::unit(d), Conv1dParams::random(d, d, k, rng),
                     ChannelAffine::unit(d)};
    p.norm1.gain = uniform_tensor({d}, rng, 0.5, 1.5);
    p.norm1.shift = uniform_tensor({d}, rng);
    p.norm2.gain = uniform_tensor({d}, rng, 0.5, 1.5);
    p.norm2.shift = uniform_tensor({d}, rng);
    return p;
}

} // namespace

TEST_CASE("conv1d identities and the left-neighbor example")
{
    std::mt19937_64 rng(1);
    const auto x = uniform_tensor({2, 9}, rng);
    CHECK(conv1d_circular(x, Conv1dParams::identity(2, 1)) == x);
    CHECK(conv1d_circular(x, Conv1dParams::identity(2, 3)) == x);

    Conv1dParams p{Tensor({1, 1, 3}, std::vector<double>{1, 0, 0}), Tensor({1})};
    CHECK(conv1d_circular(Tensor({1, 4}, std::vector<double>{1, 2, 3, 4}), p) ==
          Tensor({1, 4}, std::vector<double>{4, 1, 2, 3}));

    CHECK_THROWS_AS(conv1d_circular(x, Conv1dParams::zeros(2, 2, 4)), ShapeError);
    CHECK_THROWS_AS(conv1d_circular(Tensor({2, 3}), Conv1dParams::zeros(2, 2, 5)), ShapeError);
}

TEST_CASE("conv1d is equivariant to circular shifts")
{
    std::mt19937_64 rng(2);
    const auto x = uniform_tensor({3, 20}, rng);
    const auto p = Conv1dParams::random(4, 3, 7, rng);
    for (std::size_t s : {1, 5, 19}) CHECK(max_abs_diff(conv1d_circular(shift_time(x, s), p), shift_time(conv1d_circular(x, p), s)) < 1e-13);
}

TEST_CASE("instance norm examples")
{
    const auto unit = ChannelAffine::unit(1);
    const auto flat = instance_norm(Tensor({1, 5}, 2.5), unit);
    for (double v : flat.values()) CHECK(v == 0.0);

    const auto y = instance_norm(Tensor({1, 2}, std::vector<double>{-1, 1}), unit);
    const double expect = 1.0 / std::sqrt(1.0 + 1e-5);
    CHECK(std::abs(y[0] + expect) < 1e-15);
    CHECK(std::abs(y[1] - expect) < 1e-15);

    std::mt19937_64 rng(4);
    ChannelAffine zero_gain{Tensor({2}), Tensor({2}, std::vector<double>{0.3, -0.7})};
    const auto z = instance_norm(uniform_tensor({2, 6}, rng), zero_gain);
    for (std::size_t t = 0; t < 6; ++t) {
        CHECK(z[t] == 0.3);
        CHECK(z[6 + t] == -0.7);
    }
    CHECK_THROWS_AS(instance_norm(Tensor({1, 1}), unit), ShapeError);
}

TEST_CASE("fno block reductions")
{
    std::mt19937_64 rng(5);
    const std::size_t d = 3, n = 16;
    const auto x = uniform_tensor({d, n}, rng);
    const auto rx = relu_of(x);
    CHECK(max_abs_diff(fno_block(x, {spectral::SpectralWeights::zeros(d, d, 4), Conv1dParams::identity(d, 1)}), rx) < 1e-15);
    CHECK(max_abs_diff(fno_block(x, {spectral::SpectralWeights::identity(d, n / 2 + 1), Conv1dParams::zeros(d, d, 1)}), rx) <
          1e-9);
    const auto dead = fno_block(x, {spectral::SpectralWeights::zeros(d, d, 4), Conv1dParams::zeros(d, d, 1)});
    for (double v : dead.values())
        CHECK(v == 0.0);
    CHECK_THROWS_AS(fno_block(x, {spectral::SpectralWeights::zeros(d, d, 4), Conv1dParams::zeros(d, d, 3)}), ShapeError);
}

TEST_CASE("res block reductions and compositional oracle")
{
    std::mt19937_64 rng(6);
    const std::size_t d = 4, n = 12;
    auto p = random_res(d, 5, rng);
    const auto x = uniform_tensor({d, n}, rng);

    auto zeroed = p;
    zeroed.norm2.gain.fill(0.0);
    zeroed.norm2.shift.fill(0.0);
    zeroed.conv2.kernel.fill(0.0);
    CHECK(res_block(x, zeroed) == relu_of(x));
    const auto pos = uniform_tensor({d, n}, rng, 0.1, 1.0);
    CHECK(res_block(pos, zeroed) == pos);

    // Same computation assembled from the individual blocks.
    auto f = conv1d_circular(x, p.conv1);
    f = relu_of(instance_norm(f, p.norm1));
    f = instance_norm(conv1d_circular(f, p.conv2), p.norm2);
    Tensor sum(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) sum[i] = f[i] + x[i];
    CHECK(max_abs_diff(res_block(x, p), relu_of(sum)) < 1e-12);

    auto wrong = random_res(d, 3, rng);
    wrong.conv2 = Conv1dParams::random(d + 1, d, 3, rng);
    CHECK_THROWS_AS(res_block(x, wrong), ShapeError);
}

TEST_CASE("fuse inputs")
{
    std::mt19937_64 rng(7);
    const std::size_t n = 205, d = 64;
    const auto lift = Conv1dParams::random(d, 3, 3, rng);
    auto enc = MlpParams::random({3, 64, d}, rng);
    const auto seq = uniform_tensor({3, n}, rng);
    const auto sc = uniform_tensor({3}, rng);

    const auto fused = fuse_inputs(seq, sc, lift, enc);
    CHECK(fused.shape() == Shape{d, n});

    auto silent = enc;
    for (auto& l : silent.layers) {
        l.weight.fill(0.0);
        l.bias.fill(0.0);
    }
    CHECK(fuse_inputs(seq, sc, lift, silent) == conv1d_circular(seq, lift));

    auto no_bias = lift;
    no_bias.bias.fill(0.0);
    const auto code = fuse_inputs(Tensor({3, n}), sc, no_bias, enc);
    for (std::size_t c = 0; c < d; ++c)
        for (std::size_t t = 1; t < n; ++t) CHECK(code[c * n + t] == code[c * n]);

    // Superposition in the sequence stream with the scalar stream held fixed.
    const auto seq2 = uniform_tensor({3, n}, rng);
    Tensor mix({3, n});
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 0.3 * seq[i] + 0.7 * seq2[i];
    const auto a = fuse_inputs(seq, sc, lift, enc), b = fuse_inputs(seq2, sc, lift, enc), m = fuse_inputs(mix, sc, lift, enc);
    double worst = 0;
    for (std::size_t i = 0; i < m.size(); ++i) worst = std::max(worst, std::abs(m[i] - (0.3 * a[i] + 0.7 * b[i])));
    CHECK(worst < 1e-10);

    CHECK_THROWS_AS(fuse_inputs(Tensor({2, n}), sc, lift, enc), ShapeError);
    CHECK_THROWS_AS(fuse_inputs(seq, Tensor({4}), lift, enc), ShapeError);
}

TEST_CASE("output head")
{
    std::mt19937_64 rng(8);
    const auto x = uniform_tensor({64, 205}, rng);
    auto head = MlpParams::random({64, 64, 1}, rng);
    CHECK(output_head(x, head).shape() == Shape{205});

    auto zero = head;
    for (auto& l : zero.layers) {
        l.weight.fill(0.0);
        l.bias.fill(0.0);
    }
    const auto y0 = output_head(x, zero);
    for (double v : y0.values()) CHECK(v == 0.0);

    MlpParams pick{{AffineParams::zeros(1, 64)}};
    pick.layers[0].weight[0] = 1.0;
    const auto y = output_head(x, pick);
    for (std::size_t t = 0; t < 205; ++t) CHECK(y[t] == x[t]);

    CHECK_THROWS_AS(output_head(Tensor({32, 10}), head), ShapeError);
    CHECK_THROWS_AS(output_head(x, MlpParams::random({64, 2}, rng)), ShapeError);
}

TEST_CASE("initialization ranges")
{
    std::mt19937_64 rng(9);
    const auto c = Conv1dParams::random(8, 4, 5, rng);
    const double bound = std::sqrt(1.0 / 20.0);
    for (double v : c.kernel.values()) CHECK(std::abs(v) <= bound);
    const auto a = AffineParams::random(6, 9, rng);
    for (double v : a.weight.values()) CHECK(std::abs(v) <= 1.0 / 3.0);
    CHECK_THROWS(MlpParams::random({3}, rng));
}

TEST_CASE("layer gradients pass finite differences")
{
    std::mt19937_64 rng(10);
    const std::size_t d = 3, n = 11;
    const auto x0 = uniform_tensor({2, d, n}, rng);
    auto res = random_res(d, 5, rng);
    auto fno = FnoBlockParams{spectral::SpectralWeights::random(d, d, 4, rng), Conv1dParams::random(d, d, 1, rng)};
    auto head = MlpParams::random({d, 5, 1}, rng);
    auto enc = MlpParams::random({3, 4, d}, rng);
    auto lift = Conv1dParams::random(d, 3, 3, rng);
    const auto sc = uniform_tensor({2, 3}, rng);
    const auto seq = uniform_tensor({2, 3, n}, rng);

    // Parameters are treated as inputs: the loss reassembles the blocks from the Var list.
    auto r = testing::check_gradients(
        [&](ad::Tape& t, std::vector<ad::Var>& v) {
            auto fused = ad::add(ad::conv1d_circular(v[0], v[1], v[2]),
                                 ad::broadcast_over_time(ad::affine(ad::relu(ad::affine(v[3], v[4], v[5])), v[6], v[7]), n));
            Binder bind(t);
            auto y = res_block(bind, fused, res);
            y = fno_block(bind, y, fno);
            return testing::weighted_sum(t, output_head(bind, y, head));
        },
        {seq, lift.kernel, lift.bias, sc, enc.layers[0].weight, enc.layers[0].bias, enc.layers[1].weight, enc.layers[1].bias});
    INFO("max rel err " << r.max_rel);
    CHECK(r.max_rel < 1e-5);

    // And through the block parameters themselves; Binder marks named tensors as parameters.
    ad::Tape tape;
    Binder bind(tape);
    bind.name(res.conv1.kernel, "k1");
    bind.name(res.norm2.gain, "g2");
    bind.name(fno.spectral.weights, "w");
    auto loss = [&](Binder& b, ad::Tape& t) {
        auto y = res_block(b, t.constant(x0), res);
        return testing::weighted_sum(t, output_head(b, fno_block(b, y, fno), head));
    };
    const auto g = ad::backward(tape, loss(bind, tape));
    auto value = [&]() {
        ad::Tape t(ad::Tape::Mode::Inference);
        Binder b(t);
        return loss(b, t).value().item();
    };
    double worst = 0;
    for (auto [name, tensor] : {std::pair{"k1", &res.conv1.kernel}, {"g2", &res.norm2.gain}, {"w", &fno.spectral.weights}}) {
        for (std::size_t i = 0; i < tensor->size(); i += 3) {
            const double keep = (*tensor)[i];
            (*tensor)[i] = keep + 1e-6;
            const double up = value();
            (*tensor)[i] = keep - 1e-6;
            const double down = value();
            (*tensor)[i] = keep;
            worst = std::max(worst, testing::rel_err((up - down) / 2e-6, g.at(name)[i]));
        }
    }
    CHECK(worst < 1e-5);
}
