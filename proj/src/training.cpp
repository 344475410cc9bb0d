#include "resfno/training.hpp"

#include "resfno/error.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace resfno::training {

void TrainConfig::validate() const
{
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (!(min_delta >= 0)) throw ConfigError("min_delta must be >= 0");
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("betas must lie in [0, 1)");
    if (!(epsilon > 0)) throw ConfigError("epsilon must be positive");
    if (!(time_limit_seconds >= 0)) throw ConfigError("time_limit_seconds must be >= 0");
    if (eval_chunk < 1) throw ConfigError("eval_chunk must be >= 1");
}

namespace {

#if defined(__GLIBC__)
// Tape buffers are large and short-lived; keep them on the heap instead of
// round-tripping every one through mmap/munmap.
[[maybe_unused]] const bool allocator_tuned = [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
    return true;
}();
#endif


std::size_t batch_rows(const Shape& s) { return s.size() >= 2 ? s[0] : 1; }

} // namespace

double mse_loss(const Tensor& pred, const Tensor& target)
{
    if (pred.shape() != target.shape())
        throw ShapeError("mse_loss: prediction " + shape_string(pred.shape()) + " vs target " + shape_string(target.shape()));
    if (pred.rank() < 1 || pred.rank() > 2) throw ShapeError("mse_loss: expected [M, N] or [N]");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        acc += d * d;
    }
    return acc / static_cast<double>(batch_rows(pred.shape()));
}

ad::Var mse_loss(ad::Var pred, ad::Var target)
{
    if (pred.shape() != target.shape())
        throw ShapeError("mse_loss: prediction " + shape_string(pred.shape()) + " vs target " + shape_string(target.shape()));
    if (pred.shape().size() < 1 || pred.shape().size() > 2) throw ShapeError("mse_loss: expected [M, N] or [N]");
    const auto d = ad::sub(pred, target);
    return ad::scale(ad::reduce_sum(ad::mul(d, d)), 1.0 / static_cast<double>(batch_rows(pred.shape())));
}

void adam_step(const NamedParams& params, const ad::Gradients& grads, AdamState& state, const TrainConfig& cfg)
{
    for (const auto& [name, p] : params) {
        const auto it = grads.find(name);
        if (it == grads.end()) throw ValueError("adam_step: no gradient for parameter '" + name + "'");
        if (it->second.shape() != p->shape())
            throw ShapeError("adam_step: gradient for '" + name + "' has shape " + shape_string(it->second.shape()));
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (const auto& [name, p] : params) {
        const Tensor& g = grads.at(name);
        auto [mi, fresh_m] = state.m.try_emplace(name, p->shape());
        auto [vi, fresh_v] = state.v.try_emplace(name, p->shape());
        Tensor& m = mi->second;
        Tensor& v = vi->second;
        for (std::size_t i = 0; i < p->size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mh = m[i] / c1;
            const double vh = v[i] / c2;
            (*p)[i] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.epsilon);
        }
    }
}

StopDecision early_stop_update(TrainState& state, double val_loss, const TrainConfig& cfg)
{
    if (std::isnan(val_loss)) throw ValueError("validation loss is NaN at epoch " + std::to_string(state.epoch + 1));
    ++state.epoch;
    if (state.best_val - val_loss > cfg.min_delta || state.best_epoch == 0) {
        state.best_val = val_loss;
        state.best_params = state.params;
        state.best_epoch = state.epoch;
        state.since_improvement = 0;
        return StopDecision::Continue;
    }
    if (++state.since_improvement >= cfg.patience) {
        state.params = state.best_params;
        return StopDecision::Stop;
    }
    return StopDecision::Continue;
}

Batch make_batch(std::span<const features::FeatureBundle> set, std::span<const std::size_t> idx)
{
    if (idx.empty()) throw ValueError("make_batch: empty batch");
    const auto& first = set[idx[0]];
    const std::size_t c = first.seq.dim(0), n = first.seq.dim(1), b = idx.size();
    Batch out{Tensor({b, c, n}), Tensor({b, 3}), Tensor({b, n})};
    for (std::size_t r = 0; r < b; ++r) {
        const auto& s = set[idx[r]];
        if (s.seq.shape() != first.seq.shape())
            throw ShapeError("make_batch: sequence shape " + shape_string(s.seq.shape()) + " differs from " +
                             shape_string(first.seq.shape()));
        if (!s.has_target() || s.target.size() != n) throw DataError("make_batch: sample without a matching H target");
        std::copy(s.seq.values().begin(), s.seq.values().end(), out.seq.data() + r * c * n);
        std::copy(s.scalars.values().begin(), s.scalars.values().end(), out.scalars.data() + r * 3);
        std::copy(s.target.values().begin(), s.target.values().end(), out.target.data() + r * n);
    }
    return out;
}

namespace {

Tensor predict_batch(const model::ModelConfig& cfg, const model::ModelParams& params, const Batch& batch)
{
    ad::Tape tape(ad::Tape::Mode::Inference);
    layers::Binder bind(tape);
    const auto out = model::forward(bind, cfg, params, tape.constant(batch.seq), tape.constant(batch.scalars));
    return out.value();
}

} // namespace

double evaluate_loss(const model::ModelConfig& cfg, const model::ModelParams& params,
                     std::span<const features::FeatureBundle> set, std::size_t chunk)
{
    if (set.empty()) throw ValueError("evaluate_loss: empty set");
    if (chunk == 0) chunk = set.size();
    double acc = 0.0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < set.size(); start += chunk) {
        idx.resize(std::min(chunk, set.size() - start));
        std::iota(idx.begin(), idx.end(), start);
        const auto batch = make_batch(set, idx);
        const auto pred = predict_batch(cfg, params, batch);
        // Chunk loss times chunk size gives the chunk's plain sum of squares.
        acc += mse_loss(pred, batch.target) * static_cast<double>(idx.size());
    }
    return acc / static_cast<double>(set.size());
}

TrainResult train(const model::ModelConfig& model_cfg, model::ModelParams params,
                  std::span<const features::FeatureBundle> train_set, std::span<const features::FeatureBundle> val_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch)
{
    cfg.validate();
    model_cfg.validate();
    model::check_structure(model_cfg, params);
    if (train_set.empty() || val_set.empty()) throw DataError("train: training and validation sets must be nonempty");
    const std::size_t n = train_set[0].seq.dim(1);
    for (auto set : {train_set, val_set})
        for (const auto& s : set)
            if (s.seq.rank() != 2 || s.seq.dim(1) != n || s.seq.dim(0) != model_cfg.seq_channels())
                throw ShapeError("train: sample sequence " + shape_string(s.seq.shape()) + " does not match the model");

    TrainState state;
    state.params = std::move(params);
    TrainResult result;
    // One RNG stream for the whole run keeps the data order a pure function of the seed.
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(train_set.size());
    const auto t0 = std::chrono::steady_clock::now();

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

        double train_acc = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - start);
            const auto batch = make_batch(train_set, std::span<const std::size_t>(order).subspan(start, len));
            ad::Tape tape;
            layers::Binder bind(tape);
            model::bind_parameters(bind, state.params);
            const auto pred = model::forward(bind, model_cfg, state.params, tape.constant(batch.seq),
                                             tape.constant(batch.scalars));
            const auto loss = mse_loss(pred, tape.constant(batch.target));
            const double lv = loss.value().item();
            if (!std::isfinite(lv)) throw ValueError("training loss is not finite at epoch " + std::to_string(epoch + 1));
            train_acc += lv * static_cast<double>(len);
            const auto grads = ad::backward(tape, loss);
            adam_step(state.params.named(), grads, state.adam, cfg);
        }

        const double val = evaluate_loss(model_cfg, state.params, val_set, cfg.eval_chunk);
        const EpochRecord rec{epoch + 1, train_acc / static_cast<double>(train_set.size()), val};
        result.history.push_back(rec);
        const auto decision = early_stop_update(state, val, cfg);
        if (on_epoch) on_epoch(rec);
        if (decision == StopDecision::Stop) {
            result.stopped_early = true;
            break;
        }
        if (cfg.time_limit_seconds > 0) {
            const std::chrono::duration<double> el = std::chrono::steady_clock::now() - t0;
            if (el.count() >= cfg.time_limit_seconds) {
                result.hit_time_limit = true;
                break;
            }
        }
    }

    result.best_epoch = state.best_epoch;
    result.best_val = state.best_val;
    result.params = state.best_epoch > 0 ? std::move(state.best_params) : std::move(state.params);
    return result;
}

namespace {

std::string fmt(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

} // namespace

void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "epoch,train_loss,val_loss\n";
    for (const auto& r : history) out << r.epoch << ',' << fmt(r.train_loss) << ',' << fmt(r.val_loss) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace resfno::training
