#include "resfno/run_config.hpp"

#include "resfno/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace resfno::cli {

features::Pipeline RunConfig::pipeline() const
{
    features::Pipeline p;
    p.seq_len = model.seq_len;
    p.resample_len = resample_len;
    p.include_dbdt = model.variant != model::Variant::ResFnoNoDbdt;
    return p;
}

void RunConfig::finalize()
{
    train.seed = seed;
    synth.seed = seed;
    synth.ring_omega = 2.0 * std::numbers::pi * ring_cycles;
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& want)
{
    throw ConfigError("key '" + key + "': expected " + want + ", got '" + value + "'");
}

template <class T>
T parse_int(const std::string& key, const std::string& v)
{
    T out{};
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size()) bad(key, v, "a non-negative integer");
    return out;
}

double parse_real(const std::string& key, const std::string& v)
{
    double out = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out)) bad(key, v, "a number");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    bad(key, v, "a boolean");
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& v)
{
    std::vector<T> out;
    std::stringstream ss(v);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_int<T>(key, trim(item)));
    if (out.empty()) bad(key, v, "a comma-separated list");
    return out;
}

std::string fmt(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

template <class T>
std::string join(const std::vector<T>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

#define KEY_SIZE(name, field, doc)                                                                                   \
    KeyInfo{name, doc, [](RunConfig& r, const std::string& v) { r.field = parse_int<std::size_t>(name, v); },         \
            [](const RunConfig& r) { return std::to_string(r.field); }}
#define KEY_REAL(name, field, doc)                                                                                   \
    KeyInfo{name, doc, [](RunConfig& r, const std::string& v) { r.field = parse_real(name, v); },                    \
            [](const RunConfig& r) { return fmt(r.field); }}
#define KEY_PATH(name, field, doc)                                                                                   \
    KeyInfo{name, doc, [](RunConfig& r, const std::string& v) { r.field = v; },                                     \
            [](const RunConfig& r) { return r.field.string(); }}

std::vector<KeyInfo> make_registry()
{
    return {
        KeyInfo{"seed", "seed for data generation, splits, initialization and batch order",
                [](RunConfig& r, const std::string& v) { r.seed = parse_int<std::uint64_t>("seed", v); },
                [](const RunConfig& r) { return std::to_string(r.seed); }},
        KEY_PATH("out", out, "output directory"),
        KEY_PATH("data", data, "dataset directory (B/H/frequency/temperature CSVs)"),
        KEY_PATH("test_data", test_data, "held-out dataset directory"),
        KEY_PATH("checkpoint", checkpoint, "checkpoint file for eval (default <out>/checkpoint.ckpt)"),
        KeyInfo{"variant", "pure_fno | res_fno | res_fno_no_dbdt",
                [](RunConfig& r, const std::string& v) { r.model.variant = model::parse_variant(v); },
                [](const RunConfig& r) { return model::to_string(r.model.variant); }},
        KEY_SIZE("d_model", model.d_model, "feature channels d"),
        KEY_SIZE("n_fno", model.n_fno, "number of FNO blocks"),
        KEY_SIZE("modes", model.modes, "retained Fourier modes"),
        KEY_SIZE("m_res", model.m_res, "number of residual blocks"),
        KeyInfo{"kernel_sizes", "odd kernel size of each residual block, comma-separated, one per block",
                [](RunConfig& r, const std::string& v) { r.model.kernel_sizes = parse_list<std::size_t>("kernel_sizes", v); },
                [](const RunConfig& r) { return join(r.model.kernel_sizes); }},
        KEY_SIZE("seq_len", model.seq_len, "model sequence length N after downsampling"),
        KEY_SIZE("lift_ksize", model.lift_ksize, "kernel size of the input lifting conv"),
        KEY_SIZE("enc_hidden", model.enc_hidden, "hidden width of the scalar encoder"),
        KEY_SIZE("head_hidden", model.head_hidden, "hidden width of the output head"),
        KEY_SIZE("resample_len", resample_len, "linear resample length before downsampling (0 = off)"),
        KEY_SIZE("max_epochs", train.max_epochs, "epoch budget"),
        KEY_SIZE("batch_size", train.batch_size, "mini-batch size M"),
        KEY_REAL("learning_rate", train.learning_rate, "optimizer step size"),
        KEY_REAL("beta1", train.beta1, "first-moment decay"),
        KEY_REAL("beta2", train.beta2, "second-moment decay"),
        KEY_REAL("epsilon", train.epsilon, "optimizer denominator offset"),
        KEY_SIZE("patience", train.patience, "early-stopping patience in epochs"),
        KEY_REAL("min_delta", train.min_delta, "absolute validation improvement that resets patience"),
        KEY_REAL("time_limit", train.time_limit_seconds, "wall-clock training cap in seconds (0 = none)"),
        KEY_SIZE("eval_chunk", train.eval_chunk, "samples per validation forward pass"),
        KEY_REAL("train_fraction", train_fraction, "share of the training data used for fitting; rest validates"),
        KEY_REAL("test_fraction", test_fraction, "ablate: held-out share when test_data is empty"),
        KEY_SIZE("n_samples", synth.n_samples, "synth: number of waveforms"),
        KEY_SIZE("synth_seq_len", synth.seq_len, "synth: samples per period"),
        KEY_REAL("w_sine", synth.w_sine, "synth: sine waveform weight"),
        KEY_REAL("w_triangle", synth.w_triangle, "synth: triangle waveform weight"),
        KEY_REAL("w_trapezoid", synth.w_trapezoid, "synth: trapezoid waveform weight"),
        KEY_REAL("amp_min", synth.amp_min, "synth: smallest peak B (T)"),
        KEY_REAL("amp_max", synth.amp_max, "synth: largest peak B (T)"),
        KEY_REAL("freq_min", synth.freq_min, "synth: lowest frequency (Hz)"),
        KEY_REAL("freq_max", synth.freq_max, "synth: highest frequency (Hz)"),
        KEY_REAL("temp_min", synth.temp_min, "synth: lowest temperature (C)"),
        KEY_REAL("temp_max", synth.temp_max, "synth: highest temperature (C)"),
        KEY_SIZE("hysterons", synth.hysterons, "synth: relay count"),
        KEY_REAL("theta_min", synth.theta_min, "synth: smallest relay threshold (T)"),
        KEY_REAL("theta_max", synth.theta_max, "synth: largest relay threshold (T)"),
        KEY_REAL("hysteron_weight", synth.hysteron_weight, "synth: H contribution per relay (A/m)"),
        KEY_REAL("eddy_coeff", synth.eddy_coeff, "synth: H per unit dB/dt"),
        KEY_REAL("ring_amp", synth.ring_amp, "synth: ringing amplitude (A/m, or fraction of peak B for ring_target=b)"),
        KEY_REAL("ring_decay", synth.ring_decay, "synth: ringing decay rate per period"),
        KEY_REAL("ring_cycles", ring_cycles, "synth: ringing frequency in cycles per period"),
        KEY_REAL("ring_trigger", synth.ring_trigger, "synth: slope jump, relative to peak slope, that triggers ringing"),
        KeyInfo{"ring_target", "synth: h | b, the signal that rings",
                [](RunConfig& r, const std::string& v) {
                    if (v == "h") r.synth.ring_target = data::RingTarget::H;
                    else if (v == "b") r.synth.ring_target = data::RingTarget::B;
                    else bad("ring_target", v, "h or b");
                },
                [](const RunConfig& r) { return std::string(r.synth.ring_target == data::RingTarget::H ? "h" : "b"); }},
        KEY_SIZE("bins", bins, "NRMSE histogram bins"),
        KeyInfo{"write_predictions", "eval: also write predicted H per sample",
                [](RunConfig& r, const std::string& v) { r.write_predictions = parse_bool("write_predictions", v); },
                [](const RunConfig& r) { return std::string(r.write_predictions ? "true" : "false"); }},
        KeyInfo{"ablate_seeds", "ablate: comma-separated seeds, one training run per variant and seed",
                [](RunConfig& r, const std::string& v) { r.ablate_seeds = parse_list<std::uint64_t>("ablate_seeds", v); },
                [](const RunConfig& r) { return join(r.ablate_seeds); }},
        KEY_SIZE("log_every", log_every, "print training progress every this many epochs (0 = quiet)"),
    };
}

} // namespace

const std::vector<KeyInfo>& key_registry()
{
    static const std::vector<KeyInfo> reg = make_registry();
    return reg;
}

const KeyInfo* find_key(const std::string& key)
{
    for (const auto& k : key_registry())
        if (k.key == key) return &k;
    return nullptr;
}

void apply_setting(RunConfig& rc, const std::string& key, const std::string& value)
{
    const auto* k = find_key(key);
    if (!k) throw ConfigError("unknown config key '" + key + "'");
    k->set(rc, trim(value));
    rc.explicitly_set.insert(key);
}

void apply_config_file(RunConfig& rc, const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(no) + ": expected key = value");
        try {
            apply_setting(rc, trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(no) + ": " + e.what());
        } catch (const Error& e) {
            throw ConfigError(path.string() + ":" + std::to_string(no) + ": " + e.what());
        }
    }
}

std::string describe_keys()
{
    const RunConfig defaults;
    std::ostringstream s;
    for (const auto& k : key_registry()) s << "# " << k.doc << '\n' << k.key << " = " << k.get(defaults) << "\n\n";
    return s.str();
}

} // namespace resfno::cli
