#include "vesselsynth/neural.hpp"

#include "vesselsynth/kernels.hpp"
#include "vesselsynth/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <unordered_map>

namespace vsynth {

namespace {
using ordered_json = nlohmann::ordered_json;
}

ParameterStore::ParameterStore(const std::vector<LayerSpec>& specs) {
    names_.reserve(specs.size());
    layers_.reserve(specs.size());
    adam_.reserve(specs.size());
    for (const LayerSpec& s : specs) {
        if (s.in_dim <= 0 || s.out_dim <= 0) {
            throw ValidationError("layer " + s.name + ": dimensions must be positive");
        }
        names_.push_back(s.name);
        layers_.emplace_back(s.in_dim, s.out_dim);
        AdamSlots slots;
        slots.mw.assign(layers_.back().w.size(), 0.0);
        slots.vw.assign(layers_.back().w.size(), 0.0);
        slots.mb.assign(layers_.back().b.size(), 0.0);
        slots.vb.assign(layers_.back().b.size(), 0.0);
        adam_.push_back(std::move(slots));
    }
}

int ParameterStore::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return static_cast<int>(i);
    }
    throw ValidationError("unknown layer '" + std::string(name) + "'");
}

void ParameterStore::zero_gradients() {
    for (DenseLayer& l : layers_) {
        std::fill(l.gw.begin(), l.gw.end(), 0.0);
        std::fill(l.gb.begin(), l.gb.end(), 0.0);
    }
}

void ParameterStore::scale_gradients(double s) {
    for (DenseLayer& l : layers_) {
        kernels::scale(l.gw.data(), s, l.gw.size());
        kernels::scale(l.gb.data(), s, l.gb.size());
    }
}

std::vector<LayerSpec> ParameterStore::architecture() const {
    std::vector<LayerSpec> out;
    out.reserve(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        out.push_back({names_[i], layers_[i].in_dim, layers_[i].out_dim});
    }
    return out;
}

bool ParameterStore::matches(const std::vector<LayerSpec>& specs) const {
    if (specs.size() != layers_.size()) return false;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (specs[i].name != names_[i] || specs[i].in_dim != layers_[i].in_dim ||
            specs[i].out_dim != layers_[i].out_dim) {
            return false;
        }
    }
    return true;
}

void dense_forward(const DenseLayer& layer, std::span<const double> input,
                   Activation act, DenseCache& cache, std::vector<double>& out) {
    if (static_cast<int>(input.size()) != layer.in_dim) {
        throw ValidationError("dense_forward: input length " +
                              std::to_string(input.size()) + " != in_dim " +
                              std::to_string(layer.in_dim));
    }
    cache.input.assign(input.begin(), input.end());
    cache.pre.resize(static_cast<std::size_t>(layer.out_dim));
    kernels::matvec_bias(layer.w.data(), cache.input.data(), layer.b.data(),
                         cache.pre.data(), static_cast<std::size_t>(layer.out_dim),
                         static_cast<std::size_t>(layer.in_dim));
    out.resize(static_cast<std::size_t>(layer.out_dim));
    if (act == Activation::leaky_relu) {
        kernels::leaky_relu(cache.pre.data(), out.data(), cache.pre.size(), kLeakySlope);
    } else {
        out = cache.pre;
    }
}

void dense_backward(DenseLayer& layer, const DenseCache& cache, Activation act,
                    std::span<const double> upstream, std::vector<double>& downstream) {
    if (cache.input.empty() && layer.in_dim > 0) {
        throw ValidationError("dense_backward: missing forward cache");
    }
    if (static_cast<int>(upstream.size()) != layer.out_dim ||
        static_cast<int>(cache.input.size()) != layer.in_dim) {
        throw ValidationError("dense_backward: shape mismatch");
    }
    const std::size_t rows = static_cast<std::size_t>(layer.out_dim);
    const std::size_t cols = static_cast<std::size_t>(layer.in_dim);

    static thread_local std::vector<double> delta;
    delta.resize(rows);
    if (act == Activation::leaky_relu) {
        kernels::leaky_relu_grad(cache.pre.data(), upstream.data(), delta.data(),
                                 rows, kLeakySlope);
    } else {
        delta.assign(upstream.begin(), upstream.end());
    }

    kernels::ger_accum(layer.gw.data(), delta.data(), cache.input.data(), rows, cols);
    kernels::axpy(1.0, delta.data(), layer.gb.data(), rows);

    downstream.assign(cols, 0.0);
    kernels::matvec_t_accum(layer.w.data(), delta.data(), downstream.data(), rows, cols);
}

void adam_step(ParameterStore& store, const AdamHyper& hyper) {
    for (const DenseLayer& l : store.layers_) {
        for (double g : l.gw) {
            if (!std::isfinite(g)) throw RuntimeError("non-finite gradient (divergence)");
        }
        for (double g : l.gb) {
            if (!std::isfinite(g)) throw RuntimeError("non-finite gradient (divergence)");
        }
    }
    store.step_ += 1;
    const auto t = static_cast<double>(store.step_);
    const double bc1 = 1.0 / (1.0 - std::pow(hyper.beta1, t));
    const double bc2 = 1.0 / (1.0 - std::pow(hyper.beta2, t));
    for (std::size_t i = 0; i < store.layers_.size(); ++i) {
        DenseLayer& l = store.layers_[i];
        AdamSlots& a = store.adam_[i];
        kernels::adam_update(l.w.data(), a.mw.data(), a.vw.data(), l.gw.data(),
                             l.w.size(), hyper.lr, hyper.beta1, hyper.beta2,
                             hyper.epsilon, bc1, bc2);
        kernels::adam_update(l.b.data(), a.mb.data(), a.vb.data(), l.gb.data(),
                             l.b.size(), hyper.lr, hyper.beta1, hyper.beta2,
                             hyper.epsilon, bc1, bc2);
        std::fill(l.gw.begin(), l.gw.end(), 0.0);
        std::fill(l.gb.begin(), l.gb.end(), 0.0);
    }
}

ParameterStore init_parameters(const std::vector<LayerSpec>& specs, std::uint64_t seed) {
    ParameterStore store(specs);
    Rng rng(seed);
    for (int i = 0; i < store.layer_count(); ++i) {
        DenseLayer& l = store.layer(i);
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.in_dim));
        for (double& w : l.w) w = rng.uniform(-bound, bound);
        // biases stay zero
    }
    return store;
}

double grad_check(ParameterStore& store,
                  const std::function<double(const ParameterStore&)>& loss_fn,
                  const std::function<void(ParameterStore&)>& grad_fn,
                  int probes, std::uint64_t seed, double fd_epsilon) {
    store.zero_gradients();
    grad_fn(store);

    Rng rng(seed);
    double max_rel = 0.0;
    for (int p = 0; p < probes; ++p) {
        const int li = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(store.layer_count())));
        DenseLayer& layer = store.layer(li);
        const bool probe_bias = rng.uniform() < 0.1;
        double* param;
        double analytic;
        if (probe_bias) {
            const std::size_t k = rng.uniform_index(layer.b.size());
            param = &layer.b[k];
            analytic = layer.gb[k];
        } else {
            const std::size_t k = rng.uniform_index(layer.w.size());
            param = &layer.w[k];
            analytic = layer.gw[k];
        }
        const double original = *param;
        *param = original + fd_epsilon;
        const double up = loss_fn(store);
        *param = original - fd_epsilon;
        const double down = loss_fn(store);
        *param = original;
        const double numeric = (up - down) / (2.0 * fd_epsilon);
        const double rel = std::abs(analytic - numeric) /
                           std::max(1e-8, std::abs(numeric));
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     const NormStats& stats) {
    ordered_json doc;
    doc["format"] = "vesselsynth-checkpoint-v1";
    doc["step"] = store.step();
    doc["norm_stats"]["min"] = stats.min;
    doc["norm_stats"]["max"] = stats.max;
    ordered_json layers = ordered_json::array();
    for (int i = 0; i < store.layer_count(); ++i) {
        const DenseLayer& l = store.layer(i);
        const AdamSlots& a = store.adam(i);
        ordered_json jl;
        jl["name"] = store.name(i);
        jl["in"] = l.in_dim;
        jl["out"] = l.out_dim;
        jl["w"] = l.w;
        jl["b"] = l.b;
        jl["adam_mw"] = a.mw;
        jl["adam_vw"] = a.vw;
        jl["adam_mb"] = a.mb;
        jl["adam_vb"] = a.vb;
        layers.push_back(std::move(jl));
    }
    doc["layers"] = std::move(layers);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write checkpoint: " + path.string());
    out << doc.dump() << "\n";
    if (!out) throw RuntimeError("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::vector<LayerSpec>& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint: " + path.string());
    ordered_json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed checkpoint: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != "vesselsynth-checkpoint-v1") {
            throw ValidationError("unknown checkpoint format");
        }
        Checkpoint cp{ParameterStore(expected), NormStats{}};
        cp.norm_stats.min = doc.at("norm_stats").at("min").get<std::array<double, 4>>();
        cp.norm_stats.max = doc.at("norm_stats").at("max").get<std::array<double, 4>>();
        cp.store.set_step(doc.at("step").get<std::int64_t>());
        const auto& layers = doc.at("layers");
        if (layers.size() != expected.size()) {
            throw ValidationError("checkpoint architecture mismatch: layer count");
        }
        for (std::size_t i = 0; i < expected.size(); ++i) {
            const auto& jl = layers[i];
            const std::string name = jl.at("name").get<std::string>();
            const int in_dim = jl.at("in").get<int>();
            const int out_dim = jl.at("out").get<int>();
            if (name != expected[i].name || in_dim != expected[i].in_dim ||
                out_dim != expected[i].out_dim) {
                throw ValidationError("checkpoint architecture mismatch at layer '" +
                                      name + "'");
            }
            DenseLayer& l = cp.store.layer(static_cast<int>(i));
            AdamSlots& a = cp.store.adam(static_cast<int>(i));
            jl.at("w").get_to(l.w);
            jl.at("b").get_to(l.b);
            jl.at("adam_mw").get_to(a.mw);
            jl.at("adam_vw").get_to(a.vw);
            jl.at("adam_mb").get_to(a.mb);
            jl.at("adam_vb").get_to(a.vb);
            const std::size_t wn = static_cast<std::size_t>(in_dim) * static_cast<std::size_t>(out_dim);
            const std::size_t bn = static_cast<std::size_t>(out_dim);
            if (l.w.size() != wn || l.b.size() != bn || a.mw.size() != wn ||
                a.vw.size() != wn || a.mb.size() != bn || a.vb.size() != bn) {
                throw ValidationError("checkpoint tensor size mismatch at layer '" +
                                      name + "'");
            }
        }
        return cp;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed checkpoint: ") + e.what());
    }
}

} // namespace vsynth
