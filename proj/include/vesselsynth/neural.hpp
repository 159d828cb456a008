#pragma once

#include "vesselsynth/common.hpp"
#include "vesselsynth/corpus.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vsynth {

inline constexpr double kLeakySlope = 0.01;

enum class Activation { identity, leaky_relu };

struct DenseLayer {
    int in_dim = 0;
    int out_dim = 0;
    std::vector<double> w;  ///< row-major (out_dim x in_dim)
    std::vector<double> b;
    std::vector<double> gw; ///< gradient accumulators, same shapes
    std::vector<double> gb;

    DenseLayer() = default;
    DenseLayer(int in, int out)
        : in_dim(in), out_dim(out),
          w(static_cast<std::size_t>(in) * static_cast<std::size_t>(out), 0.0),
          b(static_cast<std::size_t>(out), 0.0),
          gw(static_cast<std::size_t>(in) * static_cast<std::size_t>(out), 0.0),
          gb(static_cast<std::size_t>(out), 0.0) {}
};

struct AdamSlots {
    std::vector<double> mw, vw, mb, vb;
};

struct AdamHyper {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct LayerSpec {
    std::string name;
    int in_dim = 0;
    int out_dim = 0;
};

/// Named dense layers with paired gradient and Adam state, plus the shared
/// step counter. Layer order is the spec order; lookups by name resolve to
/// stable indices for hot paths.
class ParameterStore {
public:
    ParameterStore() = default;
    explicit ParameterStore(const std::vector<LayerSpec>& specs);

    int layer_count() const { return static_cast<int>(layers_.size()); }
    int index_of(std::string_view name) const; ///< throws if unknown
    const std::string& name(int index) const { return names_[static_cast<std::size_t>(index)]; }

    DenseLayer& layer(int index) { return layers_[static_cast<std::size_t>(index)]; }
    const DenseLayer& layer(int index) const { return layers_[static_cast<std::size_t>(index)]; }
    DenseLayer& layer(std::string_view name) { return layer(index_of(name)); }
    const DenseLayer& layer(std::string_view name) const { return layer(index_of(name)); }
    AdamSlots& adam(int index) { return adam_[static_cast<std::size_t>(index)]; }
    const AdamSlots& adam(int index) const { return adam_[static_cast<std::size_t>(index)]; }

    std::int64_t step() const { return step_; }
    void set_step(std::int64_t s) { step_ = s; }

    void zero_gradients();
    void scale_gradients(double s);

    std::vector<LayerSpec> architecture() const;
    bool matches(const std::vector<LayerSpec>& specs) const;

    friend void adam_step(ParameterStore& store, const AdamHyper& hyper);

private:
    std::vector<std::string> names_;
    std::vector<DenseLayer> layers_;
    std::vector<AdamSlots> adam_;
    std::int64_t step_ = 0;
};

/// Activation record for one dense forward call; backward consumes it.
struct DenseCache {
    std::vector<double> input;
    std::vector<double> pre; ///< W x + b, before activation
};

/// out = act(W input + b); fills cache for the matching backward call.
void dense_forward(const DenseLayer& layer, std::span<const double> input,
                   Activation act, DenseCache& cache, std::vector<double>& out);

/// Accumulates gw += outer(delta, input), gb += delta with
/// delta = upstream ⊙ act'(pre); writes W^T delta into downstream.
void dense_backward(DenseLayer& layer, const DenseCache& cache, Activation act,
                    std::span<const double> upstream, std::vector<double>& downstream);

/// Standard Adam with bias correction on every layer; zeroes gradients and
/// bumps the shared step counter. Throws RuntimeError on non-finite
/// gradients (divergence).
void adam_step(ParameterStore& store, const AdamHyper& hyper);

/// Weights uniform in (-1/sqrt(in_dim), +1/sqrt(in_dim)), biases zero.
ParameterStore init_parameters(const std::vector<LayerSpec>& specs, std::uint64_t seed);

/// Central-difference probe of randomly chosen parameters.
/// loss_fn must be a deterministic pure forward; grad_fn refreshes the
/// store's gradient slots for the same loss. Returns the max relative error
/// |analytic - numeric| / max(1e-8, |numeric|) over the probes.
double grad_check(ParameterStore& store,
                  const std::function<double(const ParameterStore&)>& loss_fn,
                  const std::function<void(ParameterStore&)>& grad_fn,
                  int probes, std::uint64_t seed, double fd_epsilon = 1e-5);

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     const NormStats& stats);

struct Checkpoint {
    ParameterStore store;
    NormStats norm_stats;
};

/// Loads and validates the layer list against the expected architecture.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::vector<LayerSpec>& expected);

} // namespace vsynth
