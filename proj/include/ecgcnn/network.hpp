#pragma once

// Declarative network profiles and the forward/backward engine over them.
// A profile is an ordered layer list; shape inference walks it once and
// fails fast, naming the offending layer. The canonical profiles follow
// the AlexNet layout: five conv blocks with max-pooling after conv1,
// conv2 and conv5, then three fully-connected layers with dropout.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ecgcnn/activations.hpp"
#include "ecgcnn/errors.hpp"
#include "ecgcnn/layers.hpp"
#include "ecgcnn/rng.hpp"
#include "ecgcnn/tensor.hpp"

namespace ecgcnn {

enum class LayerKind { conv, pool, act, dropout, flatten, fc };

struct LayerSpec {
    LayerKind kind = LayerKind::act;
    std::string name;
    std::size_t out_channels = 0; // conv
    Extent kernel{1, 1};          // conv, pool
    Extent stride{1, 1};          // conv, pool
    Extent pad{0, 0};             // conv
    std::size_t width = 0;        // fc
    double rate = 0.0;            // dropout
};

struct ArchitectureProfile {
    std::string name;
    int dims = 1;                         // 1 or 2
    std::vector<std::size_t> input_shape; // (C, L) or (C, H, W)
    ActivationKind activation;
    std::vector<LayerSpec> layers;
    int n_classes = 2;
};

// --------------------------------------------------------------------------
// canonical and tiny profiles
// --------------------------------------------------------------------------

namespace detail {

inline LayerSpec conv_spec(std::string name, std::size_t oc, Extent k, Extent s, Extent p) {
    LayerSpec l;
    l.kind = LayerKind::conv;
    l.name = std::move(name);
    l.out_channels = oc;
    l.kernel = k;
    l.stride = s;
    l.pad = p;
    return l;
}

inline LayerSpec pool_spec(std::string name, Extent k, Extent s) {
    LayerSpec l;
    l.kind = LayerKind::pool;
    l.name = std::move(name);
    l.kernel = k;
    l.stride = s;
    return l;
}

inline LayerSpec act_spec(std::string name) {
    LayerSpec l;
    l.kind = LayerKind::act;
    l.name = std::move(name);
    return l;
}

inline LayerSpec dropout_spec(std::string name, double rate) {
    LayerSpec l;
    l.kind = LayerKind::dropout;
    l.name = std::move(name);
    l.rate = rate;
    return l;
}

inline LayerSpec flatten_spec() {
    LayerSpec l;
    l.kind = LayerKind::flatten;
    l.name = "flatten";
    return l;
}

inline LayerSpec fc_spec(std::string name, std::size_t width) {
    LayerSpec l;
    l.kind = LayerKind::fc;
    l.name = std::move(name);
    l.width = width;
    return l;
}

} // namespace detail

/// AlexNet-layout 2-D profile on (channels, 256, 256) input.
inline ArchitectureProfile canonical_2d(ActivationKind activation, std::size_t in_channels = 1,
                                        int n_classes = 2) {
    using namespace detail;
    ArchitectureProfile p;
    p.name = "canonical-2d";
    p.dims = 2;
    p.input_shape = {in_channels, 256, 256};
    p.activation = activation;
    p.n_classes = n_classes;
    p.layers = {
        conv_spec("conv1", 96, {11, 11}, {4, 4}, {0, 0}), act_spec("act1"),
        pool_spec("pool1", {3, 3}, {2, 2}),
        conv_spec("conv2", 256, {5, 5}, {1, 1}, {2, 2}), act_spec("act2"),
        pool_spec("pool2", {3, 3}, {2, 2}),
        conv_spec("conv3", 384, {3, 3}, {1, 1}, {1, 1}), act_spec("act3"),
        conv_spec("conv4", 384, {3, 3}, {1, 1}, {1, 1}), act_spec("act4"),
        conv_spec("conv5", 256, {3, 3}, {1, 1}, {1, 1}), act_spec("act5"),
        pool_spec("pool5", {3, 3}, {2, 2}),
        flatten_spec(),
        fc_spec("fc6", 4096), act_spec("act6"), dropout_spec("drop6", 0.5),
        fc_spec("fc7", 4096), act_spec("act7"), dropout_spec("drop7", 0.5),
        fc_spec("fc8", std::size_t(n_classes)),
    };
    return p;
}

/// 1-D mirror of the canonical profile on (1, length) input. FC widths are
/// 1024: the flattened 1-D feature map is 6144-dim, so 4096-wide FC layers
/// would dwarf the convolutional parameter count.
inline ArchitectureProfile canonical_1d(ActivationKind activation, std::size_t in_len = 820,
                                        int n_classes = 2) {
    using namespace detail;
    ArchitectureProfile p;
    p.name = "canonical-1d";
    p.dims = 1;
    p.input_shape = {1, in_len};
    p.activation = activation;
    p.n_classes = n_classes;
    p.layers = {
        conv_spec("conv1", 96, {1, 11}, {1, 4}, {0, 0}), act_spec("act1"),
        pool_spec("pool1", {1, 3}, {1, 2}),
        conv_spec("conv2", 256, {1, 5}, {1, 1}, {0, 2}), act_spec("act2"),
        pool_spec("pool2", {1, 3}, {1, 2}),
        conv_spec("conv3", 384, {1, 3}, {1, 1}, {0, 1}), act_spec("act3"),
        conv_spec("conv4", 384, {1, 3}, {1, 1}, {0, 1}), act_spec("act4"),
        conv_spec("conv5", 256, {1, 3}, {1, 1}, {0, 1}), act_spec("act5"),
        pool_spec("pool5", {1, 3}, {1, 2}),
        flatten_spec(),
        fc_spec("fc6", 1024), act_spec("act6"), dropout_spec("drop6", 0.5),
        fc_spec("fc7", 1024), act_spec("act7"), dropout_spec("drop7", 0.5),
        fc_spec("fc8", std::size_t(n_classes)),
    };
    return p;
}

/// Two conv blocks and one FC layer at 8 channels; small enough for
/// exhaustive finite-difference checks and fast CI runs.
inline ArchitectureProfile tiny_1d(ActivationKind activation, std::size_t in_len = 820, int n_classes = 2) {
    using namespace detail;
    ArchitectureProfile p;
    p.name = "tiny-1d";
    p.dims = 1;
    p.input_shape = {1, in_len};
    p.activation = activation;
    p.n_classes = n_classes;
    p.layers = {
        conv_spec("conv1", 8, {1, 7}, {1, 2}, {0, 0}), act_spec("act1"),
        pool_spec("pool1", {1, 2}, {1, 2}),
        conv_spec("conv2", 8, {1, 5}, {1, 2}, {0, 0}), act_spec("act2"),
        pool_spec("pool2", {1, 2}, {1, 2}),
        flatten_spec(),
        fc_spec("fc3", std::size_t(n_classes)),
    };
    return p;
}

inline ArchitectureProfile tiny_2d(ActivationKind activation, std::size_t in_side = 32, int n_classes = 2) {
    using namespace detail;
    ArchitectureProfile p;
    p.name = "tiny-2d";
    p.dims = 2;
    p.input_shape = {1, in_side, in_side};
    p.activation = activation;
    p.n_classes = n_classes;
    p.layers = {
        conv_spec("conv1", 8, {5, 5}, {2, 2}, {0, 0}), act_spec("act1"),
        pool_spec("pool1", {2, 2}, {2, 2}),
        conv_spec("conv2", 8, {3, 3}, {1, 1}, {1, 1}), act_spec("act2"),
        pool_spec("pool2", {2, 2}, {2, 2}),
        flatten_spec(),
        fc_spec("fc3", std::size_t(n_classes)),
    };
    return p;
}

/// Look up a built-in profile by name.
inline ArchitectureProfile profile_by_name(const std::string& name, ActivationKind activation,
                                           std::size_t image_channels = 1, int n_classes = 2) {
    if (name == "canonical-1d") return canonical_1d(activation, 820, n_classes);
    if (name == "canonical-2d") return canonical_2d(activation, image_channels, n_classes);
    if (name == "tiny-1d") return tiny_1d(activation, 820, n_classes);
    if (name == "tiny-2d") return tiny_2d(activation, 32, n_classes);
    throw ConfigError("unknown profile '" + name + "'");
}

// --------------------------------------------------------------------------
// shape inference
// --------------------------------------------------------------------------

struct LayerShape {
    std::string name;
    LayerKind kind;
    std::vector<std::size_t> out_shape; // per sample, without the batch axis
};

struct ShapeTable {
    std::vector<LayerShape> layers;
    std::size_t flat_features = 0; // feature count entering the first FC layer
};

/// Internal (C,H,W) view of a per-sample shape; 1-D input gets height 1.
inline std::vector<std::size_t> chw_of(const ArchitectureProfile& profile) {
    if (profile.dims == 1) {
        if (profile.input_shape.size() != 2) throw ShapeMismatch("1-D profile input shape must be (C, L)");
        return {profile.input_shape[0], 1, profile.input_shape[1]};
    }
    if (profile.dims == 2) {
        if (profile.input_shape.size() != 3)
            throw ShapeMismatch("2-D profile input shape must be (C, H, W)");
        return profile.input_shape;
    }
    throw ShapeMismatch("profile dims must be 1 or 2");
}

inline ShapeTable infer_shapes(const ArchitectureProfile& profile) {
    std::vector<std::size_t> cur = chw_of(profile);
    for (std::size_t d : cur)
        if (d == 0) throw ShapeMismatch("profile input shape has a zero extent");

    ShapeTable table;
    bool flat = false;
    for (const LayerSpec& layer : profile.layers) {
        try {
            switch (layer.kind) {
            case LayerKind::conv:
                if (flat) throw ShapeMismatch("conv after flatten");
                cur = {layer.out_channels,
                       detail::conv_out_extent(cur[1], layer.kernel.h, layer.stride.h, layer.pad.h),
                       detail::conv_out_extent(cur[2], layer.kernel.w, layer.stride.w, layer.pad.w)};
                break;
            case LayerKind::pool:
                if (flat) throw ShapeMismatch("pool after flatten");
                if (layer.kernel.h > cur[1] || layer.kernel.w > cur[2])
                    throw ShapeMismatch("pool window exceeds feature map");
                cur = {cur[0], (cur[1] - layer.kernel.h) / layer.stride.h + 1,
                       (cur[2] - layer.kernel.w) / layer.stride.w + 1};
                break;
            case LayerKind::act:
            case LayerKind::dropout:
                break;
            case LayerKind::flatten:
                if (flat) throw ShapeMismatch("flatten twice");
                cur = {cur[0] * cur[1] * cur[2]};
                flat = true;
                table.flat_features = cur[0];
                break;
            case LayerKind::fc:
                if (!flat) throw ShapeMismatch("fc before flatten");
                cur = {layer.width};
                break;
            }
        } catch (const ShapeMismatch& e) {
            throw ShapeMismatch("layer '" + layer.name + "': " + e.what());
        }
        table.layers.push_back(LayerShape{layer.name, layer.kind, cur});
    }
    if (table.layers.empty() || table.layers.back().kind != LayerKind::fc ||
        table.layers.back().out_shape != std::vector<std::size_t>{std::size_t(profile.n_classes)})
        throw ShapeMismatch("profile must end in an fc layer with n_classes outputs");
    return table;
}

// --------------------------------------------------------------------------
// parameterized network
// --------------------------------------------------------------------------

struct InitScheme {
    enum class Kind {
        scaled_uniform, // He-uniform for relu-family activations, Xavier-uniform for tanh
        normal
    };
    Kind kind = Kind::scaled_uniform;
    double sigma = 0.01;

    /// Parse "auto" or "normal:<sigma>".
    static InitScheme parse(const std::string& text) {
        if (text == "auto") return {};
        if (text.rfind("normal:", 0) == 0) {
            InitScheme s;
            s.kind = Kind::normal;
            s.sigma = std::stod(text.substr(7));
            if (s.sigma <= 0) throw ConfigError("init sigma must be positive");
            return s;
        }
        throw ConfigError("unknown init scheme '" + text + "' (want auto or normal:<sigma>)");
    }
};

template <typename T>
struct Network {
    struct Param {
        std::string name;
        Tensor<T> weights;
        Tensor<T> bias;
        double lr_multiplier = 1.0;
    };

    ArchitectureProfile profile;
    std::vector<Param> params;
    std::vector<int> param_of_layer; // per layer; -1 when unparameterized

    Param& param_named(const std::string& name) {
        for (Param& p : params)
            if (p.name == name) return p;
        throw MissingLayer("no parameterized layer named '" + name + "'");
    }
    const Param& param_named(const std::string& name) const {
        return const_cast<Network*>(this)->param_named(name);
    }

    template <typename U>
    Network<U> cast() const {
        Network<U> out;
        out.profile = profile;
        out.param_of_layer = param_of_layer;
        for (const Param& p : params)
            out.params.push_back({p.name, p.weights.template cast<U>(), p.bias.template cast<U>(),
                                  p.lr_multiplier});
        return out;
    }
};

namespace detail {

template <typename T>
void fill_uniform(Tensor<T>& t, double limit, std::mt19937_64& engine) {
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (T& v : t.data) v = T(dist(engine));
}

template <typename T>
void fill_normal(Tensor<T>& t, double sigma, std::mt19937_64& engine) {
    std::normal_distribution<double> dist(0.0, sigma);
    for (T& v : t.data) v = T(dist(engine));
}

template <typename T>
void init_param(typename Network<T>::Param& param, std::size_t fan_in, std::size_t fan_out,
                const ActivationKind& activation, const InitScheme& init, std::mt19937_64& engine) {
    if (init.kind == InitScheme::Kind::normal) {
        fill_normal(param.weights, init.sigma, engine);
    } else if (activation.kind == Activation::tanh) {
        fill_uniform(param.weights, std::sqrt(6.0 / double(fan_in + fan_out)), engine);
    } else {
        fill_uniform(param.weights, std::sqrt(6.0 / double(fan_in)), engine);
    }
    // biases start at zero
}

} // namespace detail

/// Allocate and initialize parameters for a profile. Initialization draws
/// one derived stream per parameter tensor, so adding layers elsewhere does
/// not shift existing layers' values.
template <typename T>
Network<T> build_network(const ArchitectureProfile& profile, const InitScheme& init, std::uint64_t seed) {
    infer_shapes(profile); // validate before allocating
    Network<T> net;
    net.profile = profile;

    std::vector<std::size_t> cur = chw_of(profile);
    bool flat = false;
    std::size_t flat_features = 0;
    for (std::size_t li = 0; li < profile.layers.size(); ++li) {
        const LayerSpec& layer = profile.layers[li];
        int param_index = -1;
        if (layer.kind == LayerKind::conv) {
            typename Network<T>::Param param;
            param.name = layer.name;
            param.weights = Tensor<T>({layer.out_channels, cur[0], layer.kernel.h, layer.kernel.w});
            param.bias = Tensor<T>({layer.out_channels});
            const std::size_t fan_in = cur[0] * layer.kernel.h * layer.kernel.w;
            const std::size_t fan_out = layer.out_channels * layer.kernel.h * layer.kernel.w;
            std::mt19937_64 engine = make_engine(derive_seed(seed, "init:" + layer.name));
            detail::init_param<T>(param, fan_in, fan_out, profile.activation, init, engine);
            param_index = int(net.params.size());
            net.params.push_back(std::move(param));
            cur = {layer.out_channels,
                   detail::conv_out_extent(cur[1], layer.kernel.h, layer.stride.h, layer.pad.h),
                   detail::conv_out_extent(cur[2], layer.kernel.w, layer.stride.w, layer.pad.w)};
        } else if (layer.kind == LayerKind::pool) {
            cur = {cur[0], (cur[1] - layer.kernel.h) / layer.stride.h + 1,
                   (cur[2] - layer.kernel.w) / layer.stride.w + 1};
        } else if (layer.kind == LayerKind::flatten) {
            flat_features = cur[0] * cur[1] * cur[2];
            flat = true;
        } else if (layer.kind == LayerKind::fc) {
            const std::size_t fan_in = flat ? flat_features : cur[0];
            typename Network<T>::Param param;
            param.name = layer.name;
            param.weights = Tensor<T>({layer.width, fan_in});
            param.bias = Tensor<T>({layer.width});
            std::mt19937_64 engine = make_engine(derive_seed(seed, "init:" + layer.name));
            detail::init_param<T>(param, fan_in, layer.width, profile.activation, init, engine);
            param_index = int(net.params.size());
            net.params.push_back(std::move(param));
            flat_features = layer.width;
        }
        net.param_of_layer.push_back(param_index);
    }
    return net;
}

// --------------------------------------------------------------------------
// forward / backward
// --------------------------------------------------------------------------

template <typename T>
struct ForwardCache {
    std::vector<Tensor<T>> inputs;                   // input seen by each layer
    std::vector<std::vector<std::uint32_t>> argmax;  // per pool layer position
    std::vector<std::vector<T>> masks;               // per dropout layer position
};

namespace detail {

/// Normalize a batch to rank 4 (N,C,H,W); 1-D batches (N,C,L) get height 1.
template <typename T>
Tensor<T> batch_as_chw(const ArchitectureProfile& profile, const Tensor<T>& batch) {
    std::vector<std::size_t> chw = chw_of(profile);
    if (batch.rank() < 2) throw ShapeMismatch("batch tensor must include a batch axis");
    const std::size_t n = batch.shape[0];
    const std::size_t per = batch.numel() / std::max<std::size_t>(n, 1);
    if (n == 0 || per != chw[0] * chw[1] * chw[2])
        throw ShapeMismatch("batch sample shape does not match profile input " + shape_str(chw));
    return batch.reshaped({n, chw[0], chw[1], chw[2]});
}

} // namespace detail

/// Run the network over a batch; returns (N, n_classes) logits. In train
/// mode dropout draws per-layer masks from streams derived from
/// dropout_seed. Pass a cache to keep what backward() needs.
template <typename T>
Tensor<T> forward(const Network<T>& net, const Tensor<T>& batch, Mode mode, std::uint64_t dropout_seed = 0,
                  ForwardCache<T>* cache = nullptr) {
    Tensor<T> cur = detail::batch_as_chw(net.profile, batch);
    const std::size_t n = cur.shape[0];

    if (cache) {
        cache->inputs.clear();
        cache->argmax.assign(net.profile.layers.size(), {});
        cache->masks.assign(net.profile.layers.size(), {});
    }

    for (std::size_t li = 0; li < net.profile.layers.size(); ++li) {
        const LayerSpec& layer = net.profile.layers[li];
        Tensor<T> scratch;
        if (cache)
            cache->inputs.push_back(std::move(cur));
        else
            scratch = std::move(cur);
        const Tensor<T>& in = cache ? cache->inputs.back() : scratch;

        switch (layer.kind) {
        case LayerKind::conv: {
            const auto& p = net.params[std::size_t(net.param_of_layer[li])];
            cur = conv_forward(in, p.weights, p.bias, layer.stride, layer.pad);
            break;
        }
        case LayerKind::pool: {
            PoolResult<T> r = maxpool_forward(in, layer.kernel, layer.stride);
            cur = std::move(r.y);
            if (cache) cache->argmax[li] = std::move(r.argmax);
            break;
        }
        case LayerKind::act:
            cur = activation_forward(net.profile.activation, in);
            break;
        case LayerKind::dropout: {
            DropoutResult<T> r = dropout_forward(in, layer.rate, mode, derive_seed(dropout_seed, li));
            cur = std::move(r.y);
            if (cache) cache->masks[li] = std::move(r.mask);
            break;
        }
        case LayerKind::flatten:
            cur = in.reshaped({n, in.numel() / n});
            break;
        case LayerKind::fc: {
            const auto& p = net.params[std::size_t(net.param_of_layer[li])];
            cur = fc_forward(in, p.weights, p.bias);
            break;
        }
        }
    }
    return cur;
}

template <typename T>
struct Gradients {
    struct ParamGrad {
        Tensor<T> dw, db;
    };
    std::vector<ParamGrad> params; // aligned with Network::params
    Tensor<T> dinput;

    bool all_finite() const {
        for (const ParamGrad& g : params)
            if (!g.dw.all_finite() || !g.db.all_finite()) return false;
        return true;
    }
};

/// Backpropagate dlogits through a cached forward pass. Returns gradients
/// for every parameter tensor, in parameter order. The input gradient is
/// only produced when want_input_grad is set; without it the first conv
/// layer skips its (unconsumed) data-gradient GEMM.
template <typename T>
Gradients<T> backward(const Network<T>& net, const ForwardCache<T>& cache, const Tensor<T>& dlogits,
                      bool want_input_grad = false) {
    if (cache.inputs.size() != net.profile.layers.size())
        throw ShapeMismatch("forward cache does not cover the network (was forward run with a cache?)");

    Gradients<T> grads;
    grads.params.resize(net.params.size());

    Tensor<T> g = dlogits;
    for (std::size_t li = net.profile.layers.size(); li-- > 0;) {
        const LayerSpec& layer = net.profile.layers[li];
        const Tensor<T>& in = cache.inputs[li];
        switch (layer.kind) {
        case LayerKind::conv: {
            const auto& p = net.params[std::size_t(net.param_of_layer[li])];
            const bool need_dx = li > 0 || want_input_grad;
            ConvGrads<T> cg = conv_backward(in, p.weights, g, layer.stride, layer.pad, need_dx);
            grads.params[std::size_t(net.param_of_layer[li])] = {std::move(cg.dw), std::move(cg.db)};
            g = std::move(cg.dx);
            break;
        }
        case LayerKind::pool:
            g = maxpool_backward(in.shape, std::span<const std::uint32_t>(cache.argmax[li]), g);
            break;
        case LayerKind::act:
            g = activation_backward(net.profile.activation, in, g);
            break;
        case LayerKind::dropout:
            g = dropout_backward(g, std::span<const T>(cache.masks[li]));
            break;
        case LayerKind::flatten:
            g = g.reshaped(in.shape);
            break;
        case LayerKind::fc: {
            const auto& p = net.params[std::size_t(net.param_of_layer[li])];
            FcGrads<T> fg = fc_backward(in, p.weights, g);
            grads.params[std::size_t(net.param_of_layer[li])] = {std::move(fg.dw), std::move(fg.db)};
            g = std::move(fg.dx);
            break;
        }
        }
    }
    grads.dinput = std::move(g);
    return grads;
}

// --------------------------------------------------------------------------
// finite-difference gradient verification
// --------------------------------------------------------------------------

struct GradCheckOptions {
    double epsilon = 1e-4;
    std::size_t max_coords_per_tensor = 200;
    std::uint64_t sample_seed = 7;
    /// Nonzero scales the analytic gradients by (1 + corruption) before
    /// comparison; used as a negative control of the harness itself.
    double corruption = 0.0;
};

struct GradCheckReport {
    struct PerTensor {
        std::string tensor; // e.g. "conv1.weight"
        double max_rel_error = 0.0;
        std::size_t coords_checked = 0;
        std::size_t coords_excluded = 0; // perturbation crossed a kink / pool tie
    };
    std::vector<PerTensor> tensors;
    double max_rel_error = 0.0;
};

namespace detail {

inline bool activation_is_piecewise(Activation kind) {
    return kind == Activation::relu || kind == Activation::elu || kind == Activation::selu;
}

/// Hash of the network's discrete routing decisions for one forward pass:
/// activation sign patterns (for piecewise activations) and pooling argmax
/// choices. Central differences are only valid while the route is fixed.
inline std::uint64_t route_signature(const Network<double>& net, const ForwardCache<double>& cache) {
    std::uint64_t sig = 0xcbf29ce484222325ull;
    auto mix = [&sig](std::uint64_t v) {
        sig ^= v + 0x9e3779b97f4a7c15ull + (sig << 6) + (sig >> 2);
    };
    const bool piecewise = activation_is_piecewise(net.profile.activation.kind);
    for (std::size_t li = 0; li < net.profile.layers.size(); ++li) {
        const LayerSpec& layer = net.profile.layers[li];
        if (layer.kind == LayerKind::act && piecewise) {
            for (double v : cache.inputs[li].data) mix(v > 0.0 ? 1u : 0u);
        } else if (layer.kind == LayerKind::pool) {
            for (std::uint32_t a : cache.argmax[li]) mix(a);
        }
    }
    return sig;
}

} // namespace detail

/// Compare backprop gradients against central finite differences of the
/// softmax cross-entropy loss, in double precision.
///
/// Coordinates whose +-epsilon perturbation changes the network's discrete
/// route (a ReLU/ELU/SeLU unit changing sign, a pooling argmax switching)
/// are excluded: the loss is not differentiable across those boundaries,
/// so the central difference measures nothing there. Coordinates where
/// both gradients are below 1e-2 are compared on that floor, keeping
/// roundoff on near-zero gradients from drowning real defects elsewhere.
template <typename T>
GradCheckReport grad_check(const Network<T>& net_in, const Tensor<T>& batch_in,
                           std::span<const int> labels, const GradCheckOptions& options = {}) {
    Network<double> net = net_in.template cast<double>();
    Tensor<double> batch = batch_in.template cast<double>();
    const std::uint64_t dropout_seed = 11; // fixed masks make the loss deterministic

    auto loss_and_route = [&]() -> std::pair<double, std::uint64_t> {
        ForwardCache<double> c;
        Tensor<double> logits = forward(net, batch, Mode::train, dropout_seed, &c);
        return {softmax_xent(logits, labels).loss, detail::route_signature(net, c)};
    };

    ForwardCache<double> cache;
    Tensor<double> logits = forward(net, batch, Mode::train, dropout_seed, &cache);
    SoftmaxResult<double> sm = softmax_xent(logits, labels);
    Gradients<double> grads = backward(net, cache, sm.dlogits);
    const std::uint64_t base_route = detail::route_signature(net, cache);

    GradCheckReport report;
    std::mt19937_64 engine = make_engine(options.sample_seed);
    for (std::size_t pi = 0; pi < net.params.size(); ++pi) {
        auto check_tensor = [&](const std::string& suffix, Tensor<double>& values,
                                const Tensor<double>& analytic) {
            GradCheckReport::PerTensor entry;
            entry.tensor = net.params[pi].name + suffix;
            std::vector<std::size_t> coords(values.numel());
            std::iota(coords.begin(), coords.end(), 0);
            if (coords.size() > options.max_coords_per_tensor) {
                std::shuffle(coords.begin(), coords.end(), engine);
                coords.resize(options.max_coords_per_tensor);
            }
            for (std::size_t coord : coords) {
                const double original = values.data[coord];
                values.data[coord] = original + options.epsilon;
                const auto [lp, route_p] = loss_and_route();
                values.data[coord] = original - options.epsilon;
                const auto [lm, route_m] = loss_and_route();
                values.data[coord] = original;
                if (route_p != base_route || route_m != base_route) {
                    ++entry.coords_excluded;
                    continue;
                }
                ++entry.coords_checked;
                const double fd = (lp - lm) / (2.0 * options.epsilon);
                const double bp = double(analytic.data[coord]) * (1.0 + options.corruption);
                const double rel = std::abs(fd - bp) / std::max({std::abs(fd), std::abs(bp), 1e-2});
                entry.max_rel_error = std::max(entry.max_rel_error, rel);
            }
            report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
            report.tensors.push_back(std::move(entry));
        };
        check_tensor(".weight", net.params[pi].weights, grads.params[pi].dw);
        check_tensor(".bias", net.params[pi].bias, grads.params[pi].db);
    }
    return report;
}

} // namespace ecgcnn
