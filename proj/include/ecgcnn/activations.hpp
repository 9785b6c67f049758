#pragma once

// The activation zoo: tanh, ReLU, ELU(alpha), SeLU (fixed constants) and
// Swish(beta), with elementwise forward and derivative kernels.

#include <cmath>
#include <string>

#include "ecgcnn/errors.hpp"
#include "ecgcnn/tensor.hpp"

namespace ecgcnn {

enum class Activation { tanh, relu, elu, selu, swish };

// SeLU scaling constants; not user-configurable.
inline constexpr double kSeluLambda = 1.0507;
inline constexpr double kSeluAlpha = 1.6733;

struct ActivationKind {
    Activation kind = Activation::relu;
    double alpha = 1.0; // elu
    double beta = 1.0;  // swish

    static ActivationKind parse(const std::string& name);
    std::string name() const;
};

/// Accepts "tanh", "relu", "selu", "elu", "swish", and parameterized
/// "elu:<alpha>" / "swish:<beta>". SeLU's constants are fixed.
inline ActivationKind ActivationKind::parse(const std::string& text) {
    std::string name = text;
    double param = 0.0;
    bool has_param = false;
    if (auto colon = text.find(':'); colon != std::string::npos) {
        name = text.substr(0, colon);
        try {
            param = std::stod(text.substr(colon + 1));
        } catch (...) {
            throw ConfigError("bad activation parameter in '" + text + "'");
        }
        if (param <= 0) throw ConfigError("activation parameter must be positive");
        has_param = true;
    }
    if (name == "tanh" || name == "relu" || name == "selu") {
        if (has_param) throw ConfigError("activation '" + name + "' takes no parameter");
        if (name == "tanh") return {Activation::tanh};
        if (name == "relu") return {Activation::relu};
        return {Activation::selu};
    }
    if (name == "elu") {
        ActivationKind a{Activation::elu};
        if (has_param) a.alpha = param;
        return a;
    }
    if (name == "swish") {
        ActivationKind a{Activation::swish};
        if (has_param) a.beta = param;
        return a;
    }
    throw ConfigError("unknown activation '" + text + "'");
}

inline std::string ActivationKind::name() const {
    switch (kind) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::elu: return "elu";
    case Activation::selu: return "selu";
    case Activation::swish: return "swish";
    }
    return "?";
}

namespace detail {

template <typename T>
T sigmoid(T z) {
    // overflow-safe logistic
    if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
    const T e = std::exp(z);
    return e / (T(1) + e);
}

} // namespace detail

template <typename T>
T activate(const ActivationKind& act, T x) {
    switch (act.kind) {
    case Activation::tanh:
        return std::tanh(x);
    case Activation::relu:
        return x > T(0) ? x : T(0);
    case Activation::elu:
        return x > T(0) ? x : T(act.alpha) * std::expm1(x);
    case Activation::selu:
        return T(kSeluLambda) * (x > T(0) ? x : T(kSeluAlpha) * std::expm1(x));
    case Activation::swish:
        return x * detail::sigmoid(T(act.beta) * x);
    }
    return T(0);
}

/// Derivative at x. ReLU's derivative at exactly 0 is defined as 0.
template <typename T>
T activate_grad(const ActivationKind& act, T x) {
    switch (act.kind) {
    case Activation::tanh: {
        const T t = std::tanh(x);
        return T(1) - t * t;
    }
    case Activation::relu:
        return x > T(0) ? T(1) : T(0);
    case Activation::elu:
        return x > T(0) ? T(1) : T(act.alpha) * std::exp(x);
    case Activation::selu:
        return T(kSeluLambda) * (x > T(0) ? T(1) : T(kSeluAlpha) * std::exp(x));
    case Activation::swish: {
        const T s = detail::sigmoid(T(act.beta) * x);
        return s + T(act.beta) * x * s * (T(1) - s);
    }
    }
    return T(0);
}

template <typename T>
Tensor<T> activation_forward(const ActivationKind& act, const Tensor<T>& x) {
    Tensor<T> y;
    y.shape = x.shape;
    y.data.resize(x.data.size());
    for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = activate(act, x.data[i]);
    return y;
}

/// Elementwise derivative times the upstream gradient.
template <typename T>
Tensor<T> activation_backward(const ActivationKind& act, const Tensor<T>& x, const Tensor<T>& upstream) {
    if (!x.same_shape(upstream)) throw ShapeMismatch("activation backward shape mismatch");
    Tensor<T> dx;
    dx.shape = x.shape;
    dx.data.resize(x.data.size());
    for (std::size_t i = 0; i < x.data.size(); ++i)
        dx.data[i] = activate_grad(act, x.data[i]) * upstream.data[i];
    return dx;
}

} // namespace ecgcnn
