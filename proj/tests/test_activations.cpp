#include <gtest/gtest.h>

#include <cmath>

#include "ecgcnn/activations.hpp"

using namespace ecgcnn;

namespace {

const ActivationKind kTanh{Activation::tanh};
const ActivationKind kRelu{Activation::relu};
const ActivationKind kElu{Activation::elu};
const ActivationKind kSelu{Activation::selu};
const ActivationKind kSwish{Activation::swish};

std::vector<double> grid(double lo, double hi, int n) {
    std::vector<double> xs;
    for (int i = 0; i < n; ++i) xs.push_back(lo + (hi - lo) * double(i) / double(n - 1));
    return xs;
}

} // namespace

TEST(Activations, ZeroIsAFixedPoint) {
    for (const ActivationKind& a : {kTanh, kRelu, kElu, kSelu, kSwish})
        EXPECT_DOUBLE_EQ(activate(a, 0.0), 0.0) << a.name();
}

TEST(Activations, ReluClampsNegatives) {
    EXPECT_DOUBLE_EQ(activate(kRelu, -2.0), 0.0);
    EXPECT_DOUBLE_EQ(activate(kRelu, 3.5), 3.5);
    EXPECT_DOUBLE_EQ(activate_grad(kRelu, 0.0), 0.0); // derivative at the kink is 0
    EXPECT_DOUBLE_EQ(activate_grad(kRelu, 1e-9), 1.0);
}

TEST(Activations, SwishAtOne) {
    EXPECT_NEAR(activate(kSwish, 1.0), 0.7310586, 1e-7);
}

TEST(Activations, SeluIsScaledIdentityForPositive) {
    for (double x : {0.5, 1.0, 2.0, 7.25})
        EXPECT_DOUBLE_EQ(activate(kSelu, x), kSeluLambda * x);
}

TEST(Activations, EluNegativeSaturation) {
    EXPECT_NEAR(activate(kElu, -1.0), std::expm1(-1.0), 1e-12);
    EXPECT_NEAR(activate(kElu, -30.0), -1.0, 1e-9); // saturates at -alpha
    ActivationKind elu2{Activation::elu};
    elu2.alpha = 2.0;
    EXPECT_NEAR(activate(elu2, -30.0), -2.0, 1e-8);
}

TEST(Activations, TanhOddSymmetryAndClosedForm) {
    for (double x : grid(-6.0, 6.0, 61)) {
        EXPECT_DOUBLE_EQ(activate(kTanh, x), -activate(kTanh, -x));
        const double closed = (1.0 - std::exp(-2.0 * x)) / (1.0 + std::exp(-2.0 * x));
        EXPECT_NEAR(activate(kTanh, x), closed, 1e-12);
    }
}

TEST(Activations, SwishApproachesReluAtLargeBeta) {
    ActivationKind swish50{Activation::swish};
    swish50.beta = 50.0;
    for (double x : grid(-10.0, 10.0, 201))
        EXPECT_LT(std::abs(activate(swish50, x) - activate(kRelu, x)), 0.02) << x;
}

TEST(Activations, SelfGateWithBetaTwoMatchesLogisticRatio) {
    // x / (1 + e^(-2x)) is the beta = 2 member of the swish family
    ActivationKind swish2{Activation::swish};
    swish2.beta = 2.0;
    for (double x : grid(-8.0, 8.0, 101))
        EXPECT_NEAR(activate(swish2, x), x / (1.0 + std::exp(-2.0 * x)), 1e-12);
}

TEST(Activations, DerivativesMatchCentralDifferences) {
    const double eps = 1e-6;
    for (const ActivationKind& a : {kTanh, kRelu, kElu, kSelu, kSwish}) {
        for (double x : grid(-4.0, 4.0, 81)) {
            if ((a.kind == Activation::relu || a.kind == Activation::selu ||
                 a.kind == Activation::elu) &&
                std::abs(x) < 10 * eps)
                continue; // kink neighborhood
            const double fd = (activate(a, x + eps) - activate(a, x - eps)) / (2.0 * eps);
            const double an = activate_grad(a, x);
            EXPECT_NEAR(an, fd, 1e-5 * std::max(1.0, std::abs(fd))) << a.name() << " at " << x;
        }
    }
}

TEST(Activations, TensorForwardBackward) {
    Tensor<double> x({2, 3}, {-2.0, -0.5, 0.0, 0.5, 1.0, 2.0});
    Tensor<double> up({2, 3}, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
    Tensor<double> y = activation_forward(kRelu, x);
    EXPECT_EQ(y.data, (std::vector<double>{0.0, 0.0, 0.0, 0.5, 1.0, 2.0}));
    Tensor<double> dx = activation_backward(kRelu, x, up);
    EXPECT_EQ(dx.data, (std::vector<double>{0.0, 0.0, 0.0, 4.0, 5.0, 6.0}));

    Tensor<double> bad({3, 2}, {0, 0, 0, 0, 0, 0});
    EXPECT_THROW(activation_backward(kRelu, x, bad), ShapeMismatch);
}

TEST(Activations, ParseNamesAndParameters) {
    EXPECT_EQ(ActivationKind::parse("swish").kind, Activation::swish);
    EXPECT_DOUBLE_EQ(ActivationKind::parse("swish:2.5").beta, 2.5);
    EXPECT_DOUBLE_EQ(ActivationKind::parse("elu:1.5").alpha, 1.5);
    EXPECT_THROW(ActivationKind::parse("relu:2"), ConfigError);
    EXPECT_THROW(ActivationKind::parse("selu:2"), ConfigError);
    EXPECT_THROW(ActivationKind::parse("mish"), ConfigError);
    EXPECT_THROW(ActivationKind::parse("swish:-1"), ConfigError);
}
