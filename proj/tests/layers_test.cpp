#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bcast/arch.hpp"
#include "bcast/gradcheck.hpp"
#include "bcast/layers.hpp"
#include "test_support.hpp"

using namespace bcast;
using bcast::testing::random_tensor;

using T = Tensor<double>;

namespace {

// variance of a value run, two-pass
double variance(const std::vector<double>& v) {
    double mean = 0;
    for (double x : v) mean += x;
    mean /= double(v.size());
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    return var / double(v.size());
}

ArchSpec dummy_arch() { return build_arch(Variant::Bbnn, 10); }

}  // namespace

TEST_CASE("conv2d identity, box sum, and errors") {
    // 1x1 conv with identity mapping
    T x = random_tensor<double>({2, 3, 4, 4}, 1);
    T w = T::zeros({3, 3, 1, 1});
    for (int i = 0; i < 3; ++i) w.value()[size_t(i * 3 + i)] = 1.0;
    T b = T::zeros({3});
    CHECK(conv2d(x, w, b, 1, Padding::Same).value() == x.value());

    // all-ones 3x3 kernel over all-ones 3x3 input, valid
    T ones_in = T::ones({1, 1, 3, 3});
    T ones_w = T::ones({1, 1, 3, 3});
    T out = conv2d(ones_in, ones_w, T::zeros({1}), 1, Padding::Valid);
    CHECK(out.shape() == Shape{1, 1, 1, 1});
    CHECK(out.item() == 9.0);

    // same padding at stride 1 preserves spatial dims
    CHECK(conv2d(x, T::zeros({5, 3, 3, 3}), T::zeros({5}), 1, Padding::Same).shape() ==
          Shape{2, 5, 4, 4});

    CHECK_THROWS_AS(conv2d(x, T::zeros({5, 4, 3, 3}), T::zeros({5}), 1, Padding::Same),
                    TensorError);
    CHECK_THROWS_AS(conv2d(x, T::zeros({5, 3, 3, 3}), T::zeros({5}), 0, Padding::Same),
                    TensorError);
}

TEST_CASE("factorized conv matches a 3x3 receptive field") {
    // degenerate kernels (center taps only) reproduce the input
    T x = random_tensor<double>({1, 2, 5, 5}, 2);
    T w1 = T::zeros({2, 2, 3, 1});
    T w2 = T::zeros({2, 2, 1, 3});
    for (int i = 0; i < 2; ++i) {
        w1.value()[size_t(((i * 2 + i) * 3 + 1) * 1)] = 1.0;  // center of 3x1
        w2.value()[size_t((i * 2 + i) * 3 + 1)] = 1.0;        // center of 1x3
    }
    T id = factorized_conv3x3(x, w1, T::zeros({2}), w2, T::zeros({2}), 1, Padding::Same);
    for (size_t i = 0; i < id.value().size(); ++i)
        CHECK(id.value()[i] == doctest::Approx(x.value()[i]).epsilon(1e-12));

    // impulse response footprint equals that of a plain 3x3 conv
    T impulse = T::zeros({1, 1, 7, 7});
    impulse.value()[size_t(3 * 7 + 3)] = 1.0;
    T fw1 = T::ones({1, 1, 3, 1});
    T fw2 = T::ones({1, 1, 1, 3});
    T fact = factorized_conv3x3(impulse, fw1, T::zeros({1}), fw2, T::zeros({1}), 1, Padding::Same);
    T plain = conv2d(impulse, T::ones({1, 1, 3, 3}), T::zeros({1}), 1, Padding::Same);
    for (size_t i = 0; i < fact.value().size(); ++i)
        CHECK((fact.value()[i] != 0.0) == (plain.value()[i] != 0.0));

    // parameter arithmetic for f=32: two 3-tap convs with their own biases
    LayerDesc d;
    d.kind = LayerKind::FactorizedConv;
    d.out_channels = 32;
    d.kernel_h = d.kernel_w = 3;
    ArchSpec a = dummy_arch();
    int64_t total = 0;
    for (const auto& p : layer_param_shapes(a, d, "t", 32)) total += numel(p.shape);
    CHECK(total == 6208);
}

TEST_CASE("separable conv shapes and parameter arithmetic") {
    T x = random_tensor<double>({1, 3, 4, 4}, 3);
    // depthwise identity (center tap) + pointwise identity
    T dw = T::zeros({3, 1, 3, 3});
    for (int c = 0; c < 3; ++c) dw.value()[size_t(c * 9 + 4)] = 1.0;
    T pw = T::zeros({3, 3, 1, 1});
    for (int c = 0; c < 3; ++c) pw.value()[size_t(c * 3 + c)] = 1.0;
    T out = separable_conv2d(x, dw, T::zeros({3}), pw, T::zeros({3}));
    for (size_t i = 0; i < out.value().size(); ++i)
        CHECK(out.value()[i] == doctest::Approx(x.value()[i]).epsilon(1e-12));

    // output channel count follows the pointwise stage
    CHECK(separable_conv2d(x, dw, T::zeros({3}), T::zeros({7, 3, 1, 1}), T::zeros({7})).dim(1) == 7);

    LayerDesc d;
    d.kind = LayerKind::SeparableConv;
    d.out_channels = 128;
    d.kernel_h = d.kernel_w = 3;
    ArchSpec a = dummy_arch();
    int64_t total = 0;
    for (const auto& p : layer_param_shapes(a, d, "t", 416)) total += numel(p.shape);
    CHECK(total == 57536);  // 416*9+416 + 416*128+128
}

TEST_CASE("batch norm statistics, affine, and eval mode") {
    // three samples of one channel: {1,2,3}
    T x = T::from({3, 1, 1, 1}, {1, 2, 3});
    T gamma = T::ones({1});
    T beta = T::zeros({1});
    T rm = T::zeros({1});
    T rv = T::ones({1});
    T out = batch_norm(x, gamma, beta, rm, rv, Mode::Train, true);
    const double c = 1.0 / std::sqrt(2.0 / 3.0 + 1e-3);
    CHECK(out.value()[0] == doctest::Approx(-c).epsilon(1e-9));
    CHECK(out.value()[1] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(out.value()[2] == doctest::Approx(c).epsilon(1e-9));
    // momentum 0.99 running update
    CHECK(rm.value()[0] == doctest::Approx(0.99 * 0 + 0.01 * 2.0).epsilon(1e-12));
    CHECK(rv.value()[0] == doctest::Approx(0.99 * 1 + 0.01 * (2.0 / 3.0)).epsilon(1e-12));

    // gamma=2, beta=5 on (already standardized) input
    T std_in = T::from({3, 1, 1, 1}, {-1, 0, 1});  // variance 2/3, close enough for affine check
    T g2 = T::full({1}, 2.0);
    T b5 = T::full({1}, 5.0);
    T out2 = batch_norm(std_in, g2, b5, rm, rv, Mode::Train, false);
    double mean = (out2.value()[0] + out2.value()[1] + out2.value()[2]) / 3.0;
    CHECK(mean == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(std::sqrt(variance(out2.value())) == doctest::Approx(2.0).epsilon(1e-2));

    // eval mode depends only on running stats
    T rm2 = T::full({1}, 0.5);
    T rv2 = T::full({1}, 4.0);
    T e1 = batch_norm(x, gamma, beta, rm2, rv2, Mode::Eval, false);
    T e2 = batch_norm(x, gamma, beta, rm2, rv2, Mode::Eval, false);
    CHECK(e1.value() == e2.value());
    CHECK(e1.value()[0] == doctest::Approx((1 - 0.5) / std::sqrt(4.0 + 1e-3)).epsilon(1e-9));

    CHECK_THROWS_AS(batch_norm(T::zeros({0, 1, 1, 1}), gamma, beta, rm, rv, Mode::Train, false),
                    TensorError);
}

TEST_CASE("batch norm train output is standardized per channel") {
    // per-channel variance > 1 so the epsilon bite stays within tolerance
    T x = random_tensor<double>({4, 3, 5, 6}, 7, -3.0, 3.0);
    T gamma = T::ones({3});
    T beta = T::zeros({3});
    T rm = T::zeros({3});
    T rv = T::ones({3});
    T out = batch_norm(x, gamma, beta, rm, rv, Mode::Train, false);
    for (int c = 0; c < 3; ++c) {
        std::vector<double> chan;
        for (int n = 0; n < 4; ++n)
            for (int s = 0; s < 30; ++s) chan.push_back(out.value()[size_t((n * 3 + c) * 30 + s)]);
        double mean = 0;
        for (double v : chan) mean += v;
        mean /= double(chan.size());
        CHECK(std::abs(mean) < 1e-5);
        CHECK(std::abs(variance(chan) - 1.0) < 1e-3);
    }
}

TEST_CASE("group norm groups of 16 and batch independence") {
    // 32 channels -> 2 groups of 16; constant input per group -> zeros pre-affine
    T x = T::zeros({1, 32, 2, 2});
    for (int c = 0; c < 32; ++c)
        for (int s = 0; s < 4; ++s) x.value()[size_t(c * 4 + s)] = c < 16 ? 3.0 : -2.0;
    T gamma = T::ones({32});
    T beta = T::zeros({32});
    T out = group_norm(x, gamma, beta, 16);
    for (double v : out.value()) CHECK(v == 0.0);

    // identical per-sample input gives identical per-sample output at any batch size
    T one = random_tensor<double>({1, 32, 3, 3}, 9);
    std::vector<double> rep;
    for (int n = 0; n < 8; ++n) rep.insert(rep.end(), one.value().begin(), one.value().end());
    T eight = T::from({8, 32, 3, 3}, rep);
    T o1 = group_norm(one, gamma, beta, 16);
    T o8 = group_norm(eight, gamma, beta, 16);
    for (size_t i = 0; i < o1.value().size(); ++i)
        CHECK(o8.value()[i] == doctest::Approx(o1.value()[i]).epsilon(1e-12));

    CHECK_THROWS_AS(group_norm(T::zeros({1, 30, 2, 2}), T::ones({30}), T::zeros({30}), 16),
                    TensorError);
}

TEST_CASE("relu and selu values") {
    T x = T::from({4}, {-3, 0, 1, 3});
    CHECK(relu(x).value() == std::vector<double>{0, 0, 1, 3});
    T s = selu(x);
    CHECK(s.value()[1] == 0.0);
    CHECK(s.value()[2] == doctest::Approx(1.0507009873554805).epsilon(1e-12));
    T deep = selu(T::from({1}, {-1e9}));
    CHECK(deep.value()[0] == doctest::Approx(-1.7580993408473766).epsilon(1e-9));
}

TEST_CASE("pooling values and shape rules") {
    T x = T::from({1, 1, 2, 2}, {1, 2, 3, 4});
    CHECK(max_pool(x, 2, 2, Padding::Valid).item() == 4.0);
    CHECK(avg_pool(x, 2, 2).item() == 2.5);

    T big = random_tensor<double>({2, 3, 5, 7}, 11);
    CHECK(max_pool(big, 3, 1, Padding::Same).shape() == big.shape());
    CHECK_THROWS_AS(max_pool(x, 5, 1, Padding::Valid), TensorError);
}

TEST_CASE("global pooling") {
    T c = T::full({2, 3, 4, 4}, 2.5);
    CHECK(global_avg_pool(c).value() == std::vector<double>(6, 2.5));
    CHECK(global_max_pool(c).value() == std::vector<double>(6, 2.5));

    // GAP is invariant under circular spatial shifts
    T x = random_tensor<double>({1, 2, 3, 4}, 12);
    T shifted = T::zeros(x.shape());
    for (int ch = 0; ch < 2; ++ch)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j)
                shifted.value()[size_t(ch * 12 + ((i + 1) % 3) * 4 + (j + 2) % 4)] =
                    x.value()[size_t(ch * 12 + i * 4 + j)];
    for (size_t i = 0; i < 2; ++i)
        CHECK(global_avg_pool(shifted).value()[i] ==
              doctest::Approx(global_avg_pool(x).value()[i]).epsilon(1e-12));

    // GMP of a one-hot spatial map returns the peak
    T hot = T::zeros({1, 1, 4, 4});
    hot.value()[9] = 7.5;
    CHECK(global_max_pool(hot).item() == 7.5);
}

TEST_CASE("dropout passthrough and Monte-Carlo expectation") {
    Rng rng(1);
    T x = random_tensor<double>({4, 4}, 13, 0.5, 1.5);
    T ev = dropout(x, 0.6, Mode::Eval, rng);
    CHECK(ev.same_storage(x));  // eval mode is the identity
    T k1 = dropout(x, 1.0, Mode::Train, rng);
    CHECK(k1.same_storage(x));
    CHECK_THROWS_AS(dropout(x, 0.0, Mode::Train, rng), TensorError);
    CHECK_THROWS_AS(dropout(x, 1.5, Mode::Train, rng), TensorError);

    // averaged over many masks the output approaches the input
    Rng mc(77);
    const int iters = 20000;
    std::vector<double> acc(x.value().size(), 0.0);
    for (int it = 0; it < iters; ++it) {
        T y = dropout(x, 0.6, Mode::Train, mc);
        for (size_t i = 0; i < acc.size(); ++i) acc[i] += y.value()[i];
    }
    for (size_t i = 0; i < acc.size(); ++i) {
        double mean = acc[i] / iters;
        CHECK(std::abs(mean - x.value()[i]) / std::abs(x.value()[i]) < 0.02);
    }
}

TEST_CASE("dense identity weights pass through") {
    T x = random_tensor<double>({3, 4}, 14);
    T w = T::zeros({4, 4});
    for (int i = 0; i < 4; ++i) w.value()[size_t(i * 4 + i)] = 1.0;
    CHECK(dense(x, w, T::zeros({4})).value() == x.value());
}

TEST_CASE("lstm zero case, parameter arithmetic, and a hand-unrolled step") {
    // all-zero input and parameters give an all-zero sequence
    T zx = T::zeros({2, 3, 4});
    T out = lstm_seq(zx, T::zeros({8, 3}), T::zeros({8, 2}), T::zeros({8}), 2);
    CHECK(out.shape() == Shape{2, 2, 4});
    for (double v : out.value()) CHECK(v == 0.0);

    LayerDesc d;
    d.kind = LayerKind::LstmTime;
    d.out_channels = 32;
    ArchSpec a = dummy_arch();
    int64_t total = 0;
    for (const auto& p : layer_param_shapes(a, d, "t", 32)) total += numel(p.shape);
    CHECK(total == 4 * (32 + 32 + 1) * 32);

    // one step of a 2-unit cell against gate equations evaluated by hand
    // x = [1, -1], zero initial state, wh irrelevant on step one
    T x1 = T::from({1, 2, 1}, {1.0, -1.0});
    std::vector<double> wx = {
        0.5,  0.1,   // i0
        -0.2, 0.3,   // i1
        0.1,  0.1,   // f0
        0.2,  -0.4,  // f1
        0.7,  -0.1,  // g0
        0.0,  0.25,  // g1
        -0.3, 0.2,   // o0
        0.6,  0.0,   // o1
    };
    std::vector<double> bias = {0.05, -0.1, 0.0, 0.2, 0.1, -0.3, 0.0, 0.15};
    T wxv = T::from({8, 2}, wx);
    T whv = T::zeros({8, 2});
    T bv = T::from({8}, bias);
    T y = lstm_seq(x1, wxv, whv, bv, 2);

    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    for (int u = 0; u < 2; ++u) {
        double zi = wx[size_t(u * 2)] - wx[size_t(u * 2 + 1)] + bias[size_t(u)];
        double zf = wx[size_t(4 + u * 2)] - wx[size_t(4 + u * 2 + 1)] + bias[size_t(2 + u)];
        double zg = wx[size_t(8 + u * 2)] - wx[size_t(8 + u * 2 + 1)] + bias[size_t(4 + u)];
        double zo = wx[size_t(12 + u * 2)] - wx[size_t(12 + u * 2 + 1)] + bias[size_t(6 + u)];
        (void)zf;  // cell state is zero, so the forget gate has nothing to keep
        double cell = sig(zi) * std::tanh(zg);
        double expect = sig(zo) * std::tanh(cell);
        CHECK(y.value()[size_t(u)] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("squeeze-excitation gating") {
    ArchSpec a = dummy_arch();
    LayerDesc d;
    d.kind = LayerKind::SqueezeExcite;
    d.se_ratio = 4;
    auto shapes = layer_param_shapes(a, d, "t", 128);
    CHECK(shapes[0].shape == Shape{32, 128});  // bottleneck width C/r

    // zero excitation weights: sigmoid(0) = 0.5, so output is x/2
    T x = random_tensor<double>({2, 8, 3, 3}, 15);
    T w1 = T::zeros({2, 8});
    T b1 = T::zeros({2});
    T w2 = T::zeros({8, 2});
    T b2 = T::zeros({8});
    T half = se_block(x, w1, b1, w2, b2);
    CHECK(half.shape() == x.shape());
    for (size_t i = 0; i < x.value().size(); ++i)
        CHECK(half.value()[i] == doctest::Approx(0.5 * x.value()[i]).epsilon(1e-12));

    // with dead first stage, b2 sets a fixed per-channel scale
    for (int c = 0; c < 8; ++c) b2.value()[size_t(c)] = 0.25 * c - 1.0;
    T scaled = se_block(x, w1, b1, w2, b2);
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 8; ++c) {
            double s = 1.0 / (1.0 + std::exp(-(0.25 * c - 1.0)));
            for (int sp = 0; sp < 9; ++sp) {
                size_t i = size_t((n * 8 + c) * 9 + sp);
                CHECK(scaled.value()[i] == doctest::Approx(s * x.value()[i]).epsilon(1e-9));
            }
        }

    CHECK_THROWS_AS(layer_param_shapes(a, d, "t", 30), ConfigError);
}

TEST_CASE("label smoothing") {
    T hot = T::zeros({2, 10});
    hot.value()[3] = 1.0;
    hot.value()[10] = 1.0;
    T sm = smooth_labels(hot, 0.1, 10);
    const double on = (1.0 - 0.1) * 1.0 + 0.1 / 10.0;
    const double off = 0.1 / 10.0;
    CHECK(sm.value()[3] == on);
    CHECK(sm.value()[0] == off);
    CHECK(sm.value()[3] == doctest::Approx(0.91).epsilon(1e-12));
    CHECK(sm.value()[0] == doctest::Approx(0.01).epsilon(1e-12));

    T same = smooth_labels(hot, 0.0, 10);
    CHECK(same.value() == hot.value());

    for (int r = 0; r < 2; ++r) {
        double sum = 0;
        for (int k = 0; k < 10; ++k) sum += sm.value()[size_t(r * 10 + k)];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }

    // argmax preserved for eps below (K-1)/K
    for (double eps : {0.1, 0.5, 0.85}) {
        T s = smooth_labels(hot, eps, 10);
        int arg = 0;
        for (int k = 1; k < 10; ++k)
            if (s.value()[size_t(k)] > s.value()[size_t(arg)]) arg = k;
        CHECK(arg == 3);
    }

    CHECK_THROWS_AS(smooth_labels(hot, 1.0, 10), TensorError);
    CHECK_THROWS_AS(smooth_labels(hot, -0.1, 10), TensorError);
}

TEST_CASE("every layer passes the 64-bit gradient check") {
    const double tol = 1e-4;

    auto fn_conv = [](const std::vector<T>& in) {
        T y = conv2d(in[0], in[1], in[2], 1, Padding::Same);
        return sum_all(mul(y, y));
    };
    CHECK(grad_check<double>(fn_conv,
                             {random_tensor<double>({2, 3, 5, 4}, 101),
                              random_tensor<double>({4, 3, 3, 3}, 102), random_tensor<double>({4}, 103)},
                             1e-5) < tol);

    auto fn_conv_s2 = [](const std::vector<T>& in) {
        T y = conv2d(in[0], in[1], in[2], 2, Padding::Valid);
        return sum_all(mul(y, y));
    };
    CHECK(grad_check<double>(fn_conv_s2,
                             {random_tensor<double>({1, 2, 6, 7}, 104),
                              random_tensor<double>({3, 2, 3, 3}, 105), random_tensor<double>({3}, 106)},
                             1e-5) < tol);

    auto fn_dw = [](const std::vector<T>& in) {
        T y = depthwise_conv2d(in[0], in[1], in[2], 1, Padding::Same);
        return sum_all(mul(y, y));
    };
    CHECK(grad_check<double>(fn_dw,
                             {random_tensor<double>({2, 3, 4, 5}, 107),
                              random_tensor<double>({3, 1, 3, 3}, 108), random_tensor<double>({3}, 109)},
                             1e-5) < tol);

    auto fn_fact = [](const std::vector<T>& in) {
        T y = factorized_conv3x3(in[0], in[1], in[2], in[3], in[4], 1, Padding::Same);
        return sum_all(mul(y, y));
    };
    CHECK(grad_check<double>(fn_fact,
                             {random_tensor<double>({1, 2, 4, 4}, 110),
                              random_tensor<double>({3, 2, 3, 1}, 111), random_tensor<double>({3}, 112),
                              random_tensor<double>({3, 3, 1, 3}, 113), random_tensor<double>({3}, 114)},
                             1e-5) < tol);

    auto fn_sep = [](const std::vector<T>& in) {
        T y = separable_conv2d(in[0], in[1], in[2], in[3], in[4]);
        return sum_all(mul(y, y));
    };
    CHECK(grad_check<double>(fn_sep,
                             {random_tensor<double>({1, 3, 4, 4}, 115),
                              random_tensor<double>({3, 1, 3, 3}, 116), random_tensor<double>({3}, 117),
                              random_tensor<double>({5, 3, 1, 1}, 118), random_tensor<double>({5}, 119)},
                             1e-5) < tol);

    auto fn_maxp = [](const std::vector<T>& in) {
        T y = max_pool(in[0], 2, 2, Padding::Valid);
        return sum_all(mul(y, y));
    };
    CHECK(grad_check<double>(fn_maxp, {random_tensor<double>({2, 2, 4, 4}, 120)}, 1e-6) < tol);

    auto fn_avgp = [](const std::vector<T>& in) {
        T y = avg_pool(in[0], 2, 2);
        return sum_all(mul(y, y));
    };
    CHECK(grad_check<double>(fn_avgp, {random_tensor<double>({2, 2, 4, 4}, 121)}, 1e-6) < tol);

    auto fn_gap = [](const std::vector<T>& in) {
        T y = global_avg_pool(in[0]);
        return sum_all(mul(y, y));
    };
    CHECK(grad_check<double>(fn_gap, {random_tensor<double>({2, 3, 3, 4}, 122)}, 1e-6) < tol);

    auto fn_gmp = [](const std::vector<T>& in) {
        T y = global_max_pool(in[0]);
        return sum_all(mul(y, y));
    };
    CHECK(grad_check<double>(fn_gmp, {random_tensor<double>({2, 3, 3, 4}, 123)}, 1e-6) < tol);

    auto fn_bn = [](const std::vector<T>& in) {
        T rm = T::zeros({3});
        T rv = T::ones({3});
        T y = batch_norm(in[0], in[1], in[2], rm, rv, Mode::Train, false);
        return sum_all(mul(y, y));
    };
    CHECK(grad_check<double>(fn_bn,
                             {random_tensor<double>({3, 3, 2, 3}, 124, -2.0, 2.0),
                              random_tensor<double>({3}, 125, 0.5, 1.5),
                              random_tensor<double>({3}, 126)},
                             1e-5) < tol);

    auto fn_bn_eval = [](const std::vector<T>& in) {
        T rm = T::from({3}, {0.1, -0.2, 0.3});
        T rv = T::from({3}, {1.0, 2.0, 0.5});
        T y = batch_norm(in[0], in[1], in[2], rm, rv, Mode::Eval, false);
        return sum_all(mul(y, y));
    };
    CHECK(grad_check<double>(fn_bn_eval,
                             {random_tensor<double>({2, 3, 2, 2}, 127),
                              random_tensor<double>({3}, 128, 0.5, 1.5),
                              random_tensor<double>({3}, 129)},
                             1e-5) < tol);

    auto fn_gn = [](const std::vector<T>& in) {
        T y = group_norm(in[0], in[1], in[2], 2);
        return sum_all(mul(y, y));
    };
    CHECK(grad_check<double>(fn_gn,
                             {random_tensor<double>({2, 4, 2, 3}, 130, -2.0, 2.0),
                              random_tensor<double>({4}, 131, 0.5, 1.5),
                              random_tensor<double>({4}, 132)},
                             1e-5) < tol);

    auto fn_dense = [](const std::vector<T>& in) {
        T y = dense(in[0], in[1], in[2]);
        return sum_all(mul(y, y));
    };
    CHECK(grad_check<double>(fn_dense,
                             {random_tensor<double>({3, 4}, 133), random_tensor<double>({5, 4}, 134),
                              random_tensor<double>({5}, 135)},
                             1e-6) < tol);

    auto fn_lstm = [](const std::vector<T>& in) {
        T y = lstm_seq(in[0], in[1], in[2], in[3], 3);
        return sum_all(mul(y, y));
    };
    CHECK(grad_check<double>(fn_lstm,
                             {random_tensor<double>({2, 2, 4}, 136), random_tensor<double>({12, 2}, 137),
                              random_tensor<double>({12, 3}, 138), random_tensor<double>({12}, 139)},
                             1e-5) < tol);

    auto fn_se = [](const std::vector<T>& in) {
        T y = se_block(in[0], in[1], in[2], in[3], in[4]);
        return sum_all(mul(y, y));
    };
    CHECK(grad_check<double>(fn_se,
                             {random_tensor<double>({2, 4, 3, 3}, 140), random_tensor<double>({2, 4}, 141),
                              random_tensor<double>({2}, 142), random_tensor<double>({4, 2}, 143),
                              random_tensor<double>({4}, 144)},
                             1e-5) < tol);

    auto fn_selu = [](const std::vector<T>& in) { return sum_all(mul(selu(in[0]), selu(in[0]))); };
    CHECK(grad_check<double>(fn_selu, {random_tensor<double>({3, 4}, 145, 0.1, 2.0)}, 1e-6) < tol);
}
