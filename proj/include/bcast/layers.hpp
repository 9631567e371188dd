#pragma once

#include "bcast/conv.hpp"
#include "bcast/norm.hpp"

// Composite layers built from the primitives: affine/dense heads, the
// factorized and depthwise-separable convolutions, squeeze-excitation
// gating, and an LSTM scanned over the time axis.

namespace bcast {

// y = x * w^T + b with x [n, in], w [out, in], b [out]
template <class S>
Tensor<S> dense(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b) {
    Tensor<S> y = matmul(x, w, false, true);
    return add(y, b);
}

// 3x1 then 1x3 convolution, each with its own bias; stands in for one
// 3x3-class layer
template <class S>
Tensor<S> factorized_conv3x3(const Tensor<S>& x, const Tensor<S>& w1, const Tensor<S>& b1,
                             const Tensor<S>& w2, const Tensor<S>& b2, int64_t stride,
                             Padding pad) {
    Tensor<S> t = conv2d(x, w1, b1, stride, pad);
    return conv2d(t, w2, b2, 1, pad);
}

// depthwise 3x3 per channel followed by a pointwise 1x1 mix, biases on both
// stages; dw is [C,1,3,3], pw is [out,C,1,1]
template <class S>
Tensor<S> separable_conv2d(const Tensor<S>& x, const Tensor<S>& dw, const Tensor<S>& db,
                           const Tensor<S>& pw, const Tensor<S>& pb) {
    Tensor<S> depth = depthwise_conv2d(x, dw, db, 1, Padding::Same);
    return conv2d(depth, pw, pb, 1, Padding::Same);
}

// squeeze-excitation: per-channel gate from globally pooled statistics,
// bottleneck C -> C/r -> C, sigmoid output scales the input channelwise
template <class S>
Tensor<S> se_block(const Tensor<S>& x, const Tensor<S>& w1, const Tensor<S>& b1,
                   const Tensor<S>& w2, const Tensor<S>& b2) {
    const int64_t n = x.dim(0), c = x.dim(1);
    if (w1.dim(1) != c || w2.dim(0) != c) {
        throw TensorError("se_block weights do not match " + std::to_string(c) + " channels");
    }
    Tensor<S> squeeze = global_avg_pool(x);                       // [n, c]
    Tensor<S> hidden = relu(dense(squeeze, w1, b1));              // [n, c/r]
    Tensor<S> gate = sigmoid(dense(hidden, w2, b2));              // [n, c]
    Tensor<S> gate4 = reshape(gate, Shape{n, c, 1, 1});
    return mul(x, broadcast_to(gate4, x.shape()));
}

// LSTM over the last axis of [n, features, T]; returns [n, hidden, T].
// Gates in i,f,g,o order: wx [4H, F], wh [4H, H], b [4H]; zero initial state.
template <class S>
Tensor<S> lstm_seq(const Tensor<S>& x, const Tensor<S>& wx, const Tensor<S>& wh,
                   const Tensor<S>& b, int64_t hidden) {
    if (x.rank() != 3) throw TensorError("lstm_seq expects [batch, features, time]");
    const int64_t n = x.dim(0), t_len = x.dim(2);
    if (t_len < 1) throw TensorError("lstm_seq needs at least one timestep");
    Tensor<S> h = Tensor<S>::zeros({n, hidden});
    Tensor<S> c = Tensor<S>::zeros({n, hidden});
    std::vector<Tensor<S>> steps;
    steps.reserve(static_cast<size_t>(t_len));
    for (int64_t t = 0; t < t_len; ++t) {
        Tensor<S> xt = slice_last(x, t);                          // [n, F]
        Tensor<S> gates = add(add(matmul(xt, wx, false, true), matmul(h, wh, false, true)), b);
        Tensor<S> ig = sigmoid(slice_channels(gates, 0, hidden));
        Tensor<S> fg = sigmoid(slice_channels(gates, hidden, 2 * hidden));
        Tensor<S> gg = tanh(slice_channels(gates, 2 * hidden, 3 * hidden));
        Tensor<S> og = sigmoid(slice_channels(gates, 3 * hidden, 4 * hidden));
        c = add(mul(fg, c), mul(ig, gg));
        h = mul(og, tanh(c));
        steps.push_back(reshape(h, Shape{n, hidden, 1}));
    }
    return concat_axis(steps, 2);
}

// (1-eps) * one_hot + eps/K, rowwise
template <class S>
Tensor<S> smooth_labels(const Tensor<S>& one_hot, double eps, int64_t k) {
    if (eps < 0.0 || eps >= 1.0) {
        throw TensorError("label smoothing eps must be in [0,1), got " + std::to_string(eps));
    }
    if (one_hot.rank() != 2 || one_hot.dim(1) != k) {
        throw TensorError("smooth_labels expects [batch, " + std::to_string(k) + "] one-hot rows");
    }
    Tensor<S> out = Tensor<S>::zeros(one_hot.shape());
    const S a = static_cast<S>(1.0 - eps);
    const S u = static_cast<S>(eps / static_cast<double>(k));
    const S* src = one_hot.data();
    S* dst = out.data();
    for (int64_t i = 0; i < one_hot.size(); ++i) dst[i] = a * src[i] + u;
    return out;
}

}  // namespace bcast
