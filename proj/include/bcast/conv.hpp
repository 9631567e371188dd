#pragma once

#include <limits>

#include "bcast/ops.hpp"

// 2-D convolution and pooling on NCHW tensors (H = mel bins, W = time
// frames). Convolutions run as im2col + GEMM; the patch matrix is recomputed
// in the backward pass instead of cached, trading ~20% compute for not
// holding one patch buffer per conv per batch on the tape.

namespace bcast {

enum class Padding { Same, Valid };

struct ConvGeom {
    int64_t oh = 0, ow = 0;   // output spatial dims
    int64_t ph = 0, pw = 0;   // padding before (top/left)
};

inline ConvGeom conv_geometry(int64_t h, int64_t w, int64_t kh, int64_t kw, int64_t stride,
                              Padding pad, const char* what) {
    if (stride < 1) throw TensorError(std::string(what) + ": stride must be positive");
    ConvGeom g;
    if (pad == Padding::Same) {
        g.oh = (h + stride - 1) / stride;
        g.ow = (w + stride - 1) / stride;
        int64_t th = std::max<int64_t>((g.oh - 1) * stride + kh - h, 0);
        int64_t tw = std::max<int64_t>((g.ow - 1) * stride + kw - w, 0);
        g.ph = th / 2;
        g.pw = tw / 2;
    } else {
        if (h < kh || w < kw) {
            throw TensorError(std::string(what) + ": window " + std::to_string(kh) + "x" +
                              std::to_string(kw) + " larger than input " + std::to_string(h) + "x" +
                              std::to_string(w));
        }
        g.oh = (h - kh) / stride + 1;
        g.ow = (w - kw) / stride + 1;
    }
    return g;
}

namespace detail {

// gather conv patches of sample `x_n` (C x H x W) into cols ((C*kh*kw) x (oh*ow))
template <class S>
void im2col(const S* x, int64_t c, int64_t h, int64_t w, int64_t kh, int64_t kw, int64_t stride,
            const ConvGeom& g, S* cols) {
    const int64_t ohw = g.oh * g.ow;
    for (int64_t ch = 0; ch < c; ++ch) {
        for (int64_t u = 0; u < kh; ++u) {
            for (int64_t v = 0; v < kw; ++v) {
                S* row = cols + ((ch * kh + u) * kw + v) * ohw;
                for (int64_t i = 0; i < g.oh; ++i) {
                    int64_t src_i = i * stride + u - g.ph;
                    if (src_i < 0 || src_i >= h) {
                        std::fill(row + i * g.ow, row + (i + 1) * g.ow, S(0));
                        continue;
                    }
                    const S* src = x + (ch * h + src_i) * w;
                    for (int64_t j = 0; j < g.ow; ++j) {
                        int64_t src_j = j * stride + v - g.pw;
                        row[i * g.ow + j] = (src_j >= 0 && src_j < w) ? src[src_j] : S(0);
                    }
                }
            }
        }
    }
}

// scatter-add cols back into dx (C x H x W)
template <class S>
void col2im(const S* cols, int64_t c, int64_t h, int64_t w, int64_t kh, int64_t kw, int64_t stride,
            const ConvGeom& g, S* dx) {
    const int64_t ohw = g.oh * g.ow;
    for (int64_t ch = 0; ch < c; ++ch) {
        for (int64_t u = 0; u < kh; ++u) {
            for (int64_t v = 0; v < kw; ++v) {
                const S* row = cols + ((ch * kh + u) * kw + v) * ohw;
                for (int64_t i = 0; i < g.oh; ++i) {
                    int64_t src_i = i * stride + u - g.ph;
                    if (src_i < 0 || src_i >= h) continue;
                    S* dst = dx + (ch * h + src_i) * w;
                    for (int64_t j = 0; j < g.ow; ++j) {
                        int64_t src_j = j * stride + v - g.pw;
                        if (src_j >= 0 && src_j < w) dst[src_j] += row[i * g.ow + j];
                    }
                }
            }
        }
    }
}

}  // namespace detail

// cross-correlation plus per-output-channel bias; w is [out, in, kh, kw]
template <class S>
Tensor<S> conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b, int64_t stride,
                 Padding pad) {
    if (x.rank() != 4 || w.rank() != 4) {
        throw TensorError("conv2d expects NCHW input and OIHW weights, got " +
                          shape_str(x.shape()) + " and " + shape_str(w.shape()));
    }
    if (x.dim(1) != w.dim(1)) {
        throw TensorError("conv2d channel mismatch: input " + shape_str(x.shape()) +
                          " vs weights " + shape_str(w.shape()));
    }
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), ww = x.dim(3);
    const int64_t o = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    if (b.defined() && b.size() != o) {
        throw TensorError("conv2d bias size " + shape_str(b.shape()) + " does not match " +
                          std::to_string(o) + " output channels");
    }
    ConvGeom g = conv_geometry(h, ww, kh, kw, stride, pad, "conv2d");
    const int64_t ohw = g.oh * g.ow;
    const int64_t kdim = c * kh * kw;
    Tensor<S> out = Tensor<S>::zeros({n, o, g.oh, g.ow});

    const bool pointwise = (kh == 1 && kw == 1 && stride == 1 && g.ph == 0 && g.pw == 0);
    std::vector<S> cols;
    if (!pointwise) cols.resize(static_cast<size_t>(kdim * ohw));
    ECMap<S> W(w.data(), o, kdim);
    for (int64_t i = 0; i < n; ++i) {
        const S* xi = x.data() + i * c * h * ww;
        EMap<S> Y(out.data() + i * o * ohw, o, ohw);
        if (pointwise) {
            ECMap<S> X(xi, c, ohw);
            Y.noalias() = W * X;
        } else {
            detail::im2col(xi, c, h, ww, kh, kw, stride, g, cols.data());
            ECMap<S> X(cols.data(), kdim, ohw);
            Y.noalias() = W * X;
        }
        if (b.defined()) {
            const S* pb = b.data();
            S* py = out.data() + i * o * ohw;
            for (int64_t ch = 0; ch < o; ++ch)
                for (int64_t s = 0; s < ohw; ++s) py[ch * ohw + s] += pb[ch];
        }
    }

    bool track = Tape<S>::active() &&
                 (x.requires_grad() || w.requires_grad() || (b.defined() && b.requires_grad()));
    if (track) {
        out.set_requires_grad(true);
        Tensor<S> gx = x, gw = w, gb = b, go = out;
        Tape<S>::active()->record([gx, gw, gb, go, stride, g, pointwise]() mutable {
            const int64_t n = gx.dim(0), c = gx.dim(1), h = gx.dim(2), ww = gx.dim(3);
            const int64_t o = gw.dim(0), kh = gw.dim(2), kw = gw.dim(3);
            const int64_t ohw = g.oh * g.ow;
            const int64_t kdim = c * kh * kw;
            ECMap<S> W(gw.data(), o, kdim);
            std::vector<S> cols, dcols;
            if (!pointwise) {
                cols.resize(static_cast<size_t>(kdim * ohw));
                dcols.resize(static_cast<size_t>(kdim * ohw));
            }
            for (int64_t i = 0; i < n; ++i) {
                ECMap<S> dY(go.grad().data() + i * o * ohw, o, ohw);
                const S* xi = gx.data() + i * c * h * ww;
                if (gw.requires_grad()) {
                    EMap<S> dW(gw.grad().data(), o, kdim);
                    if (pointwise) {
                        ECMap<S> X(xi, c, ohw);
                        dW.noalias() += dY * X.transpose();
                    } else {
                        detail::im2col(xi, c, h, ww, kh, kw, stride, g, cols.data());
                        ECMap<S> X(cols.data(), kdim, ohw);
                        dW.noalias() += dY * X.transpose();
                    }
                }
                if (gx.requires_grad()) {
                    if (pointwise) {
                        EMap<S> dX(gx.grad().data() + i * c * h * ww, c, ohw);
                        dX.noalias() += W.transpose() * dY;
                    } else {
                        EMap<S> dC(dcols.data(), kdim, ohw);
                        dC.noalias() = W.transpose() * dY;
                        detail::col2im(dcols.data(), c, h, ww, kh, kw, stride, g,
                                       gx.grad().data() + i * c * h * ww);
                    }
                }
                if (gb.defined() && gb.requires_grad()) {
                    auto& bg = gb.grad();
                    const S* dy = go.grad().data() + i * o * ohw;
                    for (int64_t ch = 0; ch < o; ++ch) {
                        double acc = 0.0;
                        for (int64_t s = 0; s < ohw; ++s) acc += static_cast<double>(dy[ch * ohw + s]);
                        bg[static_cast<size_t>(ch)] += static_cast<S>(acc);
                    }
                }
            }
        });
    }
    return out;
}

// per-channel spatial convolution: w is [C,1,kh,kw], channel c of the output
// sees only channel c of the input
template <class S>
Tensor<S> depthwise_conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b,
                           int64_t stride, Padding pad) {
    if (x.rank() != 4 || w.rank() != 4 || w.dim(1) != 1) {
        throw TensorError("depthwise_conv2d expects NCHW input and [C,1,kh,kw] weights");
    }
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), ww = x.dim(3);
    const int64_t kh = w.dim(2), kw = w.dim(3);
    if (w.dim(0) != c) {
        throw TensorError("depthwise_conv2d channel mismatch: input " + shape_str(x.shape()) +
                          " vs weights " + shape_str(w.shape()));
    }
    ConvGeom g = conv_geometry(h, ww, kh, kw, stride, pad, "depthwise_conv2d");
    const int64_t ohw = g.oh * g.ow;
    Tensor<S> out = Tensor<S>::zeros({n, c, g.oh, g.ow});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t ch = 0; ch < c; ++ch) {
            const S* src = x.data() + (i * c + ch) * h * ww;
            const S* ker = w.data() + ch * kh * kw;
            const S bias = b.defined() ? b.value()[static_cast<size_t>(ch)] : S(0);
            S* dst = out.data() + (i * c + ch) * ohw;
            for (int64_t oi = 0; oi < g.oh; ++oi)
                for (int64_t oj = 0; oj < g.ow; ++oj) {
                    double acc = static_cast<double>(bias);
                    for (int64_t u = 0; u < kh; ++u) {
                        int64_t si = oi * stride + u - g.ph;
                        if (si < 0 || si >= h) continue;
                        for (int64_t v = 0; v < kw; ++v) {
                            int64_t sj = oj * stride + v - g.pw;
                            if (sj < 0 || sj >= ww) continue;
                            acc += static_cast<double>(ker[u * kw + v]) *
                                   static_cast<double>(src[si * ww + sj]);
                        }
                    }
                    dst[oi * g.ow + oj] = static_cast<S>(acc);
                }
        }

    bool track = Tape<S>::active() &&
                 (x.requires_grad() || w.requires_grad() || (b.defined() && b.requires_grad()));
    if (track) {
        out.set_requires_grad(true);
        Tensor<S> gx = x, gw = w, gb = b, go = out;
        Tape<S>::active()->record([gx, gw, gb, go, stride, g]() mutable {
            const int64_t n = gx.dim(0), c = gx.dim(1), h = gx.dim(2), ww = gx.dim(3);
            const int64_t kh = gw.dim(2), kw = gw.dim(3);
            const int64_t ohw = g.oh * g.ow;
            for (int64_t i = 0; i < n; ++i)
                for (int64_t ch = 0; ch < c; ++ch) {
                    const S* src = gx.data() + (i * c + ch) * h * ww;
                    const S* ker = gw.data() + ch * kh * kw;
                    const S* dy = go.grad().data() + (i * c + ch) * ohw;
                    for (int64_t oi = 0; oi < g.oh; ++oi)
                        for (int64_t oj = 0; oj < g.ow; ++oj) {
                            const S gval = dy[oi * g.ow + oj];
                            if (gb.defined() && gb.requires_grad())
                                gb.grad()[static_cast<size_t>(ch)] += gval;
                            for (int64_t u = 0; u < kh; ++u) {
                                int64_t si = oi * stride + u - g.ph;
                                if (si < 0 || si >= h) continue;
                                for (int64_t v = 0; v < kw; ++v) {
                                    int64_t sj = oj * stride + v - g.pw;
                                    if (sj < 0 || sj >= ww) continue;
                                    if (gw.requires_grad())
                                        gw.grad()[static_cast<size_t>(ch * kh * kw + u * kw + v)] +=
                                            gval * src[si * ww + sj];
                                    if (gx.requires_grad())
                                        gx.grad()[static_cast<size_t>((i * c + ch) * h * ww + si * ww + sj)] +=
                                            gval * ker[u * kw + v];
                                }
                            }
                        }
                }
        });
    }
    return out;
}

// ---- pooling -----------------------------------------------------------

template <class S>
Tensor<S> max_pool(const Tensor<S>& x, int64_t k, int64_t stride, Padding pad) {
    if (x.rank() != 4) throw TensorError("max_pool expects NCHW input");
    if (k < 1) throw TensorError("max_pool window must be >= 1");
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    ConvGeom g = conv_geometry(h, w, k, k, stride, pad, "max_pool");
    const int64_t ohw = g.oh * g.ow;
    Tensor<S> out = Tensor<S>::zeros({n, c, g.oh, g.ow});
    auto argmax = std::make_shared<std::vector<int32_t>>(static_cast<size_t>(n * c * ohw));
    const S lowest = std::numeric_limits<S>::lowest();
    for (int64_t nc = 0; nc < n * c; ++nc) {
        const S* src = x.data() + nc * h * w;
        S* dst = out.data() + nc * ohw;
        int32_t* am = argmax->data() + nc * ohw;
        for (int64_t i = 0; i < g.oh; ++i)
            for (int64_t j = 0; j < g.ow; ++j) {
                S best = lowest;
                int32_t best_at = -1;
                for (int64_t u = 0; u < k; ++u) {
                    int64_t si = i * stride + u - g.ph;
                    if (si < 0 || si >= h) continue;
                    for (int64_t v = 0; v < k; ++v) {
                        int64_t sj = j * stride + v - g.pw;
                        if (sj < 0 || sj >= w) continue;
                        S val = src[si * w + sj];
                        if (val > best) {
                            best = val;
                            best_at = static_cast<int32_t>(si * w + sj);
                        }
                    }
                }
                dst[i * g.ow + j] = best;
                am[i * g.ow + j] = best_at;
            }
    }
    if (tracking<S>(x)) {
        out.set_requires_grad(true);
        Tensor<S> gx = x, go = out;
        Tape<S>::active()->record([gx, go, argmax, ohw = g.oh * g.ow]() mutable {
            if (!gx.requires_grad()) return;
            const int64_t hw = gx.dim(2) * gx.dim(3);
            auto& xg = gx.grad();
            const auto& og = go.grad();
            for (int64_t nc = 0; nc < gx.dim(0) * gx.dim(1); ++nc) {
                const int32_t* am = argmax->data() + nc * ohw;
                for (int64_t s = 0; s < ohw; ++s) {
                    if (am[s] >= 0) xg[static_cast<size_t>(nc * hw + am[s])] += og[static_cast<size_t>(nc * ohw + s)];
                }
            }
        });
    }
    return out;
}

// full windows only (valid padding)
template <class S>
Tensor<S> avg_pool(const Tensor<S>& x, int64_t k, int64_t stride) {
    if (x.rank() != 4) throw TensorError("avg_pool expects NCHW input");
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    ConvGeom g = conv_geometry(h, w, k, k, stride, Padding::Valid, "avg_pool");
    const int64_t ohw = g.oh * g.ow;
    Tensor<S> out = Tensor<S>::zeros({n, c, g.oh, g.ow});
    const S inv = static_cast<S>(1.0 / static_cast<double>(k * k));
    for (int64_t nc = 0; nc < n * c; ++nc) {
        const S* src = x.data() + nc * h * w;
        S* dst = out.data() + nc * ohw;
        for (int64_t i = 0; i < g.oh; ++i)
            for (int64_t j = 0; j < g.ow; ++j) {
                double acc = 0.0;
                for (int64_t u = 0; u < k; ++u)
                    for (int64_t v = 0; v < k; ++v)
                        acc += static_cast<double>(src[(i * stride + u) * w + (j * stride + v)]);
                dst[i * g.ow + j] = static_cast<S>(acc) * inv;
            }
    }
    if (tracking<S>(x)) {
        out.set_requires_grad(true);
        Tensor<S> gx = x, go = out;
        Tape<S>::active()->record([gx, go, k, stride, g, inv]() mutable {
            if (!gx.requires_grad()) return;
            const int64_t h = gx.dim(2), w = gx.dim(3);
            const int64_t ohw = g.oh * g.ow;
            auto& xg = gx.grad();
            const auto& og = go.grad();
            for (int64_t nc = 0; nc < gx.dim(0) * gx.dim(1); ++nc) {
                S* dst = xg.data() + nc * h * w;
                const S* src = og.data() + nc * ohw;
                for (int64_t i = 0; i < g.oh; ++i)
                    for (int64_t j = 0; j < g.ow; ++j) {
                        S gval = src[i * g.ow + j] * inv;
                        for (int64_t u = 0; u < k; ++u)
                            for (int64_t v = 0; v < k; ++v)
                                dst[(i * stride + u) * w + (j * stride + v)] += gval;
                    }
            }
        });
    }
    return out;
}

// mean over all spatial positions, NCHW -> NC
template <class S>
Tensor<S> global_avg_pool(const Tensor<S>& x) {
    if (x.rank() != 4) throw TensorError("global_avg_pool expects NCHW input");
    const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    Tensor<S> out = Tensor<S>::zeros({n, c});
    const S* src = x.data();
    S* dst = out.data();
    for (int64_t nc = 0; nc < n * c; ++nc) {
        double acc = 0.0;
        for (int64_t s = 0; s < hw; ++s) acc += static_cast<double>(src[nc * hw + s]);
        dst[nc] = static_cast<S>(acc / static_cast<double>(hw));
    }
    if (tracking<S>(x)) {
        out.set_requires_grad(true);
        Tensor<S> gx = x, go = out;
        Tape<S>::active()->record([gx, go, hw]() mutable {
            if (!gx.requires_grad()) return;
            auto& xg = gx.grad();
            const auto& og = go.grad();
            const S inv = static_cast<S>(1.0 / static_cast<double>(hw));
            for (int64_t nc = 0; nc < go.size(); ++nc) {
                S gval = og[static_cast<size_t>(nc)] * inv;
                for (int64_t s = 0; s < hw; ++s) xg[static_cast<size_t>(nc * hw + s)] += gval;
            }
        });
    }
    return out;
}

template <class S>
Tensor<S> global_max_pool(const Tensor<S>& x) {
    if (x.rank() != 4) throw TensorError("global_max_pool expects NCHW input");
    const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    Tensor<S> out = Tensor<S>::zeros({n, c});
    auto argmax = std::make_shared<std::vector<int32_t>>(static_cast<size_t>(n * c));
    const S* src = x.data();
    S* dst = out.data();
    for (int64_t nc = 0; nc < n * c; ++nc) {
        S best = src[nc * hw];
        int32_t at = 0;
        for (int64_t s = 1; s < hw; ++s) {
            if (src[nc * hw + s] > best) {
                best = src[nc * hw + s];
                at = static_cast<int32_t>(s);
            }
        }
        dst[nc] = best;
        (*argmax)[static_cast<size_t>(nc)] = at;
    }
    if (tracking<S>(x)) {
        out.set_requires_grad(true);
        Tensor<S> gx = x, go = out;
        Tape<S>::active()->record([gx, go, argmax, hw]() mutable {
            if (!gx.requires_grad()) return;
            auto& xg = gx.grad();
            const auto& og = go.grad();
            for (int64_t nc = 0; nc < go.size(); ++nc)
                xg[static_cast<size_t>(nc * hw + (*argmax)[static_cast<size_t>(nc)])] +=
                    og[static_cast<size_t>(nc)];
        });
    }
    return out;
}

}  // namespace bcast
