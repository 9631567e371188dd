#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "bcast/tensor.hpp"

// Primitive differentiable ops. Each op computes its result eagerly and, when
// a tape is active and an input requires gradients, records a closure that
// accumulates input gradients from the output gradient.

namespace bcast {

template <class S>
using EMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using EMap = Eigen::Map<EMat<S>>;
template <class S>
using ECMap = Eigen::Map<const EMat<S>>;

// ---- broadcasting ------------------------------------------------------

// numpy alignment: trailing dims must match or be 1
inline Shape broadcast_shape(const Shape& a, const Shape& b) {
    size_t r = std::max(a.size(), b.size());
    Shape out(r, 1);
    for (size_t i = 0; i < r; ++i) {
        int64_t da = i < a.size() ? a[a.size() - 1 - i] : 1;
        int64_t db = i < b.size() ? b[b.size() - 1 - i] : 1;
        if (da != db && da != 1 && db != 1) {
            throw TensorError("shapes not broadcastable: " + shape_str(a) + " vs " + shape_str(b));
        }
        out[r - 1 - i] = std::max(da, db);
    }
    return out;
}

// strides of `s` expanded to rank r, 0 on broadcast axes
inline std::vector<int64_t> broadcast_strides(const Shape& s, size_t r) {
    std::vector<int64_t> st(r, 0);
    std::vector<int64_t> own(s.size());
    int64_t acc = 1;
    for (size_t i = s.size(); i-- > 0;) {
        own[i] = acc;
        acc *= s[i];
    }
    for (size_t i = 0; i < s.size(); ++i) {
        st[r - s.size() + i] = (s[i] == 1) ? 0 : own[i];
    }
    return st;
}

namespace detail {

// sum `src` (shape `from`) into `dst` (shape `to`), reducing broadcast axes
template <class S>
void reduce_into(const std::vector<S>& src, const Shape& from, std::vector<S>& dst, const Shape& to) {
    if (from == to) {
        for (size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
        return;
    }
    size_t r = from.size();
    auto st = broadcast_strides(to, r);
    std::vector<int64_t> idx(r, 0);
    int64_t n = numel(from);
    int64_t off = 0;
    for (int64_t flat = 0; flat < n; ++flat) {
        dst[static_cast<size_t>(off)] += src[static_cast<size_t>(flat)];
        for (size_t ax = r; ax-- > 0;) {
            if (++idx[ax] < from[ax]) {
                off += st[ax];
                break;
            }
            idx[ax] = 0;
            off -= st[ax] * (from[ax] - 1);
        }
    }
}

template <class S, class Fwd, class DA, class DB>
Tensor<S> binary_op(const Tensor<S>& a, const Tensor<S>& b, Fwd f, DA da, DB db) {
    Shape os = broadcast_shape(a.shape(), b.shape());
    Tensor<S> out = Tensor<S>::zeros(os);
    int64_t n = out.size();
    const size_t r = os.size();

    if (a.shape() == os && b.shape() == os) {
        const S* pa = a.data();
        const S* pb = b.data();
        S* po = out.data();
        for (int64_t i = 0; i < n; ++i) po[i] = f(pa[i], pb[i]);
    } else {
        auto sa = broadcast_strides(a.shape(), r);
        auto sb = broadcast_strides(b.shape(), r);
        std::vector<int64_t> idx(r, 0);
        int64_t oa = 0, ob = 0;
        const S* pa = a.data();
        const S* pb = b.data();
        S* po = out.data();
        for (int64_t flat = 0; flat < n; ++flat) {
            po[flat] = f(pa[oa], pb[ob]);
            for (size_t ax = r; ax-- > 0;) {
                if (++idx[ax] < os[ax]) {
                    oa += sa[ax];
                    ob += sb[ax];
                    break;
                }
                idx[ax] = 0;
                oa -= sa[ax] * (os[ax] - 1);
                ob -= sb[ax] * (os[ax] - 1);
            }
        }
    }

    if (tracking<S>(a, b)) {
        out.set_requires_grad(true);
        Tensor<S> ga = a, gb = b, go = out;
        Tape<S>::active()->record([ga, gb, go, da, db]() mutable {
            const auto& og = go.grad();
            const Shape& os2 = go.shape();
            int64_t n2 = go.size();
            size_t r2 = os2.size();
            std::vector<S> tmp(static_cast<size_t>(n2));
            auto sa = broadcast_strides(ga.shape(), r2);
            auto sb = broadcast_strides(gb.shape(), r2);
            std::vector<int64_t> idx(r2, 0);
            int64_t oa = 0, ob = 0;
            const S* pa = ga.data();
            const S* pb = gb.data();
            if (ga.requires_grad()) {
                std::vector<int64_t> ix(r2, 0);
                int64_t qa = 0, qb = 0;
                for (int64_t flat = 0; flat < n2; ++flat) {
                    tmp[static_cast<size_t>(flat)] = og[static_cast<size_t>(flat)] * da(pa[qa], pb[qb]);
                    for (size_t ax = r2; ax-- > 0;) {
                        if (++ix[ax] < os2[ax]) { qa += sa[ax]; qb += sb[ax]; break; }
                        ix[ax] = 0;
                        qa -= sa[ax] * (os2[ax] - 1);
                        qb -= sb[ax] * (os2[ax] - 1);
                    }
                }
                reduce_into(tmp, os2, ga.grad(), ga.shape());
            }
            if (gb.requires_grad()) {
                std::fill(idx.begin(), idx.end(), 0);
                oa = ob = 0;
                for (int64_t flat = 0; flat < n2; ++flat) {
                    tmp[static_cast<size_t>(flat)] = og[static_cast<size_t>(flat)] * db(pa[oa], pb[ob]);
                    for (size_t ax = r2; ax-- > 0;) {
                        if (++idx[ax] < os2[ax]) { oa += sa[ax]; ob += sb[ax]; break; }
                        idx[ax] = 0;
                        oa -= sa[ax] * (os2[ax] - 1);
                        ob -= sb[ax] * (os2[ax] - 1);
                    }
                }
                reduce_into(tmp, os2, gb.grad(), gb.shape());
            }
        });
    }
    return out;
}

template <class S, class Fwd, class Dx>
Tensor<S> unary_op(const Tensor<S>& a, Fwd f, Dx dfdx) {
    Tensor<S> out = Tensor<S>::zeros(a.shape());
    const S* pa = a.data();
    S* po = out.data();
    int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) po[i] = f(pa[i]);
    if (tracking<S>(a)) {
        out.set_requires_grad(true);
        Tensor<S> ga = a, go = out;
        Tape<S>::active()->record([ga, go, dfdx]() mutable {
            if (!ga.requires_grad()) return;
            auto& ag = ga.grad();
            const auto& og = go.grad();
            const S* px = ga.data();
            const S* py = go.data();
            for (size_t i = 0; i < ag.size(); ++i) ag[i] += og[i] * dfdx(px[i], py[i]);
        });
    }
    return out;
}

}  // namespace detail

// ---- elementwise -------------------------------------------------------

template <class S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
    return detail::binary_op(
        a, b, [](S x, S y) { return x + y; }, [](S, S) { return S(1); }, [](S, S) { return S(1); });
}

template <class S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
    return detail::binary_op(
        a, b, [](S x, S y) { return x - y; }, [](S, S) { return S(1); }, [](S, S) { return S(-1); });
}

template <class S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
    return detail::binary_op(
        a, b, [](S x, S y) { return x * y; }, [](S, S y) { return y; }, [](S x, S) { return x; });
}

template <class S>
Tensor<S> div(const Tensor<S>& a, const Tensor<S>& b) {
    return detail::binary_op(
        a, b, [](S x, S y) { return x / y; }, [](S, S y) { return S(1) / y; },
        [](S x, S y) { return -x / (y * y); });
}

template <class S>
Tensor<S> scale(const Tensor<S>& a, S c) {
    return detail::unary_op(
        a, [c](S x) { return c * x; }, [c](S, S) { return c; });
}

template <class S>
Tensor<S> add_scalar(const Tensor<S>& a, S c) {
    return detail::unary_op(
        a, [c](S x) { return x + c; }, [](S, S) { return S(1); });
}

template <class S>
Tensor<S> exp(const Tensor<S>& a) {
    return detail::unary_op(
        a, [](S x) { return std::exp(x); }, [](S, S y) { return y; });
}

template <class S>
Tensor<S> log(const Tensor<S>& a) {
    return detail::unary_op(
        a, [](S x) { return std::log(x); }, [](S x, S) { return S(1) / x; });
}

// ---- activations -------------------------------------------------------

template <class S>
Tensor<S> relu(const Tensor<S>& a) {
    return detail::unary_op(
        a, [](S x) { return x > S(0) ? x : S(0); },
        [](S x, S) { return x > S(0) ? S(1) : S(0); });
}

inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

template <class S>
Tensor<S> selu(const Tensor<S>& a) {
    const S l = static_cast<S>(kSeluLambda);
    const S la = static_cast<S>(kSeluLambda * kSeluAlpha);
    return detail::unary_op(
        a, [l, la](S x) { return x > S(0) ? l * x : la * (std::exp(x) - S(1)); },
        [l, la](S x, S) { return x > S(0) ? l : la * std::exp(x); });
}

template <class S>
Tensor<S> sigmoid(const Tensor<S>& a) {
    return detail::unary_op(
        a,
        [](S x) {
            // stable in both tails
            return x >= S(0) ? S(1) / (S(1) + std::exp(-x)) : std::exp(x) / (S(1) + std::exp(x));
        },
        [](S, S y) { return y * (S(1) - y); });
}

template <class S>
Tensor<S> tanh(const Tensor<S>& a) {
    return detail::unary_op(
        a, [](S x) { return std::tanh(x); }, [](S, S y) { return S(1) - y * y; });
}

// ---- matmul ------------------------------------------------------------

// c = op(a) * op(b) for 2-D tensors; trans flags fold the usual NN
// transposes into the GEMM instead of materializing them.
template <class S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b, bool trans_a = false, bool trans_b = false) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw TensorError("matmul expects rank-2 tensors, got " + shape_str(a.shape()) + " and " +
                          shape_str(b.shape()));
    }
    int64_t m = trans_a ? a.dim(1) : a.dim(0);
    int64_t ka = trans_a ? a.dim(0) : a.dim(1);
    int64_t kb = trans_b ? b.dim(1) : b.dim(0);
    int64_t n = trans_b ? b.dim(0) : b.dim(1);
    if (ka != kb) {
        throw TensorError("matmul inner dimensions disagree: " + shape_str(a.shape()) +
                          (trans_a ? "^T" : "") + " * " + shape_str(b.shape()) + (trans_b ? "^T" : ""));
    }
    Tensor<S> out = Tensor<S>::zeros({m, n});
    ECMap<S> A(a.data(), a.dim(0), a.dim(1));
    ECMap<S> B(b.data(), b.dim(0), b.dim(1));
    EMap<S> C(out.data(), m, n);
    if (!trans_a && !trans_b) C.noalias() = A * B;
    else if (trans_a && !trans_b) C.noalias() = A.transpose() * B;
    else if (!trans_a && trans_b) C.noalias() = A * B.transpose();
    else C.noalias() = A.transpose() * B.transpose();

    if (tracking<S>(a, b)) {
        out.set_requires_grad(true);
        Tensor<S> ga = a, gb = b, go = out;
        Tape<S>::active()->record([ga, gb, go, trans_a, trans_b]() mutable {
            ECMap<S> A(ga.data(), ga.dim(0), ga.dim(1));
            ECMap<S> B(gb.data(), gb.dim(0), gb.dim(1));
            ECMap<S> dC(go.grad().data(), go.dim(0), go.dim(1));
            if (ga.requires_grad()) {
                EMap<S> dA(ga.grad().data(), ga.dim(0), ga.dim(1));
                if (!trans_a && !trans_b) dA.noalias() += dC * B.transpose();
                else if (!trans_a && trans_b) dA.noalias() += dC * B;
                else if (trans_a && !trans_b) dA.noalias() += B * dC.transpose();
                else dA.noalias() += B.transpose() * dC.transpose();
            }
            if (gb.requires_grad()) {
                EMap<S> dB(gb.grad().data(), gb.dim(0), gb.dim(1));
                if (!trans_a && !trans_b) dB.noalias() += A.transpose() * dC;
                else if (!trans_a && trans_b) dB.noalias() += dC.transpose() * A;
                else if (trans_a && !trans_b) dB.noalias() += A * dC;
                else dB.noalias() += dC.transpose() * A.transpose();
            }
        });
    }
    return out;
}

// ---- reductions --------------------------------------------------------

template <class S>
Tensor<S> sum_all(const Tensor<S>& a) {
    double acc = 0.0;
    const S* pa = a.data();
    for (int64_t i = 0; i < a.size(); ++i) acc += static_cast<double>(pa[i]);
    Tensor<S> out = Tensor<S>::scalar(static_cast<S>(acc));
    if (tracking<S>(a)) {
        out.set_requires_grad(true);
        Tensor<S> ga = a, go = out;
        Tape<S>::active()->record([ga, go]() mutable {
            if (!ga.requires_grad()) return;
            S g = go.grad()[0];
            auto& ag = ga.grad();
            for (auto& v : ag) v += g;
        });
    }
    return out;
}

template <class S>
Tensor<S> mean_all(const Tensor<S>& a) {
    Tensor<S> s = sum_all(a);
    return scale(s, static_cast<S>(1.0 / static_cast<double>(a.size())));
}

// mean over one axis, keeping it as size 1
template <class S>
Tensor<S> mean_axis_keep(const Tensor<S>& a, int axis) {
    Shape os = a.shape();
    int64_t k = os[static_cast<size_t>(axis)];
    os[static_cast<size_t>(axis)] = 1;
    Tensor<S> out = Tensor<S>::zeros(os);
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= a.dim(i);
    for (int i = axis + 1; i < a.rank(); ++i) inner *= a.dim(i);
    const S* pa = a.data();
    S* po = out.data();
    const S inv = static_cast<S>(1.0 / static_cast<double>(k));
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t j = 0; j < k; ++j) {
            const S* src = pa + (o * k + j) * inner;
            S* dst = po + o * inner;
            for (int64_t i = 0; i < inner; ++i) dst[i] += src[i] * inv;
        }
    if (tracking<S>(a)) {
        out.set_requires_grad(true);
        Tensor<S> ga = a, go = out;
        Tape<S>::active()->record([ga, go, outer, inner, k, inv]() mutable {
            if (!ga.requires_grad()) return;
            auto& ag = ga.grad();
            const auto& og = go.grad();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t j = 0; j < k; ++j) {
                    S* dst = ag.data() + (o * k + j) * inner;
                    const S* src = og.data() + o * inner;
                    for (int64_t i = 0; i < inner; ++i) dst[i] += src[i] * inv;
                }
        });
    }
    return out;
}

// ---- shape ops ---------------------------------------------------------

template <class S>
Tensor<S> reshape(const Tensor<S>& a, Shape shape) {
    if (numel(shape) != a.size()) {
        throw TensorError("reshape " + shape_str(a.shape()) + " -> " + shape_str(shape) +
                          " changes element count");
    }
    Tensor<S> out = Tensor<S>::from(std::move(shape), a.value());
    if (tracking<S>(a)) {
        out.set_requires_grad(true);
        Tensor<S> ga = a, go = out;
        Tape<S>::active()->record([ga, go]() mutable {
            if (!ga.requires_grad()) return;
            auto& ag = ga.grad();
            const auto& og = go.grad();
            for (size_t i = 0; i < ag.size(); ++i) ag[i] += og[i];
        });
    }
    return out;
}

// tile axes of size 1 up to `shape`; backward sums back over them
template <class S>
Tensor<S> broadcast_to(const Tensor<S>& a, const Shape& shape) {
    if (broadcast_shape(a.shape(), shape) != shape) {
        throw TensorError("cannot broadcast " + shape_str(a.shape()) + " to " + shape_str(shape));
    }
    Tensor<S> out = Tensor<S>::zeros(shape);
    size_t r = shape.size();
    auto sa = broadcast_strides(a.shape(), r);
    std::vector<int64_t> idx(r, 0);
    int64_t oa = 0;
    const S* pa = a.data();
    S* po = out.data();
    int64_t n = out.size();
    for (int64_t flat = 0; flat < n; ++flat) {
        po[flat] = pa[oa];
        for (size_t ax = r; ax-- > 0;) {
            if (++idx[ax] < shape[ax]) { oa += sa[ax]; break; }
            idx[ax] = 0;
            oa -= sa[ax] * (shape[ax] - 1);
        }
    }
    if (tracking<S>(a)) {
        out.set_requires_grad(true);
        Tensor<S> ga = a, go = out;
        Tape<S>::active()->record([ga, go]() mutable {
            if (!ga.requires_grad()) return;
            detail::reduce_into(go.grad(), go.shape(), ga.grad(), ga.shape());
        });
    }
    return out;
}

// ---- concat / slice along axis 1 (channels) ----------------------------

template <class S>
Tensor<S> concat_axis(const std::vector<Tensor<S>>& parts, int axis) {
    if (parts.empty()) throw TensorError("concat of zero tensors");
    if (parts.size() == 1) return parts[0];
    const Shape& s0 = parts[0].shape();
    Shape os = s0;
    int64_t total = 0;
    for (const auto& p : parts) {
        if (p.rank() != static_cast<int>(s0.size())) {
            throw TensorError("concat rank mismatch: " + shape_str(s0) + " vs " + shape_str(p.shape()));
        }
        for (int i = 0; i < p.rank(); ++i) {
            if (i != axis && p.dim(i) != s0[static_cast<size_t>(i)]) {
                throw TensorError("concat axis " + std::to_string(axis) + " dim mismatch: " +
                                  shape_str(s0) + " vs " + shape_str(p.shape()));
            }
        }
        total += p.dim(axis);
    }
    os[static_cast<size_t>(axis)] = total;
    Tensor<S> out = Tensor<S>::zeros(os);

    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s0[static_cast<size_t>(i)];
    for (size_t i = static_cast<size_t>(axis) + 1; i < s0.size(); ++i) inner *= s0[i];

    int64_t off = 0;
    for (const auto& p : parts) {
        int64_t pa = p.dim(axis);
        const S* src = p.data();
        S* dst = out.data();
        for (int64_t o = 0; o < outer; ++o) {
            std::copy(src + o * pa * inner, src + (o + 1) * pa * inner,
                      dst + (o * total + off) * inner);
        }
        off += pa;
    }

    bool any_grad = false;
    for (const auto& p : parts) any_grad = any_grad || p.requires_grad();
    if (Tape<S>::active() && any_grad) {
        out.set_requires_grad(true);
        std::vector<Tensor<S>> gp = parts;
        Tensor<S> go = out;
        Tape<S>::active()->record([gp, go, axis, outer, inner, total]() mutable {
            const auto& og = go.grad();
            int64_t off2 = 0;
            for (auto& p : gp) {
                int64_t pa = p.dim(axis);
                if (p.requires_grad()) {
                    auto& pg = p.grad();
                    for (int64_t o = 0; o < outer; ++o) {
                        const S* src = og.data() + (o * total + off2) * inner;
                        S* dst = pg.data() + o * pa * inner;
                        for (int64_t i = 0; i < pa * inner; ++i) dst[i] += src[i];
                    }
                }
                off2 += pa;
            }
        });
    }
    return out;
}

template <class S>
Tensor<S> concat_channels(const std::vector<Tensor<S>>& parts) {
    return concat_axis(parts, 1);
}

// slice [c0, c1) along axis 1
template <class S>
Tensor<S> slice_channels(const Tensor<S>& a, int64_t c0, int64_t c1) {
    if (a.rank() < 2 || c0 < 0 || c1 > a.dim(1) || c0 >= c1) {
        throw TensorError("bad channel slice [" + std::to_string(c0) + "," + std::to_string(c1) +
                          ") of " + shape_str(a.shape()));
    }
    Shape os = a.shape();
    os[1] = c1 - c0;
    Tensor<S> out = Tensor<S>::zeros(os);
    int64_t outer = a.dim(0);
    int64_t ca = a.dim(1);
    int64_t inner = a.size() / (outer * ca);
    const S* src = a.data();
    S* dst = out.data();
    for (int64_t o = 0; o < outer; ++o) {
        std::copy(src + (o * ca + c0) * inner, src + (o * ca + c1) * inner,
                  dst + o * (c1 - c0) * inner);
    }
    if (tracking<S>(a)) {
        out.set_requires_grad(true);
        Tensor<S> ga = a, go = out;
        Tape<S>::active()->record([ga, go, c0, c1, outer, ca, inner]() mutable {
            if (!ga.requires_grad()) return;
            auto& ag = ga.grad();
            const auto& og = go.grad();
            for (int64_t o = 0; o < outer; ++o) {
                const S* src = og.data() + o * (c1 - c0) * inner;
                S* dst = ag.data() + (o * ca + c0) * inner;
                for (int64_t i = 0; i < (c1 - c0) * inner; ++i) dst[i] += src[i];
            }
        });
    }
    return out;
}

// slice one position along the last axis: [..., t] with the axis dropped
template <class S>
Tensor<S> slice_last(const Tensor<S>& a, int64_t t) {
    int64_t w = a.dim(a.rank() - 1);
    if (t < 0 || t >= w) throw TensorError("slice_last index out of range");
    Shape os(a.shape().begin(), a.shape().end() - 1);
    Tensor<S> out = Tensor<S>::zeros(os);
    int64_t n = out.size();
    const S* src = a.data();
    S* dst = out.data();
    for (int64_t i = 0; i < n; ++i) dst[i] = src[i * w + t];
    if (tracking<S>(a)) {
        out.set_requires_grad(true);
        Tensor<S> ga = a, go = out;
        Tape<S>::active()->record([ga, go, t, w, n]() mutable {
            if (!ga.requires_grad()) return;
            auto& ag = ga.grad();
            const auto& og = go.grad();
            for (int64_t i = 0; i < n; ++i) ag[i * w + t] += og[i];
        });
    }
    return out;
}

// ---- softmax / cross-entropy -------------------------------------------

template <class S>
Tensor<S> softmax_rows(const Tensor<S>& logits) {
    if (logits.rank() != 2) throw TensorError("softmax expects [batch, classes]");
    int64_t n = logits.dim(0), k = logits.dim(1);
    Tensor<S> out = Tensor<S>::zeros(logits.shape());
    const S* pl = logits.data();
    S* po = out.data();
    for (int64_t i = 0; i < n; ++i) {
        const S* row = pl + i * k;
        S m = row[0];
        for (int64_t j = 1; j < k; ++j) m = std::max(m, row[j]);
        double z = 0.0;
        for (int64_t j = 0; j < k; ++j) z += std::exp(static_cast<double>(row[j] - m));
        for (int64_t j = 0; j < k; ++j)
            po[i * k + j] = static_cast<S>(std::exp(static_cast<double>(row[j] - m)) / z);
    }
    if (tracking<S>(logits)) {
        out.set_requires_grad(true);
        Tensor<S> ga = logits, go = out;
        Tape<S>::active()->record([ga, go, n, k]() mutable {
            if (!ga.requires_grad()) return;
            auto& ag = ga.grad();
            const auto& og = go.grad();
            const S* y = go.data();
            for (int64_t i = 0; i < n; ++i) {
                double dot = 0.0;
                for (int64_t j = 0; j < k; ++j) dot += static_cast<double>(og[i * k + j]) * y[i * k + j];
                for (int64_t j = 0; j < k; ++j)
                    ag[i * k + j] += y[i * k + j] * (og[i * k + j] - static_cast<S>(dot));
            }
        });
    }
    return out;
}

// mean over batch of -sum(target * log softmax(logits)); max-subtraction for
// stability; gradient wrt logits is (softmax - target)/batch
template <class S>
Tensor<S> softmax_cross_entropy(const Tensor<S>& logits, const Tensor<S>& target) {
    if (logits.rank() != 2 || logits.shape() != target.shape()) {
        throw TensorError("cross entropy shape mismatch: " + shape_str(logits.shape()) + " vs " +
                          shape_str(target.shape()));
    }
    int64_t n = logits.dim(0), k = logits.dim(1);
    const S* pl = logits.data();
    for (int64_t i = 0; i < n * k; ++i) {
        if (std::isnan(static_cast<double>(pl[i]))) throw TensorError("NaN logits in cross entropy");
    }
    const S* pt = target.data();
    std::vector<S> soft(static_cast<size_t>(n * k));
    double loss = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const S* row = pl + i * k;
        S m = row[0];
        for (int64_t j = 1; j < k; ++j) m = std::max(m, row[j]);
        double z = 0.0;
        for (int64_t j = 0; j < k; ++j) z += std::exp(static_cast<double>(row[j] - m));
        double lz = std::log(z);
        for (int64_t j = 0; j < k; ++j) {
            double logp = static_cast<double>(row[j] - m) - lz;
            soft[static_cast<size_t>(i * k + j)] = static_cast<S>(std::exp(logp));
            loss -= static_cast<double>(pt[i * k + j]) * logp;
        }
    }
    Tensor<S> out = Tensor<S>::scalar(static_cast<S>(loss / static_cast<double>(n)));
    if (tracking<S>(logits)) {
        out.set_requires_grad(true);
        Tensor<S> ga = logits, gt = target, go = out;
        auto smax = std::make_shared<std::vector<S>>(std::move(soft));
        Tape<S>::active()->record([ga, gt, go, smax, n, k]() mutable {
            if (!ga.requires_grad()) return;
            S g = go.grad()[0] / static_cast<S>(n);
            auto& ag = ga.grad();
            const S* pt2 = gt.data();
            for (int64_t i = 0; i < n * k; ++i)
                ag[static_cast<size_t>(i)] += g * ((*smax)[static_cast<size_t>(i)] - pt2[i]);
        });
    }
    return out;
}

// ---- dropout -----------------------------------------------------------

enum class Mode { Train, Eval };

// inverted dropout: train scales kept units by 1/keep, eval is the identity
template <class S>
Tensor<S> dropout(const Tensor<S>& a, double keep, Mode mode, Rng& rng) {
    if (!(keep > 0.0 && keep <= 1.0)) {
        throw TensorError("dropout keep probability must be in (0,1], got " + std::to_string(keep));
    }
    if (mode == Mode::Eval || keep == 1.0) return a;
    auto mask = std::make_shared<std::vector<S>>(static_cast<size_t>(a.size()));
    const S inv = static_cast<S>(1.0 / keep);
    for (auto& m : *mask) m = rng.next_uniform() < keep ? inv : S(0);
    Tensor<S> out = Tensor<S>::zeros(a.shape());
    const S* pa = a.data();
    S* po = out.data();
    for (int64_t i = 0; i < a.size(); ++i) po[i] = pa[i] * (*mask)[static_cast<size_t>(i)];
    if (tracking<S>(a)) {
        out.set_requires_grad(true);
        Tensor<S> ga = a, go = out;
        Tape<S>::active()->record([ga, go, mask]() mutable {
            if (!ga.requires_grad()) return;
            auto& ag = ga.grad();
            const auto& og = go.grad();
            for (size_t i = 0; i < ag.size(); ++i) ag[i] += og[i] * (*mask)[i];
        });
    }
    return out;
}

}  // namespace bcast
