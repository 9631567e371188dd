#pragma once

#include "bcast/ops.hpp"

namespace bcast {

inline constexpr double kNormEps = 1e-3;
inline constexpr double kBnMomentum = 0.99;

// Per-channel batch normalization over (N,H,W). Training mode normalizes by
// batch statistics (biased variance) and, when update_running is set, folds
// them into the running estimates; eval mode normalizes by the running
// estimates only. Running stats live outside the tape.
template <class S>
Tensor<S> batch_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                     Tensor<S>& running_mean, Tensor<S>& running_var, Mode mode,
                     bool update_running, double eps = kNormEps, double momentum = kBnMomentum) {
    if (x.rank() != 4) throw TensorError("batch_norm expects NCHW input");
    const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    if (n < 1) throw TensorError("batch_norm on an empty batch");
    if (gamma.size() != c || beta.size() != c) {
        throw TensorError("batch_norm parameter size mismatch for " + std::to_string(c) + " channels");
    }

    auto mean = std::make_shared<std::vector<S>>(static_cast<size_t>(c));
    auto inv_std = std::make_shared<std::vector<S>>(static_cast<size_t>(c));
    const int64_t m = n * hw;

    if (mode == Mode::Train) {
        for (int64_t ch = 0; ch < c; ++ch) {
            double s1 = 0.0, s2 = 0.0;
            for (int64_t i = 0; i < n; ++i) {
                const S* src = x.data() + (i * c + ch) * hw;
                for (int64_t s = 0; s < hw; ++s) {
                    double v = static_cast<double>(src[s]);
                    s1 += v;
                    s2 += v * v;
                }
            }
            double mu = s1 / static_cast<double>(m);
            double var = std::max(s2 / static_cast<double>(m) - mu * mu, 0.0);
            (*mean)[static_cast<size_t>(ch)] = static_cast<S>(mu);
            (*inv_std)[static_cast<size_t>(ch)] = static_cast<S>(1.0 / std::sqrt(var + eps));
            if (update_running) {
                auto& rm = running_mean.value();
                auto& rv = running_var.value();
                rm[static_cast<size_t>(ch)] = static_cast<S>(
                    momentum * static_cast<double>(rm[static_cast<size_t>(ch)]) + (1.0 - momentum) * mu);
                rv[static_cast<size_t>(ch)] = static_cast<S>(
                    momentum * static_cast<double>(rv[static_cast<size_t>(ch)]) + (1.0 - momentum) * var);
            }
        }
    } else {
        for (int64_t ch = 0; ch < c; ++ch) {
            (*mean)[static_cast<size_t>(ch)] = running_mean.value()[static_cast<size_t>(ch)];
            (*inv_std)[static_cast<size_t>(ch)] = static_cast<S>(
                1.0 / std::sqrt(static_cast<double>(running_var.value()[static_cast<size_t>(ch)]) + eps));
        }
    }

    Tensor<S> out = Tensor<S>::zeros(x.shape());
    for (int64_t i = 0; i < n; ++i)
        for (int64_t ch = 0; ch < c; ++ch) {
            const S* src = x.data() + (i * c + ch) * hw;
            S* dst = out.data() + (i * c + ch) * hw;
            const S mu = (*mean)[static_cast<size_t>(ch)];
            const S is = (*inv_std)[static_cast<size_t>(ch)];
            const S g = gamma.value()[static_cast<size_t>(ch)];
            const S b = beta.value()[static_cast<size_t>(ch)];
            for (int64_t s = 0; s < hw; ++s) dst[s] = g * (src[s] - mu) * is + b;
        }

    bool track = Tape<S>::active() &&
                 (x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
    if (track) {
        out.set_requires_grad(true);
        Tensor<S> gx = x, gg = gamma, gb = beta, go = out;
        const bool batch_stats = (mode == Mode::Train);
        Tape<S>::active()->record([gx, gg, gb, go, mean, inv_std, batch_stats]() mutable {
            const int64_t n = gx.dim(0), c = gx.dim(1), hw = gx.dim(2) * gx.dim(3);
            const int64_t m = n * hw;
            const auto& og = go.grad();
            for (int64_t ch = 0; ch < c; ++ch) {
                const S mu = (*mean)[static_cast<size_t>(ch)];
                const S is = (*inv_std)[static_cast<size_t>(ch)];
                double sum_dy = 0.0, sum_dy_xh = 0.0;
                for (int64_t i = 0; i < n; ++i) {
                    const S* xv = gx.data() + (i * c + ch) * hw;
                    const S* dy = og.data() + (i * c + ch) * hw;
                    for (int64_t s = 0; s < hw; ++s) {
                        double xh = static_cast<double>((xv[s] - mu) * is);
                        sum_dy += static_cast<double>(dy[s]);
                        sum_dy_xh += static_cast<double>(dy[s]) * xh;
                    }
                }
                if (gg.requires_grad()) gg.grad()[static_cast<size_t>(ch)] += static_cast<S>(sum_dy_xh);
                if (gb.requires_grad()) gb.grad()[static_cast<size_t>(ch)] += static_cast<S>(sum_dy);
                if (gx.requires_grad()) {
                    const S g = gg.value()[static_cast<size_t>(ch)];
                    const double mdy = sum_dy / static_cast<double>(m);
                    const double mdyxh = sum_dy_xh / static_cast<double>(m);
                    for (int64_t i = 0; i < n; ++i) {
                        const S* xv = gx.data() + (i * c + ch) * hw;
                        const S* dy = og.data() + (i * c + ch) * hw;
                        S* dx = gx.grad().data() + (i * c + ch) * hw;
                        for (int64_t s = 0; s < hw; ++s) {
                            if (batch_stats) {
                                double xh = static_cast<double>((xv[s] - mu) * is);
                                dx[s] += static_cast<S>(static_cast<double>(g * is) *
                                                        (static_cast<double>(dy[s]) - mdy - xh * mdyxh));
                            } else {
                                dx[s] += g * is * dy[s];
                            }
                        }
                    }
                }
            }
        });
    }
    return out;
}

// Per-sample, per-group normalization; groups of `group_size` consecutive
// channels, no running statistics, identical behavior in train and eval.
template <class S>
Tensor<S> group_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                     int64_t group_size, double eps = kNormEps) {
    if (x.rank() != 4) throw TensorError("group_norm expects NCHW input");
    const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    if (group_size < 1 || c % group_size != 0) {
        throw TensorError("group_norm: " + std::to_string(c) + " channels not divisible into groups of " +
                          std::to_string(group_size));
    }
    if (gamma.size() != c || beta.size() != c) {
        throw TensorError("group_norm parameter size mismatch for " + std::to_string(c) + " channels");
    }
    const int64_t groups = c / group_size;
    const int64_t gsz = group_size * hw;

    auto mean = std::make_shared<std::vector<S>>(static_cast<size_t>(n * groups));
    auto inv_std = std::make_shared<std::vector<S>>(static_cast<size_t>(n * groups));
    for (int64_t i = 0; i < n; ++i)
        for (int64_t g = 0; g < groups; ++g) {
            const S* src = x.data() + (i * c + g * group_size) * hw;
            double s1 = 0.0, s2 = 0.0;
            for (int64_t s = 0; s < gsz; ++s) {
                double v = static_cast<double>(src[s]);
                s1 += v;
                s2 += v * v;
            }
            double mu = s1 / static_cast<double>(gsz);
            double var = std::max(s2 / static_cast<double>(gsz) - mu * mu, 0.0);
            (*mean)[static_cast<size_t>(i * groups + g)] = static_cast<S>(mu);
            (*inv_std)[static_cast<size_t>(i * groups + g)] = static_cast<S>(1.0 / std::sqrt(var + eps));
        }

    Tensor<S> out = Tensor<S>::zeros(x.shape());
    for (int64_t i = 0; i < n; ++i)
        for (int64_t ch = 0; ch < c; ++ch) {
            const int64_t g = ch / group_size;
            const S mu = (*mean)[static_cast<size_t>(i * groups + g)];
            const S is = (*inv_std)[static_cast<size_t>(i * groups + g)];
            const S gm = gamma.value()[static_cast<size_t>(ch)];
            const S bt = beta.value()[static_cast<size_t>(ch)];
            const S* src = x.data() + (i * c + ch) * hw;
            S* dst = out.data() + (i * c + ch) * hw;
            for (int64_t s = 0; s < hw; ++s) dst[s] = gm * (src[s] - mu) * is + bt;
        }

    bool track = Tape<S>::active() &&
                 (x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
    if (track) {
        out.set_requires_grad(true);
        Tensor<S> gx = x, gg = gamma, gb = beta, go = out;
        Tape<S>::active()->record([gx, gg, gb, go, mean, inv_std, group_size]() mutable {
            const int64_t n = gx.dim(0), c = gx.dim(1), hw = gx.dim(2) * gx.dim(3);
            const int64_t groups = c / group_size;
            const int64_t gsz = group_size * hw;
            const auto& og = go.grad();
            // per-channel param grads
            if (gg.requires_grad() || gb.requires_grad()) {
                for (int64_t ch = 0; ch < c; ++ch) {
                    const int64_t g = ch / group_size;
                    double sum_dy = 0.0, sum_dy_xh = 0.0;
                    for (int64_t i = 0; i < n; ++i) {
                        const S mu = (*mean)[static_cast<size_t>(i * groups + g)];
                        const S is = (*inv_std)[static_cast<size_t>(i * groups + g)];
                        const S* xv = gx.data() + (i * c + ch) * hw;
                        const S* dy = og.data() + (i * c + ch) * hw;
                        for (int64_t s = 0; s < hw; ++s) {
                            sum_dy += static_cast<double>(dy[s]);
                            sum_dy_xh += static_cast<double>(dy[s]) * static_cast<double>((xv[s] - mu) * is);
                        }
                    }
                    if (gg.requires_grad()) gg.grad()[static_cast<size_t>(ch)] += static_cast<S>(sum_dy_xh);
                    if (gb.requires_grad()) gb.grad()[static_cast<size_t>(ch)] += static_cast<S>(sum_dy);
                }
            }
            if (gx.requires_grad()) {
                for (int64_t i = 0; i < n; ++i)
                    for (int64_t g = 0; g < groups; ++g) {
                        const S mu = (*mean)[static_cast<size_t>(i * groups + g)];
                        const S is = (*inv_std)[static_cast<size_t>(i * groups + g)];
                        double sum_t = 0.0, sum_t_xh = 0.0;  // t = dy * gamma
                        for (int64_t cc = 0; cc < group_size; ++cc) {
                            const int64_t ch = g * group_size + cc;
                            const S gm = gg.value()[static_cast<size_t>(ch)];
                            const S* xv = gx.data() + (i * c + ch) * hw;
                            const S* dy = og.data() + (i * c + ch) * hw;
                            for (int64_t s = 0; s < hw; ++s) {
                                double t = static_cast<double>(dy[s]) * static_cast<double>(gm);
                                sum_t += t;
                                sum_t_xh += t * static_cast<double>((xv[s] - mu) * is);
                            }
                        }
                        const double mt = sum_t / static_cast<double>(gsz);
                        const double mtxh = sum_t_xh / static_cast<double>(gsz);
                        for (int64_t cc = 0; cc < group_size; ++cc) {
                            const int64_t ch = g * group_size + cc;
                            const S gm = gg.value()[static_cast<size_t>(ch)];
                            const S* xv = gx.data() + (i * c + ch) * hw;
                            const S* dy = og.data() + (i * c + ch) * hw;
                            S* dx = gx.grad().data() + (i * c + ch) * hw;
                            for (int64_t s = 0; s < hw; ++s) {
                                double xh = static_cast<double>((xv[s] - mu) * is);
                                double t = static_cast<double>(dy[s]) * static_cast<double>(gm);
                                dx[s] += static_cast<S>(static_cast<double>(is) * (t - mt - xh * mtxh));
                            }
                        }
                    }
            }
        });
    }
    return out;
}

}  // namespace bcast
