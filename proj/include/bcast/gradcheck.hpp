#pragma once

#include <functional>

#include "bcast/tensor.hpp"

namespace bcast {

// Compares tape gradients of a scalar-valued function against central finite
// differences, returning the worst relative error over all coordinates of all
// inputs. The numeric side only ever evaluates fn, so it stays independent of
// whatever backward path produced the analytic gradients.
template <class S>
double grad_check(const std::function<Tensor<S>(const std::vector<Tensor<S>>&)>& fn,
                  std::vector<Tensor<S>> inputs, double eps) {
    if (eps <= 0.0) throw TensorError("grad_check eps must be positive");

    auto eval = [&]() -> double {
        Tensor<S> out = fn(inputs);
        if (out.size() != 1) throw TensorError("grad_check requires a scalar-valued function");
        return static_cast<double>(out.item());
    };

    const double f0 = eval();
    if (eval() != f0) throw TensorError("grad_check: function is not deterministic");

    for (auto& t : inputs) {
        t.set_requires_grad(true);
        t.zero_grad();
    }
    std::vector<double> analytic;
    {
        Tape<S> tape;
        Tensor<S> out = fn(inputs);
        tape.backward(out);
        for (auto& t : inputs)
            for (S g : t.grad()) analytic.push_back(static_cast<double>(g));
    }

    double worst = 0.0;
    size_t flat = 0;
    for (auto& t : inputs) {
        for (int64_t i = 0; i < t.size(); ++i, ++flat) {
            S saved = t.value()[static_cast<size_t>(i)];
            t.value()[static_cast<size_t>(i)] = saved + static_cast<S>(eps);
            double fp = eval();
            t.value()[static_cast<size_t>(i)] = saved - static_cast<S>(eps);
            double fm = eval();
            t.value()[static_cast<size_t>(i)] = saved;
            double numeric = (fp - fm) / (2.0 * eps);
            double a = analytic[flat];
            double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace bcast
