#pragma once

#include <vector>

#include "bcast/tensor.hpp"

namespace bcast::testing {

template <class S>
Tensor<S> random_tensor(Shape shape, uint64_t seed, double lo = -1.0, double hi = 1.0) {
    Rng rng(seed);
    Tensor<S> t = Tensor<S>::zeros(std::move(shape));
    for (auto& v : t.value()) v = static_cast<S>(rng.next_uniform(lo, hi));
    return t;
}

template <class S>
bool all_close(const std::vector<S>& a, const std::vector<S>& b, double tol) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])) > tol) return false;
    }
    return true;
}

template <class S>
bool all_finite(const Tensor<S>& t) {
    for (S v : t.value()) {
        if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
}

}  // namespace bcast::testing
