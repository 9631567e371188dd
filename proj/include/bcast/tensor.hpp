#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <utility>

#include "bcast/common.hpp"

namespace bcast {

// Dense n-dimensional array, row-major, with an optional gradient buffer.
// Tensor is a cheap handle; copies share storage. Values are written once by
// the op that produces them and treated as immutable afterwards, except for
// optimizer updates between steps.
template <class S>
class Tensor {
    struct Data {
        Shape shape;
        std::vector<S> value;
        std::vector<S> grad;  // allocated lazily, same length as value
        bool requires_grad = false;
    };

public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        return full(std::move(shape), S(0), requires_grad);
    }

    static Tensor ones(Shape shape, bool requires_grad = false) {
        return full(std::move(shape), S(1), requires_grad);
    }

    static Tensor full(Shape shape, S v, bool requires_grad = false) {
        Tensor t;
        t.d_ = std::make_shared<Data>();
        t.d_->shape = std::move(shape);
        t.d_->value.assign(static_cast<size_t>(numel(t.d_->shape)), v);
        t.d_->requires_grad = requires_grad;
        return t;
    }

    static Tensor from(Shape shape, std::vector<S> values, bool requires_grad = false) {
        if (static_cast<int64_t>(values.size()) != numel(shape)) {
            throw TensorError("tensor data length " + std::to_string(values.size()) +
                              " does not match shape " + shape_str(shape));
        }
        Tensor t;
        t.d_ = std::make_shared<Data>();
        t.d_->shape = std::move(shape);
        t.d_->value = std::move(values);
        t.d_->requires_grad = requires_grad;
        return t;
    }

    static Tensor scalar(S v, bool requires_grad = false) {
        return from({1}, {v}, requires_grad);
    }

    bool defined() const { return static_cast<bool>(d_); }
    const Shape& shape() const { return d_->shape; }
    int rank() const { return static_cast<int>(d_->shape.size()); }
    int64_t dim(int i) const { return d_->shape[static_cast<size_t>(i)]; }
    int64_t size() const { return static_cast<int64_t>(d_->value.size()); }

    std::vector<S>& value() { return d_->value; }
    const std::vector<S>& value() const { return d_->value; }
    S* data() { return d_->value.data(); }
    const S* data() const { return d_->value.data(); }

    bool requires_grad() const { return d_->requires_grad; }
    void set_requires_grad(bool rg) { d_->requires_grad = rg; }

    bool has_grad() const { return !d_->grad.empty(); }
    std::vector<S>& grad() {
        if (d_->grad.size() != d_->value.size()) d_->grad.assign(d_->value.size(), S(0));
        return d_->grad;
    }
    const std::vector<S>& grad() const { return const_cast<Tensor*>(this)->grad(); }

    void zero_grad() {
        if (!d_->grad.empty()) std::fill(d_->grad.begin(), d_->grad.end(), S(0));
    }

    S item() const {
        if (size() != 1) throw TensorError("item() requires a scalar tensor, got " + shape_str(shape()));
        return d_->value[0];
    }

    // value copy with no grad tracking
    Tensor detach() const {
        Tensor t;
        t.d_ = std::make_shared<Data>();
        t.d_->shape = d_->shape;
        t.d_->value = d_->value;
        t.d_->requires_grad = false;
        return t;
    }

    bool same_storage(const Tensor& o) const { return d_ == o.d_; }

private:
    std::shared_ptr<Data> d_;
};

// Execution-ordered record of differentiable ops. Constructing a Tape makes
// it the active tape for the current thread (previous one is restored on
// destruction); ops append their backward closure while one is active and at
// least one input requires gradients. backward() replays the closures in
// exact reverse execution order. One tape per training thread; never shared.
template <class S>
class Tape {
public:
    Tape() : prev_(active_) { active_ = this; }
    ~Tape() { active_ = prev_; }
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active() { return active_; }

    void record(std::function<void()> backward_step) {
        entries_.push_back(std::move(backward_step));
    }

    size_t size() const { return entries_.size(); }

    void backward(Tensor<S> loss) {
        if (loss.size() != 1) {
            throw TensorError("backward() requires a scalar loss, got " + shape_str(loss.shape()));
        }
        if (!loss.requires_grad()) {
            throw TensorError("backward() on a tensor detached from the tape");
        }
        if (consumed_) {
            throw TensorError("backward() called twice on the same tape without reset");
        }
        consumed_ = true;
        loss.grad()[0] = S(1);
        for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
    }

private:
    std::vector<std::function<void()>> entries_;
    bool consumed_ = false;
    Tape* prev_ = nullptr;
    static thread_local Tape* active_;
};

template <class S>
thread_local Tape<S>* Tape<S>::active_ = nullptr;

// True when the result of an op over these inputs should be tracked.
template <class S, class... Ts>
bool tracking(const Ts&... inputs) {
    return Tape<S>::active() != nullptr && (inputs.requires_grad() || ...);
}

}  // namespace bcast
