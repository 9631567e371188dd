#pragma once

#include <unordered_map>

#include "bcast/arch.hpp"
#include "bcast/tensor.hpp"

namespace bcast {

// Named parameter set in deterministic creation order. Trainable entries get
// gradients; running statistics ride along untracked but are checkpointed.
template <class S>
class ParamStore {
public:
    struct Entry {
        std::string name;
        Tensor<S> tensor;
        bool trainable = true;
    };

    void add(std::string name, Tensor<S> t, bool trainable) {
        if (by_name_.count(name)) throw ConfigError("duplicate parameter '" + name + "'");
        t.set_requires_grad(trainable);
        by_name_[name] = entries_.size();
        entries_.push_back({std::move(name), std::move(t), trainable});
    }

    bool has(const std::string& name) const { return by_name_.count(name) > 0; }

    Tensor<S>& at(const std::string& name) {
        auto it = by_name_.find(name);
        if (it == by_name_.end()) throw ConfigError("unknown parameter '" + name + "'");
        return entries_[it->second].tensor;
    }

    const Tensor<S>& at(const std::string& name) const {
        return const_cast<ParamStore*>(this)->at(name);
    }

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }

    int64_t trainable_values() const {
        int64_t n = 0;
        for (const auto& e : entries_)
            if (e.trainable) n += e.tensor.size();
        return n;
    }

    void zero_grads() {
        for (auto& e : entries_)
            if (e.trainable) e.tensor.zero_grad();
    }

    // deep copy (used for best-epoch snapshots)
    ParamStore clone() const {
        ParamStore c;
        for (const auto& e : entries_) c.add(e.name, e.tensor.detach(), e.trainable);
        return c;
    }

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, size_t> by_name_;
};

// lecun-normal (std = sqrt(1/fan_in)) or glorot-uniform weights, zero biases,
// unit gamma / zero beta, fresh running stats; bit-reproducible per seed
template <class S>
ParamStore<S> init_params(const ArchSpec& arch, uint64_t seed) {
    ParamStore<S> store;
    Rng rng(seed);
    for (const auto& p : arch_param_shapes(arch)) {
        Tensor<S> t;
        switch (p.role) {
            case ParamRole::Weight: {
                t = Tensor<S>::zeros(p.shape);
                if (arch.init == Initializer::LecunNormal) {
                    const double std = std::sqrt(1.0 / static_cast<double>(p.fan_in));
                    for (auto& v : t.value()) v = static_cast<S>(rng.next_normal() * std);
                } else {
                    const double lim =
                        std::sqrt(6.0 / static_cast<double>(p.fan_in + p.fan_out));
                    for (auto& v : t.value()) v = static_cast<S>(rng.next_uniform(-lim, lim));
                }
                break;
            }
            case ParamRole::Bias:
            case ParamRole::Beta:
            case ParamRole::RunningMean:
                t = Tensor<S>::zeros(p.shape);
                break;
            case ParamRole::Gamma:
            case ParamRole::RunningVar:
                t = Tensor<S>::ones(p.shape);
                break;
        }
        store.add(p.name, std::move(t), p.trainable);
    }
    return store;
}

}  // namespace bcast
