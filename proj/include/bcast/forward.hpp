#pragma once

#include "bcast/layers.hpp"
#include "bcast/params.hpp"

// Executes an ArchSpec on a batch: shallow features, then each block on the
// running concatenation of the shallow output and all prior block outputs,
// then transition and decision. Parameter names match trace_arch rows.

namespace bcast {

template <class S>
struct ForwardOptions {
    Mode mode = Mode::Eval;
    bool update_running_stats = false;  // only the training step sets this
    Rng* rng = nullptr;                 // required when dropout is live
};

template <class S>
struct ForwardTrace {
    std::vector<Tensor<S>> block_inputs;   // concat fed to each block
    std::vector<Tensor<S>> block_outputs;  // each block's own output
    Tensor<S> module_output;               // final broadcast concatenation
    Tensor<S> logits;
};

namespace detail {

template <class S>
Tensor<S> apply_layers(const ArchSpec& arch, const std::vector<LayerDesc>& layers,
                       const std::string& prefix, Tensor<S> x, ParamStore<S>& ps,
                       const ForwardOptions<S>& opt) {
    int64_t branch_h = x.dim(2);
    for (size_t i = 0; i < layers.size(); ++i) {
        const LayerDesc& d = layers[i];
        const std::string p = prefix + ".l" + std::to_string(i);
        switch (d.kind) {
            case LayerKind::Conv:
                x = conv2d(x, ps.at(p + ".w"), ps.at(p + ".b"), d.stride, d.pad);
                break;
            case LayerKind::FactorizedConv:
                x = factorized_conv3x3(x, ps.at(p + ".w1"), ps.at(p + ".b1"), ps.at(p + ".w2"),
                                       ps.at(p + ".b2"), d.stride, d.pad);
                break;
            case LayerKind::SeparableConv:
                x = separable_conv2d(x, ps.at(p + ".dw"), ps.at(p + ".db"), ps.at(p + ".pw"),
                                     ps.at(p + ".pb"));
                break;
            case LayerKind::Norm:
                if (arch.norm == NormKind::Batch) {
                    x = batch_norm(x, ps.at(p + ".gamma"), ps.at(p + ".beta"),
                                   ps.at(p + ".running_mean"), ps.at(p + ".running_var"), opt.mode,
                                   opt.update_running_stats);
                } else {
                    x = group_norm(x, ps.at(p + ".gamma"), ps.at(p + ".beta"), arch.group_size);
                }
                break;
            case LayerKind::Act:
                x = arch.act == Activation::Relu ? relu(x) : selu(x);
                break;
            case LayerKind::MaxPool:
                x = max_pool(x, d.kernel_h, d.stride, d.pad);
                break;
            case LayerKind::AvgPool:
                x = avg_pool(x, d.kernel_h, d.stride);
                break;
            case LayerKind::Dropout:
                if (!opt.rng && opt.mode == Mode::Train) {
                    throw TensorError("dropout in training mode needs an rng");
                }
                if (opt.mode == Mode::Train) x = dropout(x, d.keep, opt.mode, *opt.rng);
                break;
            case LayerKind::CollapseHeightMean:
                branch_h = x.dim(2);
                x = mean_axis_keep(x, 2);  // [n, c, 1, w]
                break;
            case LayerKind::LstmTime: {
                Shape s = x.shape();
                Tensor<S> seq = reshape(x, Shape{s[0], s[1], s[3]});
                seq = lstm_seq(seq, ps.at(p + ".wx"), ps.at(p + ".wh"), ps.at(p + ".b"),
                               d.out_channels);
                x = reshape(seq, Shape{s[0], d.out_channels, int64_t{1}, s[3]});
                break;
            }
            case LayerKind::ExpandHeight: {
                Shape target = x.shape();
                target[2] = branch_h;
                x = broadcast_to(x, target);
                break;
            }
            case LayerKind::SqueezeExcite:
                x = se_block(x, ps.at(p + ".w1"), ps.at(p + ".b1"), ps.at(p + ".w2"),
                             ps.at(p + ".b2"));
                break;
        }
    }
    return x;
}

}  // namespace detail

template <class S>
Tensor<S> forward_logits(const ArchSpec& arch, ParamStore<S>& ps, const Tensor<S>& input,
                         const ForwardOptions<S>& opt, ForwardTrace<S>* trace = nullptr) {
    if (input.rank() != 4) {
        throw TensorError("network input must be NCHW, got " + shape_str(input.shape()));
    }
    Tensor<S> shallow = detail::apply_layers(arch, arch.shallow, "shallow", input, ps, opt);

    std::vector<Tensor<S>> collected = {shallow};
    Tensor<S> concat = shallow;
    for (size_t l = 0; l < arch.blocks.size(); ++l) {
        const BlockSpec& blk = arch.blocks[l];
        const std::string bp = "block" + std::to_string(l + 1);
        if (trace) trace->block_inputs.push_back(concat);
        std::vector<Tensor<S>> branch_outs;
        branch_outs.reserve(blk.branches.size());
        for (size_t b = 0; b < blk.branches.size(); ++b) {
            branch_outs.push_back(detail::apply_layers(arch, blk.branches[b].layers,
                                                       bp + ".br" + std::to_string(b), concat, ps,
                                                       opt));
        }
        Tensor<S> y = concat_channels(branch_outs);
        y = detail::apply_layers(arch, blk.merge, bp + ".merge", y, ps, opt);
        if (blk.residual) y = add(concat, scale(y, static_cast<S>(blk.residual_scale)));
        y = detail::apply_layers(arch, blk.post, bp + ".post", y, ps, opt);
        if (trace) trace->block_outputs.push_back(y);
        collected.push_back(y);
        concat = concat_channels(collected);
    }
    if (trace) trace->module_output = concat;

    Tensor<S> t = detail::apply_layers(arch, arch.transition, "transition", concat, ps, opt);
    Tensor<S> pooled = arch.decision.pool == GlobalPoolKind::Average ? global_avg_pool(t)
                                                                     : global_max_pool(t);
    if (arch.decision.use_dropout && opt.mode == Mode::Train) {
        if (!opt.rng) throw TensorError("dropout in training mode needs an rng");
        pooled = dropout(pooled, arch.decision.keep, opt.mode, *opt.rng);
    }
    Tensor<S> logits = dense(pooled, ps.at("decision.dense.w"), ps.at("decision.dense.b"));
    if (trace) trace->logits = logits;
    return logits;
}

// class probabilities, rows summing to 1
template <class S>
Tensor<S> forward(const ArchSpec& arch, ParamStore<S>& ps, const Tensor<S>& input, Mode mode,
                  Rng* rng = nullptr) {
    ForwardOptions<S> opt;
    opt.mode = mode;
    opt.rng = rng;
    return softmax_rows(forward_logits(arch, ps, input, opt));
}

}  // namespace bcast
