#include "bcast/arch.hpp"

#include <functional>
#include <nlohmann/json.hpp>

namespace bcast {

using nlohmann::json;

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> order = {
        Variant::Bbnn,          Variant::Bcast4,       Variant::Remove3x3,
        Variant::Replace5x5,    Variant::GlobalMaxPool, Variant::Dropout,
        Variant::Blocks1,       Variant::Blocks2,      Variant::Blocks5,
        Variant::Selu,          Variant::GroupNorm,    Variant::LabelSmoothing,
        Variant::SqueezeExcite, Variant::Lstm,         Variant::InceptionResnetV1,
        Variant::Xception,
    };
    return order;
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Bbnn: return "bbnn";
        case Variant::Bcast4: return "bcast4";
        case Variant::Remove3x3: return "remove-3x3";
        case Variant::Replace5x5: return "replace-5x5";
        case Variant::GlobalMaxPool: return "global-max-pool";
        case Variant::Dropout: return "dropout";
        case Variant::Blocks1: return "blocks-1";
        case Variant::Blocks2: return "blocks-2";
        case Variant::Blocks5: return "blocks-5";
        case Variant::Selu: return "selu";
        case Variant::GroupNorm: return "group-norm";
        case Variant::LabelSmoothing: return "label-smoothing";
        case Variant::SqueezeExcite: return "squeeze-excite";
        case Variant::Lstm: return "lstm";
        case Variant::InceptionResnetV1: return "inception-resnet-v1";
        case Variant::Xception: return "xception";
    }
    throw ConfigError("unknown variant id");
}

Variant variant_from_name(const std::string& name) {
    for (Variant v : all_variants()) {
        if (variant_name(v) == name) return v;
    }
    throw ConfigError("unknown variant '" + name + "'");
}

namespace {

LayerDesc conv(int64_t out, int64_t k, int64_t stride = 1, Padding pad = Padding::Same) {
    LayerDesc d;
    d.kind = LayerKind::Conv;
    d.out_channels = out;
    d.kernel_h = d.kernel_w = k;
    d.stride = stride;
    d.pad = pad;
    return d;
}

LayerDesc factorized(int64_t out) {
    LayerDesc d;
    d.kind = LayerKind::FactorizedConv;
    d.out_channels = out;
    d.kernel_h = d.kernel_w = 3;
    return d;
}

LayerDesc separable(int64_t out) {
    LayerDesc d;
    d.kind = LayerKind::SeparableConv;
    d.out_channels = out;
    d.kernel_h = d.kernel_w = 3;
    return d;
}

LayerDesc norm_l() {
    LayerDesc d;
    d.kind = LayerKind::Norm;
    return d;
}

LayerDesc act_l() {
    LayerDesc d;
    d.kind = LayerKind::Act;
    return d;
}

LayerDesc max_pool_l(int64_t k, int64_t stride, Padding pad) {
    LayerDesc d;
    d.kind = LayerKind::MaxPool;
    d.kernel_h = d.kernel_w = k;
    d.stride = stride;
    d.pad = pad;
    return d;
}

LayerDesc avg_pool_l(int64_t k, int64_t stride) {
    LayerDesc d;
    d.kind = LayerKind::AvgPool;
    d.kernel_h = d.kernel_w = k;
    d.stride = stride;
    d.pad = Padding::Valid;
    return d;
}

LayerDesc se_l(int64_t ratio) {
    LayerDesc d;
    d.kind = LayerKind::SqueezeExcite;
    d.se_ratio = ratio;
    return d;
}

LayerDesc collapse_l() {
    LayerDesc d;
    d.kind = LayerKind::CollapseHeightMean;
    return d;
}

LayerDesc lstm_l(int64_t hidden) {
    LayerDesc d;
    d.kind = LayerKind::LstmTime;
    d.out_channels = hidden;
    return d;
}

LayerDesc expand_l() {
    LayerDesc d;
    d.kind = LayerKind::ExpandHeight;
    return d;
}

// conv 3x3 -> norm -> act -> 2x2/2 max pool; f channels out
std::vector<LayerDesc> standard_shallow(int64_t f) {
    return {conv(f, 3), norm_l(), act_l(), max_pool_l(2, 2, Padding::Valid)};
}

// norm -> act -> 1x1 conv to f -> 2x2/2 average pool
std::vector<LayerDesc> standard_transition(int64_t f) {
    return {norm_l(), act_l(), conv(f, 1), avg_pool_l(2, 2)};
}

BranchSpec branch(std::vector<LayerDesc> layers) {
    BranchSpec b;
    b.layers = std::move(layers);
    return b;
}

// 1x1 / 1x1->kxk / pool->1x1 baseline branch set; middle_kernel = 3 or 5
BlockSpec bbnn_block(int64_t f, int64_t middle_kernel, bool keep_middle_conv) {
    BlockSpec blk;
    blk.branches.push_back(branch({norm_l(), act_l(), conv(f, 1)}));
    std::vector<LayerDesc> br1 = {norm_l(), act_l(), conv(f, 1), norm_l(), act_l()};
    if (keep_middle_conv) br1.push_back(conv(f, 3));
    blk.branches.push_back(branch(std::move(br1)));
    blk.branches.push_back(
        branch({norm_l(), act_l(), conv(f, 1), norm_l(), act_l(), conv(f, middle_kernel)}));
    blk.branches.push_back(branch({max_pool_l(3, 1, Padding::Same), norm_l(), act_l(), conv(f, 1)}));
    return blk;
}

BlockSpec bcast4_block(int64_t f) {
    BlockSpec blk;
    blk.branches.push_back(branch({norm_l(), act_l(), conv(f, 1)}));
    blk.branches.push_back(branch({norm_l(), act_l(), conv(f, 1)}));
    blk.branches.push_back(branch({norm_l(), act_l(), conv(f, 1), norm_l(), act_l(), factorized(f)}));
    blk.branches.push_back(branch({max_pool_l(3, 1, Padding::Same), norm_l(), act_l(), conv(f, 1)}));
    return blk;
}

BlockSpec lstm_block(int64_t f) {
    BlockSpec blk = bbnn_block(f, 5, true);
    blk.branches[1] = branch({norm_l(), act_l(), conv(f, 1), collapse_l(), lstm_l(f), expand_l()});
    return blk;
}

// 1x1 / 1x1->3x3 / 1x1->3x3->3x3 branches, linear 1x1 merge back to the
// input width, scaled residual add, then a 1x1 projection to 4f
BlockSpec inception_resnet_block(int64_t f, int64_t in_channels) {
    BlockSpec blk;
    blk.branches.push_back(branch({norm_l(), act_l(), conv(f, 1)}));
    blk.branches.push_back(branch({norm_l(), act_l(), conv(f, 1), norm_l(), act_l(), conv(f, 3)}));
    blk.branches.push_back(branch({norm_l(), act_l(), conv(f, 1), norm_l(), act_l(), conv(f, 3),
                                   norm_l(), act_l(), conv(f, 3)}));
    blk.merge = {conv(in_channels, 1)};
    blk.residual = true;
    blk.residual_scale = 0.1;
    blk.post = {conv(4 * f, 1)};
    return blk;
}

BlockSpec xception_block(int64_t f) {
    BlockSpec blk;
    blk.branches.push_back(branch({norm_l(), act_l(), separable(4 * f)}));
    return blk;
}

// channel count after one layer
int64_t layer_out_channels(const LayerDesc& d, int64_t in) {
    switch (d.kind) {
        case LayerKind::Conv:
        case LayerKind::FactorizedConv:
        case LayerKind::SeparableConv:
        case LayerKind::LstmTime:
            return d.out_channels;
        default:
            return in;
    }
}

int64_t layers_out_channels(const std::vector<LayerDesc>& layers, int64_t in) {
    for (const auto& d : layers) in = layer_out_channels(d, in);
    return in;
}

int64_t block_out_channels(const BlockSpec& blk, int64_t in) {
    int64_t c = 0;
    for (const auto& br : blk.branches) c += layers_out_channels(br.layers, in);
    c = layers_out_channels(blk.merge, c);
    if (blk.residual && c != in) {
        throw ConfigError("residual block output width " + std::to_string(c) +
                          " does not match input width " + std::to_string(in));
    }
    return layers_out_channels(blk.post, c);
}

void validate_growth(const ArchSpec& arch) {
    int64_t k0 = layers_out_channels(arch.shallow, 1);
    auto growth = growth_sequence(arch.num_blocks, arch.filters, k0);
    int64_t acc = k0;
    for (size_t l = 0; l < arch.blocks.size(); ++l) {
        if (acc != growth[l]) {
            throw ConfigError("block " + std::to_string(l + 1) + " input width " +
                              std::to_string(acc) + " violates the growth sequence (expected " +
                              std::to_string(growth[l]) + ")");
        }
        int64_t out = block_out_channels(arch.blocks[l], acc);
        if (out != 4 * arch.filters) {
            throw ConfigError("block " + std::to_string(l + 1) + " output width " +
                              std::to_string(out) + " != 4*filters");
        }
        acc += out;
    }
    if (acc != growth.back()) {
        throw ConfigError("module output width " + std::to_string(acc) + " != growth sequence end");
    }
}

}  // namespace

std::vector<int64_t> growth_sequence(int64_t num_blocks, int64_t f, int64_t k0) {
    if (num_blocks < 1) throw ConfigError("growth_sequence needs at least one block");
    std::vector<int64_t> widths;
    widths.reserve(static_cast<size_t>(num_blocks) + 1);
    int64_t k = k0;
    widths.push_back(k);
    for (int64_t l = 0; l < num_blocks; ++l) {
        k += 4 * f;
        widths.push_back(k);
    }
    return widths;
}

ArchSpec build_arch(Variant v, int64_t num_classes, const ArchOverrides& overrides) {
    if (num_classes < 2) throw ConfigError("need at least two classes");
    ArchSpec a;
    a.variant = v;
    a.num_classes = num_classes;
    a.filters = overrides.filters.value_or(32);
    const int64_t f = a.filters;

    // baseline chassis: 3 BBNN blocks, glorot init, batch norm, relu
    int64_t blocks = 3;
    std::function<BlockSpec(int64_t)> make_block = [&](int64_t /*in_channels*/) {
        return bbnn_block(f, 5, true);
    };
    a.shallow = standard_shallow(f);
    a.transition = standard_transition(f);

    switch (v) {
        case Variant::Bbnn:
            break;
        case Variant::Bcast4:
            blocks = 4;
            a.init = Initializer::LecunNormal;
            make_block = [&](int64_t) { return bcast4_block(f); };
            break;
        case Variant::Remove3x3:
            make_block = [&](int64_t) { return bbnn_block(f, 5, false); };
            break;
        case Variant::Replace5x5:
            make_block = [&](int64_t) { return bbnn_block(f, 3, true); };
            break;
        case Variant::GlobalMaxPool:
            a.decision.pool = GlobalPoolKind::Max;
            break;
        case Variant::Dropout:
            a.decision.use_dropout = true;
            a.decision.keep = 0.6;
            break;
        case Variant::Blocks1:
            blocks = 1;
            break;
        case Variant::Blocks2:
            blocks = 2;
            break;
        case Variant::Blocks5:
            blocks = 5;
            break;
        case Variant::Selu:
            a.act = Activation::Selu;
            a.init = Initializer::LecunNormal;
            break;
        case Variant::GroupNorm:
            a.norm = NormKind::Group;
            break;
        case Variant::LabelSmoothing:
            a.label_smoothing = 0.1;
            break;
        case Variant::SqueezeExcite:
            make_block = [&](int64_t) {
                BlockSpec blk = bbnn_block(f, 5, true);
                blk.post = {se_l(4)};
                return blk;
            };
            break;
        case Variant::Lstm:
            make_block = [&](int64_t) { return lstm_block(f); };
            break;
        case Variant::InceptionResnetV1:
            // stem: three 3x3 convs (f, f, 2f; first strided) and a max pool
            a.shallow = {conv(f, 3, 2, Padding::Same), norm_l(), act_l(),
                         conv(f, 3),                   norm_l(), act_l(),
                         conv(2 * f, 3),               norm_l(), act_l(),
                         max_pool_l(3, 2, Padding::Valid)};
            make_block = [&](int64_t in) { return inception_resnet_block(f, in); };
            break;
        case Variant::Xception:
            blocks = 4;
            make_block = [&](int64_t) { return xception_block(f); };
            break;
    }

    a.num_blocks = overrides.blocks.value_or(blocks);
    if (a.num_blocks < 1) throw ConfigError("need at least one block");

    int64_t width = layers_out_channels(a.shallow, 1);
    for (int64_t l = 0; l < a.num_blocks; ++l) {
        BlockSpec blk = make_block(width);
        width += block_out_channels(blk, width);
        a.blocks.push_back(std::move(blk));
    }
    validate_growth(a);
    return a;
}

// ---- walkers ---------------------------------------------------------------

namespace {

std::string op_summary(const ArchSpec& arch, const LayerDesc& d) {
    auto kstr = [&](const char* what) {
        return std::string(what) + " " + std::to_string(d.kernel_h) + "x" +
               std::to_string(d.kernel_w) + "/" + std::to_string(d.stride) +
               (d.pad == Padding::Same ? " same" : " valid");
    };
    switch (d.kind) {
        case LayerKind::Conv: return kstr("conv");
        case LayerKind::FactorizedConv: return kstr("factorized conv");
        case LayerKind::SeparableConv: return kstr("separable conv");
        case LayerKind::Norm: return arch.norm == NormKind::Batch ? "batch norm" : "group norm";
        case LayerKind::Act: return arch.act == Activation::Relu ? "relu" : "selu";
        case LayerKind::MaxPool: return kstr("max pool");
        case LayerKind::AvgPool: return kstr("avg pool");
        case LayerKind::Dropout: return "dropout keep " + std::to_string(d.keep);
        case LayerKind::CollapseHeightMean: return "mean over mel axis";
        case LayerKind::LstmTime: return "lstm hidden " + std::to_string(d.out_channels);
        case LayerKind::ExpandHeight: return "tile over mel axis";
        case LayerKind::SqueezeExcite: return "squeeze-excite r=" + std::to_string(d.se_ratio);
    }
    return "?";
}

struct ShapeWalker {
    const ArchSpec& arch;
    std::vector<TraceRow> rows;

    Shape layer_shape(const LayerDesc& d, const Shape& in, int64_t branch_h) {
        Shape out = in;
        switch (d.kind) {
            case LayerKind::Conv:
            case LayerKind::SeparableConv: {
                ConvGeom g = conv_geometry(in[2], in[3], d.kernel_h, d.kernel_w, d.stride, d.pad,
                                           "conv");
                out[1] = d.out_channels;
                out[2] = g.oh;
                out[3] = g.ow;
                break;
            }
            case LayerKind::FactorizedConv: {
                ConvGeom g1 = conv_geometry(in[2], in[3], d.kernel_h, 1, d.stride, d.pad, "conv");
                ConvGeom g2 = conv_geometry(g1.oh, g1.ow, 1, d.kernel_w, 1, d.pad, "conv");
                out[1] = d.out_channels;
                out[2] = g2.oh;
                out[3] = g2.ow;
                break;
            }
            case LayerKind::MaxPool:
            case LayerKind::AvgPool: {
                ConvGeom g = conv_geometry(in[2], in[3], d.kernel_h, d.kernel_w, d.stride, d.pad,
                                           "pool");
                out[2] = g.oh;
                out[3] = g.ow;
                break;
            }
            case LayerKind::CollapseHeightMean:
                out[2] = 1;
                break;
            case LayerKind::LstmTime:
                out[1] = d.out_channels;
                break;
            case LayerKind::ExpandHeight:
                out[2] = branch_h;
                break;
            case LayerKind::Norm:
            case LayerKind::Act:
            case LayerKind::Dropout:
            case LayerKind::SqueezeExcite:
                break;
        }
        return out;
    }

    Shape run_layers(const std::vector<LayerDesc>& layers, const std::string& prefix, Shape in) {
        int64_t branch_h = in[2];
        for (size_t i = 0; i < layers.size(); ++i) {
            Shape out = layer_shape(layers[i], in, branch_h);
            rows.push_back({prefix + ".l" + std::to_string(i), op_summary(arch, layers[i]),
                            &layers[i], in, out});
            in = out;
        }
        return in;
    }

    void run(const Shape& input) {
        Shape x = run_layers(arch.shallow, "shallow", input);
        Shape concat = x;
        for (size_t l = 0; l < arch.blocks.size(); ++l) {
            const std::string bp = "block" + std::to_string(l + 1);
            const BlockSpec& blk = arch.blocks[l];
            Shape bin = concat;
            int64_t branch_sum = 0;
            Shape bshape;
            for (size_t b = 0; b < blk.branches.size(); ++b) {
                bshape = run_layers(blk.branches[b].layers, bp + ".br" + std::to_string(b), bin);
                branch_sum += bshape[1];
            }
            Shape merged = bshape;
            merged[1] = branch_sum;
            if (blk.branches.size() > 1) {
                rows.push_back({bp + ".concat", "concat branches", nullptr, bin, merged});
            }
            merged = run_layers(blk.merge, bp + ".merge", merged);
            if (blk.residual) {
                rows.push_back({bp + ".residual",
                                "input + " + std::to_string(blk.residual_scale) + " * merged",
                                nullptr, merged, bin});
                merged = bin;
            }
            merged = run_layers(blk.post, bp + ".post", merged);
            Shape next = merged;
            next[1] = concat[1] + merged[1];
            rows.push_back({bp + ".out", "broadcast concat", nullptr, merged, next});
            concat = next;
        }
        rows.push_back({"module.out", "module output", nullptr, concat, concat});
        Shape t = run_layers(arch.transition, "transition", concat);
        Shape pooled = {t[0], t[1]};
        rows.push_back({"decision.pool",
                        arch.decision.pool == GlobalPoolKind::Average ? "global avg pool"
                                                                      : "global max pool",
                        nullptr, t, pooled});
        if (arch.decision.use_dropout) {
            rows.push_back({"decision.dropout", "dropout keep " + std::to_string(arch.decision.keep),
                            nullptr, pooled, pooled});
        }
        Shape logits = {pooled[0], arch.num_classes};
        rows.push_back({"decision.dense", "dense", nullptr, pooled, logits});
        rows.push_back({"decision.softmax", "softmax", nullptr, logits, logits});
    }
};

}  // namespace

std::vector<TraceRow> trace_arch(const ArchSpec& arch, const Shape& input) {
    if (input.size() != 4) throw ConfigError("trace input must be NCHW");
    ShapeWalker w{arch, {}};
    w.run(input);
    return w.rows;
}

ConvCensus conv_census(const ArchSpec& arch) {
    ConvCensus c;
    for (const auto& row : trace_arch(arch, {1, 1, 64, 64})) {
        if (!row.desc) continue;
        const LayerDesc& d = *row.desc;
        switch (d.kind) {
            case LayerKind::Conv:
                ++c.total;
                if (d.kernel_h == 1 && d.kernel_w == 1) ++c.n1x1;
                else if (d.kernel_h == 3 && d.kernel_w == 3) ++c.n3x3;
                else if (d.kernel_h == 5 && d.kernel_w == 5) ++c.n5x5;
                break;
            case LayerKind::FactorizedConv:
                ++c.total;
                ++c.n3x3;  // the 3x1+1x3 pair stands in for one 3x3
                break;
            case LayerKind::SeparableConv:
                ++c.total;
                ++c.n_separable;
                break;
            default:
                break;
        }
    }
    return c;
}

std::vector<ParamShapeInfo> layer_param_shapes(const ArchSpec& arch, const LayerDesc& d,
                                               const std::string& path, int64_t in_channels) {
    std::vector<ParamShapeInfo> out;
    const int64_t c = in_channels;
    const int64_t o = d.out_channels;
    switch (d.kind) {
        case LayerKind::Conv:
            out.push_back({path + ".w", {o, c, d.kernel_h, d.kernel_w}, ParamRole::Weight,
                           c * d.kernel_h * d.kernel_w, o * d.kernel_h * d.kernel_w, true});
            out.push_back({path + ".b", {o}, ParamRole::Bias, 0, 0, true});
            break;
        case LayerKind::FactorizedConv:
            out.push_back({path + ".w1", {o, c, d.kernel_h, 1}, ParamRole::Weight, c * d.kernel_h,
                           o * d.kernel_h, true});
            out.push_back({path + ".b1", {o}, ParamRole::Bias, 0, 0, true});
            out.push_back({path + ".w2", {o, o, 1, d.kernel_w}, ParamRole::Weight, o * d.kernel_w,
                           o * d.kernel_w, true});
            out.push_back({path + ".b2", {o}, ParamRole::Bias, 0, 0, true});
            break;
        case LayerKind::SeparableConv:
            out.push_back({path + ".dw", {c, 1, d.kernel_h, d.kernel_w}, ParamRole::Weight,
                           d.kernel_h * d.kernel_w, d.kernel_h * d.kernel_w, true});
            out.push_back({path + ".db", {c}, ParamRole::Bias, 0, 0, true});
            out.push_back({path + ".pw", {o, c, 1, 1}, ParamRole::Weight, c, o, true});
            out.push_back({path + ".pb", {o}, ParamRole::Bias, 0, 0, true});
            break;
        case LayerKind::Norm:
            out.push_back({path + ".gamma", {c}, ParamRole::Gamma, 0, 0, true});
            out.push_back({path + ".beta", {c}, ParamRole::Beta, 0, 0, true});
            if (arch.norm == NormKind::Batch) {
                out.push_back({path + ".running_mean", {c}, ParamRole::RunningMean, 0, 0, false});
                out.push_back({path + ".running_var", {c}, ParamRole::RunningVar, 0, 0, false});
            }
            break;
        case LayerKind::LstmTime: {
            const int64_t h = d.out_channels;
            out.push_back({path + ".wx", {4 * h, c}, ParamRole::Weight, c, 4 * h, true});
            out.push_back({path + ".wh", {4 * h, h}, ParamRole::Weight, h, 4 * h, true});
            out.push_back({path + ".b", {4 * h}, ParamRole::Bias, 0, 0, true});
            break;
        }
        case LayerKind::SqueezeExcite: {
            if (d.se_ratio < 1 || c % d.se_ratio != 0) {
                throw ConfigError("squeeze-excite ratio " + std::to_string(d.se_ratio) +
                                  " does not divide " + std::to_string(c) + " channels");
            }
            const int64_t mid = c / d.se_ratio;
            out.push_back({path + ".w1", {mid, c}, ParamRole::Weight, c, mid, true});
            out.push_back({path + ".b1", {mid}, ParamRole::Bias, 0, 0, true});
            out.push_back({path + ".w2", {c, mid}, ParamRole::Weight, mid, c, true});
            out.push_back({path + ".b2", {c}, ParamRole::Bias, 0, 0, true});
            break;
        }
        default:
            break;
    }
    return out;
}

std::vector<ParamShapeInfo> arch_param_shapes(const ArchSpec& arch) {
    std::vector<ParamShapeInfo> out;
    for (const auto& row : trace_arch(arch, {1, 1, 64, 64})) {
        if (row.desc) {
            auto ps = layer_param_shapes(arch, *row.desc, row.name, row.in[1]);
            out.insert(out.end(), ps.begin(), ps.end());
        } else if (row.name == "decision.dense") {
            out.push_back({"decision.dense.w", {arch.num_classes, row.in[1]}, ParamRole::Weight,
                           row.in[1], arch.num_classes, true});
            out.push_back({"decision.dense.b", {arch.num_classes}, ParamRole::Bias, 0, 0, true});
        }
    }
    return out;
}

ParamCount param_count(const ArchSpec& arch) {
    ParamCount pc;
    for (const auto& p : arch_param_shapes(arch)) {
        if (!p.trainable) continue;
        // group by layer path (strip the trailing ".w"/".gamma"/... suffix)
        std::string layer = p.name.substr(0, p.name.rfind('.'));
        if (pc.per_layer.empty() || pc.per_layer.back().name != layer) {
            pc.per_layer.push_back({layer, 0});
        }
        pc.per_layer.back().count += numel(p.shape);
        pc.total += numel(p.shape);
    }
    return pc;
}

// ---- serialization ---------------------------------------------------------

std::string arch_to_json(const ArchSpec& arch) {
    json j;
    j["schema"] = 1;
    j["variant"] = variant_name(arch.variant);
    j["num_classes"] = arch.num_classes;
    j["blocks"] = arch.num_blocks;
    j["filters"] = arch.filters;
    return j.dump();
}

ArchSpec arch_from_json(const std::string& json_text) {
    json j = json::parse(json_text);
    if (!j.contains("variant")) throw ConfigError("arch json missing 'variant'");
    ArchOverrides ov;
    if (j.contains("blocks")) ov.blocks = j["blocks"].get<int64_t>();
    if (j.contains("filters")) ov.filters = j["filters"].get<int64_t>();
    return build_arch(variant_from_name(j["variant"].get<std::string>()),
                      j.value("num_classes", int64_t{10}), ov);
}

}  // namespace bcast
