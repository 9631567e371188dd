#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bcast/common.hpp"
#include "bcast/conv.hpp"

// Declarative description of the network family: the 3-block BBNN baseline,
// the 4-block broadcast model, and the twelve single-change variants. Every
// block receives the channel concatenation of the shallow features and all
// prior block outputs; with four branches of f filters each, accumulated
// width grows by 4f per block.

namespace bcast {

enum class Variant {
    Bbnn,              // 3-block baseline with the 5x5 branch
    Bcast4,            // 4 blocks, factorized 3x3, lecun-normal init
    Remove3x3,
    Replace5x5,
    GlobalMaxPool,
    Dropout,
    Blocks1,
    Blocks2,
    Blocks5,
    Selu,
    GroupNorm,
    LabelSmoothing,
    SqueezeExcite,
    Lstm,
    InceptionResnetV1,
    Xception,
};

const std::vector<Variant>& all_variants();  // canonical reporting order
std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

enum class Activation { Relu, Selu };
enum class NormKind { Batch, Group };
enum class Initializer { LecunNormal, GlorotUniform };
enum class GlobalPoolKind { Average, Max };

enum class LayerKind {
    Conv,
    FactorizedConv,     // 3x1 then 1x3, one 3x3-class layer
    SeparableConv,      // depthwise 3x3 + pointwise 1x1
    Norm,               // arch-level kind (batch or group)
    Act,                // arch-level kind (relu or selu)
    MaxPool,
    AvgPool,
    Dropout,
    CollapseHeightMean, // mean over mel axis, keepdim
    LstmTime,           // LSTM over the time axis, out_channels = hidden
    ExpandHeight,       // tile back over the mel axis
    SqueezeExcite,
};

struct LayerDesc {
    LayerKind kind = LayerKind::Conv;
    int64_t out_channels = 0;  // conv family + LstmTime hidden width
    int64_t kernel_h = 0, kernel_w = 0;
    int64_t stride = 1;
    Padding pad = Padding::Same;
    int64_t se_ratio = 0;
    double keep = 1.0;
};

struct BranchSpec {
    std::vector<LayerDesc> layers;
};

struct BlockSpec {
    std::vector<BranchSpec> branches;  // all run on the block input, outputs concatenated
    std::vector<LayerDesc> merge;      // applied to the concatenation
    bool residual = false;             // out = in + residual_scale * merged
    double residual_scale = 1.0;
    std::vector<LayerDesc> post;       // applied after the residual
};

struct DecisionSpec {
    GlobalPoolKind pool = GlobalPoolKind::Average;
    bool use_dropout = false;
    double keep = 1.0;
};

struct ArchSpec {
    Variant variant = Variant::Bcast4;
    int64_t num_classes = 10;
    int64_t filters = 32;  // f, per-branch width
    int64_t num_blocks = 4;
    Activation act = Activation::Relu;
    NormKind norm = NormKind::Batch;
    int64_t group_size = 16;
    Initializer init = Initializer::GlorotUniform;
    double label_smoothing = 0.0;
    std::vector<LayerDesc> shallow;
    std::vector<BlockSpec> blocks;
    std::vector<LayerDesc> transition;
    DecisionSpec decision;
};

struct ArchOverrides {
    std::optional<int64_t> blocks;
    std::optional<int64_t> filters;
};

// accumulated channel widths [k0, k0+4f, ..., k0+L*4f]
std::vector<int64_t> growth_sequence(int64_t num_blocks, int64_t f = 32, int64_t k0 = 32);

// Canonical spec for a variant; throws ConfigError if the constructed spec
// violates the growth bookkeeping.
ArchSpec build_arch(Variant v, int64_t num_classes, const ArchOverrides& overrides = {});

// ---- static walkers ------------------------------------------------------

struct TraceRow {
    std::string name;            // hierarchical path, also the parameter prefix
    std::string op;              // human-readable op summary
    const LayerDesc* desc;       // null for structural rows (concat, gap, dense, ...)
    Shape in, out;
};

// Shape-level simulation of a forward pass; includes structural rows for the
// per-block concatenations, the module output, pooling and the decision head.
std::vector<TraceRow> trace_arch(const ArchSpec& arch, const Shape& input);

struct ConvCensus {
    int64_t total = 0;      // conv-class layers of any kind
    int64_t n1x1 = 0;
    int64_t n3x3 = 0;       // plain 3x3 and factorized pairs
    int64_t n5x5 = 0;
    int64_t n_separable = 0;
};

ConvCensus conv_census(const ArchSpec& arch);

enum class ParamRole { Weight, Bias, Gamma, Beta, RunningMean, RunningVar };

struct ParamShapeInfo {
    std::string name;
    Shape shape;
    ParamRole role;
    int64_t fan_in = 0, fan_out = 0;
    bool trainable = true;
};

// parameter tensors of one layer at the given input channel count
std::vector<ParamShapeInfo> layer_param_shapes(const ArchSpec& arch, const LayerDesc& d,
                                               const std::string& path, int64_t in_channels);

// all parameter tensors of the arch, in deterministic creation order
std::vector<ParamShapeInfo> arch_param_shapes(const ArchSpec& arch);

struct ParamCountRow {
    std::string name;
    int64_t count = 0;  // trainable values only
};

struct ParamCount {
    std::vector<ParamCountRow> per_layer;
    int64_t total = 0;
};

ParamCount param_count(const ArchSpec& arch);

// ---- serialization -------------------------------------------------------

// {"schema":1,"variant":...,"num_classes":...,"blocks":...,"filters":...}
std::string arch_to_json(const ArchSpec& arch);
ArchSpec arch_from_json(const std::string& json_text);

}  // namespace bcast
