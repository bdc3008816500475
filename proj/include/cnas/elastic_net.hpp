#pragma once

// Weight-shared inverted-residual supernet. Every subnetwork is a prefix
// slice of one parameter store: first `depth` layers of a block, first
// ceil(cin * width) expanded channels of a layer, centered k x k window of
// the stored depthwise kernel.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cnas/arch_space.hpp"
#include "cnas/tensor.hpp"

namespace cnas {

struct BaseArchConfig {
    int input_channels = 3;
    int input_side = 32;
    int stem_channels = 8;
    int stem_stride = 2;
    std::vector<int> block_channels{8, 12, 16, 24, 32};
    std::vector<int> block_strides{1, 2, 2, 1, 2};
    int classes = 10;
    double width_multiplier = 1.0;

    bool operator==(const BaseArchConfig&) const = default;

    void check() const;
    int blocks() const { return static_cast<int>(block_channels.size()); }
    // Channel count after the width multiplier.
    int scaled(int channels) const;
    int stem_out() const { return scaled(stem_channels); }
    int block_out(int block) const { return scaled(block_channels[static_cast<std::size_t>(block)]); }

    // Desk-scale default used throughout the tests.
    static BaseArchConfig toy();
    // MobileNetV3-like dimensions at 224 px for FLOP sanity checks.
    static BaseArchConfig mobilenet_v3_reference();
};

nlohmann::json to_json(const BaseArchConfig& base);
BaseArchConfig base_from_json(const nlohmann::json& j);

// Expanded (inner) channel count of a layer with `cin` inputs at ratio w.
int expanded_channels(int cin, double width);

struct ParamTensor {
    std::string name;
    std::vector<int> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
};

struct LayerLayout {
    int cin = 0, cout = 0, emax = 0, stride = 1;
    bool residual = false;
    std::size_t expand_w, expand_s, expand_b;  // offsets into the flat store
    std::size_t dw_w, dw_s, dw_b;
    std::size_t proj_w, proj_s, proj_b;
};

struct NetLayout {
    int kmax = 0;
    std::size_t stem_w = 0, stem_s = 0, stem_b = 0;
    std::size_t head_w = 0, head_b = 0;
    int head_in = 0;
    std::vector<std::vector<LayerLayout>> blocks;
    std::vector<ParamTensor> tensors;  // declaration order
    std::size_t total = 0;

    static NetLayout build(const BaseArchConfig& base, const SearchSpaceDef& space);
};

struct SupernetParams {
    BaseArchConfig base;
    SearchSpaceDef space;
    std::uint64_t seed = 0;
    NetLayout layout;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

SupernetParams build_supernet(const BaseArchConfig& base, const SearchSpaceDef& space, std::uint64_t seed);

struct ActiveLayer {
    const LayerLayout* layout = nullptr;
    int expanded = 0;
    int kernel = 0;
};

// Non-owning view of the parameters selected by an architecture.
struct SubnetView {
    const SupernetParams* params = nullptr;
    ArchSpec arch;
    std::vector<std::vector<ActiveLayer>> blocks;

    int resolution() const { return arch.resolution; }
    SubnetView with_resolution(int resolution) const;
};

// Validates the architecture against the supernet's space with coupling
// relaxed (any stored slice is addressable); throws InvalidArch.
SubnetView slice_subnet(const SupernetParams& params, const ArchSpec& arch);

// 1 for every flat parameter index read by the view.
std::vector<std::uint8_t> slice_mask(const SubnetView& view);

// Class scores for a batch whose side equals the view's resolution;
// throws ShapeMismatch otherwise.
Matrix forward(const SubnetView& view, const Tensor& batch);

struct KdConfig {
    double lambda = 1.0;
    double temperature = 1.0;
};

// Mean over the batch of CE(scores, labels) plus, when teacher scores are
// given, lambda * CE(scores/T, softmax(teacher/T)). Gradients scaled by
// `grad_scale` are added into `grad` (sized like the store); indices read
// by the view are flagged in `touched`.
double loss_and_gradient(const SubnetView& view, const Tensor& batch, std::span<const int> labels,
                         const Matrix* teacher_scores, const KdConfig& kd, std::vector<double>* grad,
                         double grad_scale = 1.0, std::vector<std::uint8_t>* touched = nullptr);

struct SgdConfig {
    double momentum = 0.9;
    double weight_decay = 0.0;
    // Rescale the gradient to this global L2 norm when it is larger (0 = off).
    double clip_norm = 0.0;
};

struct SgdState {
    std::vector<double> velocity;
    static SgdState for_params(const SupernetParams& p) { return SgdState{std::vector<double>(p.size(), 0.0)}; }
};

// One optimizer step on the mean loss of the sampled subnetworks. Only
// parameters inside at least one sampled slice (and their velocity
// entries) change. The batch is resized to each architecture's
// resolution. Throws NonFiniteLoss before touching any state.
double train_step(SupernetParams& params, SgdState& state, std::span<const ArchSpec> archs, const Tensor& batch,
                  std::span<const int> labels, const SubnetView* teacher, double lr, const KdConfig& kd,
                  const SgdConfig& sgd = {});

// Top-1 accuracy on the given images, resized to the view's resolution.
double evaluate_accuracy(const SubnetView& view, const Tensor& images, std::span<const int> labels,
                         int batch_size = 250);

}  // namespace cnas
