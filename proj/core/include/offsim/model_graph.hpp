#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace offsim {

// NCHW tensor dimensions. Fully-connected tensors use height = width = 1.
struct TensorShape {
    int64_t batch = 1;
    int64_t channels = 1;
    int64_t height = 1;
    int64_t width = 1;

    int64_t elements() const { return batch * channels * height * width; }
    // Per-image element count; all cost accounting is per single image.
    int64_t elements_per_image() const { return channels * height * width; }
    bool operator==(const TensorShape&) const = default;
};

enum class LayerKind {
    Conv2D,
    Pool2D,
    FullyConnected,
    Activation,
    ElementwiseAdd,
};

const char* to_string(LayerKind kind);
std::optional<LayerKind> layer_kind_from_string(const std::string& name);

struct LayerSpec {
    int id = 0;
    LayerKind kind = LayerKind::Conv2D;
    int kernel_h = 1;
    int kernel_w = 1;
    int stride = 1;
    int padding = 0;
    int64_t in_channels = 1;
    int64_t out_channels = 1;
    std::vector<int> predecessors;

    // Spatial kinds interpret kernel/stride/padding; the rest carry (1,1,1,0).
    bool is_spatial() const { return kind == LayerKind::Conv2D || kind == LayerKind::Pool2D; }
    bool has_weights() const {
        return kind == LayerKind::Conv2D || kind == LayerKind::FullyConnected;
    }
};

// Layers are stored in topological order with dense ids (layers[i].id == i).
// The order is fixed at load time so placement vectors stay stable.
struct ModelGraph {
    std::vector<LayerSpec> layers;
    TensorShape input_shape;

    int64_t layer_count() const { return static_cast<int64_t>(layers.size()); }
};

// Per-layer cost metrics at a given element width, per single image.
struct LayerCost {
    int64_t macs = 0;
    int64_t weight_bytes = 0;
    int64_t input_bytes = 0;
    int64_t output_bytes = 0;
    double arithmetic_intensity = 0.0;  // macs per byte moved

    int64_t total_bytes() const { return weight_bytes + input_bytes + output_bytes; }
};

enum class GraphFault {
    None,
    CycleDetected,
    ShapeMismatch,
    DanglingPredecessor,
    NonPositiveOutputDim,
};

const char* to_string(GraphFault fault);

struct GraphVerdict {
    bool ok = true;
    GraphFault fault = GraphFault::None;
    int layer_id = -1;
    std::string rule;

    explicit operator bool() const { return ok; }

    static GraphVerdict pass() { return {}; }
    static GraphVerdict fail(GraphFault fault, int layer_id, std::string rule) {
        return {false, fault, layer_id, std::move(rule)};
    }
};

GraphVerdict validate_graph(const ModelGraph& graph);

struct ShapeResult {
    std::vector<TensorShape> shapes;  // output shape per layer id
    GraphVerdict verdict;

    explicit operator bool() const { return verdict.ok; }
};

// Output shapes per layer. Conv2D/Pool2D spatial size follows
// floor((in + 2*padding - kernel)/stride) + 1.
ShapeResult infer_shapes(const ModelGraph& graph);

// Output shape of a single layer given its input shape. Returns nullopt when a
// kernel exceeds the padded input (NonPositiveOutputDim).
std::optional<TensorShape> layer_output_shape(const LayerSpec& layer, const TensorShape& in_shape);

LayerCost layer_cost(const LayerSpec& layer, const TensorShape& in_shape, int bytes_per_element);

// Costs for every layer, aligned with graph.layers.
std::vector<LayerCost> graph_costs(const ModelGraph& graph,
                                   const std::vector<TensorShape>& shapes,
                                   int bytes_per_element);

int64_t total_macs(const std::vector<LayerCost>& costs);

// Deterministic classifier generator: stem conv, `num_blocks` residual blocks
// (conv-act-conv-add-act, channel doubling plus stride-2 downsample on every
// second block), global average pool, fully-connected classifier.
ModelGraph build_resnet_like(int num_blocks, int64_t base_channels, TensorShape input_shape,
                             int64_t num_classes = 10);

// JSON model config, schema:
// {"input_shape":[n,c,h,w],"layers":[{"id":0,"kind":"Conv2D","kernel":[3,3],
//  "stride":1,"padding":1,"in_channels":3,"out_channels":16,"pred":[]},...]}
std::string model_to_json(const ModelGraph& graph);
ModelGraph model_from_json(const std::string& text);
ModelGraph load_model(const std::string& path);
void save_model(const ModelGraph& graph, const std::string& path);

}  // namespace offsim
