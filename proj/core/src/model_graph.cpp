#include "offsim/model_graph.hpp"

#include <algorithm>

namespace offsim {

const char* to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv2D: return "Conv2D";
        case LayerKind::Pool2D: return "Pool2D";
        case LayerKind::FullyConnected: return "FullyConnected";
        case LayerKind::Activation: return "Activation";
        case LayerKind::ElementwiseAdd: return "ElementwiseAdd";
    }
    return "?";
}

std::optional<LayerKind> layer_kind_from_string(const std::string& name) {
    if (name == "Conv2D") return LayerKind::Conv2D;
    if (name == "Pool2D") return LayerKind::Pool2D;
    if (name == "FullyConnected") return LayerKind::FullyConnected;
    if (name == "Activation") return LayerKind::Activation;
    if (name == "ElementwiseAdd") return LayerKind::ElementwiseAdd;
    return std::nullopt;
}

const char* to_string(GraphFault fault) {
    switch (fault) {
        case GraphFault::None: return "None";
        case GraphFault::CycleDetected: return "CycleDetected";
        case GraphFault::ShapeMismatch: return "ShapeMismatch";
        case GraphFault::DanglingPredecessor: return "DanglingPredecessor";
        case GraphFault::NonPositiveOutputDim: return "NonPositiveOutputDim";
    }
    return "?";
}

GraphVerdict validate_graph(const ModelGraph& graph) {
    if (graph.layers.empty())
        return GraphVerdict::fail(GraphFault::DanglingPredecessor, -1, "graph has no layers");
    if (graph.input_shape.batch < 1 || graph.input_shape.channels < 1 ||
        graph.input_shape.height < 1 || graph.input_shape.width < 1)
        return GraphVerdict::fail(GraphFault::ShapeMismatch, -1, "input_shape dimensions must be >= 1");

    const int n = static_cast<int>(graph.layers.size());
    int roots = 0;
    for (int i = 0; i < n; ++i) {
        const LayerSpec& layer = graph.layers[i];
        if (layer.id != i)
            return GraphVerdict::fail(GraphFault::CycleDetected, layer.id,
                                      "layer ids must be dense ordinals matching storage order");
        if (layer.kernel_h < 1 || layer.kernel_w < 1 || layer.stride < 1 || layer.padding < 0)
            return GraphVerdict::fail(GraphFault::ShapeMismatch, layer.id,
                                      "kernel and stride must be >= 1, padding >= 0");
        if (layer.in_channels < 1 || layer.out_channels < 1)
            return GraphVerdict::fail(GraphFault::ShapeMismatch, layer.id, "channel counts must be >= 1");

        if (!layer.is_spatial() &&
            (layer.kernel_h != 1 || layer.kernel_w != 1 || layer.stride != 1 || layer.padding != 0))
            return GraphVerdict::fail(GraphFault::ShapeMismatch, layer.id,
                                      "non-spatial kinds carry kernel=1x1, stride=1, padding=0");

        if (layer.kind == LayerKind::ElementwiseAdd) {
            if (layer.predecessors.size() != 2)
                return GraphVerdict::fail(GraphFault::DanglingPredecessor, layer.id,
                                          "ElementwiseAdd requires exactly 2 predecessors");
        } else if (layer.predecessors.size() > 1) {
            return GraphVerdict::fail(GraphFault::DanglingPredecessor, layer.id,
                                      "only ElementwiseAdd may have more than one predecessor");
        }

        if (layer.kind == LayerKind::Pool2D || layer.kind == LayerKind::Activation ||
            layer.kind == LayerKind::ElementwiseAdd) {
            if (layer.out_channels != layer.in_channels)
                return GraphVerdict::fail(GraphFault::ShapeMismatch, layer.id,
                                          "kind preserves the channel count");
        }

        for (int pred : layer.predecessors) {
            if (pred < 0 || pred >= n)
                return GraphVerdict::fail(GraphFault::DanglingPredecessor, layer.id,
                                          "predecessor id out of range");
            if (pred >= layer.id)
                return GraphVerdict::fail(GraphFault::CycleDetected, layer.id,
                                          "predecessor appears at or after the layer; stored order "
                                          "must be topological");
            if (graph.layers[pred].out_channels != layer.in_channels)
                return GraphVerdict::fail(GraphFault::ShapeMismatch, layer.id,
                                          "in_channels must equal the predecessor's out_channels");
        }

        if (layer.predecessors.empty()) {
            ++roots;
            if (layer.in_channels != graph.input_shape.channels)
                return GraphVerdict::fail(GraphFault::ShapeMismatch, layer.id,
                                          "input-consuming layer must match input_shape channels");
        }
    }
    if (roots != 1)
        return GraphVerdict::fail(GraphFault::DanglingPredecessor, -1,
                                  "exactly one layer must consume the graph input");
    return GraphVerdict::pass();
}

std::optional<TensorShape> layer_output_shape(const LayerSpec& layer, const TensorShape& in_shape) {
    switch (layer.kind) {
        case LayerKind::Conv2D:
        case LayerKind::Pool2D: {
            const int64_t oh =
                (in_shape.height + 2 * layer.padding - layer.kernel_h) / layer.stride + 1;
            const int64_t ow =
                (in_shape.width + 2 * layer.padding - layer.kernel_w) / layer.stride + 1;
            if (in_shape.height + 2 * layer.padding < layer.kernel_h ||
                in_shape.width + 2 * layer.padding < layer.kernel_w || oh < 1 || ow < 1)
                return std::nullopt;
            return TensorShape{in_shape.batch, layer.out_channels, oh, ow};
        }
        case LayerKind::FullyConnected:
            return TensorShape{in_shape.batch, layer.out_channels, 1, 1};
        case LayerKind::Activation:
        case LayerKind::ElementwiseAdd:
            return in_shape;
    }
    return std::nullopt;
}

ShapeResult infer_shapes(const ModelGraph& graph) {
    ShapeResult result;
    result.shapes.resize(graph.layers.size());
    for (const LayerSpec& layer : graph.layers) {
        TensorShape in_shape;
        if (layer.predecessors.empty()) {
            in_shape = graph.input_shape;
        } else {
            in_shape = result.shapes[layer.predecessors.front()];
            if (layer.kind == LayerKind::ElementwiseAdd) {
                const TensorShape& other = result.shapes[layer.predecessors.back()];
                if (!(other == in_shape)) {
                    result.verdict = GraphVerdict::fail(GraphFault::ShapeMismatch, layer.id,
                                                        "ElementwiseAdd operands differ in shape");
                    return result;
                }
            }
        }
        if (layer.kind == LayerKind::FullyConnected &&
            (in_shape.height != 1 || in_shape.width != 1 || in_shape.channels != layer.in_channels)) {
            result.verdict = GraphVerdict::fail(GraphFault::ShapeMismatch, layer.id,
                                                "FullyConnected expects a (batch, C, 1, 1) input");
            return result;
        }
        std::optional<TensorShape> out = layer_output_shape(layer, in_shape);
        if (!out) {
            result.verdict = GraphVerdict::fail(GraphFault::NonPositiveOutputDim, layer.id,
                                                "kernel exceeds the padded input");
            return result;
        }
        result.shapes[layer.id] = *out;
    }
    return result;
}

LayerCost layer_cost(const LayerSpec& layer, const TensorShape& in_shape, int bytes_per_element) {
    LayerCost cost;
    const std::optional<TensorShape> out = layer_output_shape(layer, in_shape);
    const TensorShape out_shape = out.value_or(TensorShape{1, layer.out_channels, 0, 0});

    switch (layer.kind) {
        case LayerKind::Conv2D:
            cost.macs = out_shape.height * out_shape.width * layer.out_channels *
                        layer.in_channels * layer.kernel_h * layer.kernel_w;
            cost.weight_bytes =
                layer.in_channels * layer.out_channels * layer.kernel_h * layer.kernel_w;
            break;
        case LayerKind::FullyConnected:
            cost.macs = layer.in_channels * layer.out_channels;
            cost.weight_bytes = layer.in_channels * layer.out_channels;
            break;
        case LayerKind::Pool2D:
        case LayerKind::Activation:
        case LayerKind::ElementwiseAdd:
            cost.macs = 0;
            cost.weight_bytes = 0;
            break;
    }
    cost.weight_bytes *= bytes_per_element;

    // ElementwiseAdd streams both operand tensors.
    const int64_t input_tensors = layer.kind == LayerKind::ElementwiseAdd ? 2 : 1;
    cost.input_bytes = input_tensors * in_shape.elements_per_image() * bytes_per_element;
    cost.output_bytes = out_shape.elements_per_image() * bytes_per_element;

    const int64_t moved = cost.total_bytes();
    cost.arithmetic_intensity = moved > 0 ? static_cast<double>(cost.macs) / moved : 0.0;
    return cost;
}

std::vector<LayerCost> graph_costs(const ModelGraph& graph, const std::vector<TensorShape>& shapes,
                                   int bytes_per_element) {
    std::vector<LayerCost> costs;
    costs.reserve(graph.layers.size());
    for (const LayerSpec& layer : graph.layers) {
        const TensorShape in_shape =
            layer.predecessors.empty() ? graph.input_shape : shapes[layer.predecessors.front()];
        costs.push_back(layer_cost(layer, in_shape, bytes_per_element));
    }
    return costs;
}

int64_t total_macs(const std::vector<LayerCost>& costs) {
    int64_t sum = 0;
    for (const LayerCost& c : costs) sum += c.macs;
    return sum;
}

ModelGraph build_resnet_like(int num_blocks, int64_t base_channels, TensorShape input_shape,
                             int64_t num_classes) {
    ModelGraph graph;
    graph.input_shape = input_shape;

    int next_id = 0;
    auto push = [&](LayerSpec layer) {
        layer.id = next_id++;
        graph.layers.push_back(std::move(layer));
        return layer.id;
    };
    auto spatial_out = [](int64_t dim, int kernel, int stride, int padding) {
        return (dim + 2 * padding - kernel) / stride + 1;
    };

    int64_t channels = base_channels;
    int64_t h = input_shape.height;
    int64_t w = input_shape.width;

    LayerSpec stem;
    stem.kind = LayerKind::Conv2D;
    stem.kernel_h = stem.kernel_w = 3;
    stem.stride = 1;
    stem.padding = 1;
    stem.in_channels = input_shape.channels;
    stem.out_channels = channels;
    int last = push(stem);
    h = spatial_out(h, 3, 1, 1);
    w = spatial_out(w, 3, 1, 1);

    for (int b = 1; b <= num_blocks; ++b) {
        const bool downsample = b % 2 == 0;
        const int64_t out_channels = downsample ? channels * 2 : channels;
        const int stride = downsample ? 2 : 1;

        LayerSpec conv1;
        conv1.kind = LayerKind::Conv2D;
        conv1.kernel_h = conv1.kernel_w = 3;
        conv1.stride = stride;
        conv1.padding = 1;
        conv1.in_channels = channels;
        conv1.out_channels = out_channels;
        conv1.predecessors = {last};
        int conv1_id = push(conv1);
        h = spatial_out(h, 3, stride, 1);
        w = spatial_out(w, 3, stride, 1);

        LayerSpec act1;
        act1.kind = LayerKind::Activation;
        act1.in_channels = act1.out_channels = out_channels;
        act1.predecessors = {conv1_id};
        int act1_id = push(act1);

        LayerSpec conv2;
        conv2.kind = LayerKind::Conv2D;
        conv2.kernel_h = conv2.kernel_w = 3;
        conv2.stride = 1;
        conv2.padding = 1;
        conv2.in_channels = out_channels;
        conv2.out_channels = out_channels;
        conv2.predecessors = {act1_id};
        int conv2_id = push(conv2);

        // Residual over the second conv; the skip taps the first activation so
        // shapes always agree, downsampling blocks included.
        LayerSpec add;
        add.kind = LayerKind::ElementwiseAdd;
        add.in_channels = add.out_channels = out_channels;
        add.predecessors = {conv2_id, act1_id};
        int add_id = push(add);

        LayerSpec act2;
        act2.kind = LayerKind::Activation;
        act2.in_channels = act2.out_channels = out_channels;
        act2.predecessors = {add_id};
        last = push(act2);

        channels = out_channels;
    }

    LayerSpec pool;  // global average pool down to 1x1
    pool.kind = LayerKind::Pool2D;
    pool.kernel_h = static_cast<int>(h);
    pool.kernel_w = static_cast<int>(w);
    pool.stride = 1;
    pool.padding = 0;
    pool.in_channels = pool.out_channels = channels;
    pool.predecessors = {last};
    last = push(pool);

    LayerSpec fc;
    fc.kind = LayerKind::FullyConnected;
    fc.in_channels = channels;
    fc.out_channels = num_classes;
    fc.predecessors = {last};
    push(fc);

    return graph;
}

}  // namespace offsim
