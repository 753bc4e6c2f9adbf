#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <random>

#include "offsim/model_graph.hpp"

using namespace offsim;

namespace {

// Independent oracle: count multiply-accumulates by walking every output
// position and tap, the way the arithmetic is actually performed.
int64_t loop_count_macs(const LayerSpec& layer, const TensorShape& in) {
    if (layer.kind == LayerKind::FullyConnected) {
        int64_t macs = 0;
        for (int64_t oc = 0; oc < layer.out_channels; ++oc)
            for (int64_t ic = 0; ic < layer.in_channels; ++ic) ++macs;
        return macs;
    }
    if (layer.kind != LayerKind::Conv2D) return 0;
    const auto out = layer_output_shape(layer, in);
    REQUIRE(out.has_value());
    int64_t macs = 0;
    for (int64_t oc = 0; oc < out->channels; ++oc)
        for (int64_t oy = 0; oy < out->height; ++oy)
            for (int64_t ox = 0; ox < out->width; ++ox)
                for (int64_t ic = 0; ic < layer.in_channels; ++ic)
                    macs += layer.kernel_h * layer.kernel_w;
    return macs;
}

LayerSpec conv(int id, int kernel, int stride, int padding, int64_t in_ch, int64_t out_ch,
               std::vector<int> preds = {}) {
    LayerSpec layer;
    layer.id = id;
    layer.kind = LayerKind::Conv2D;
    layer.kernel_h = layer.kernel_w = kernel;
    layer.stride = stride;
    layer.padding = padding;
    layer.in_channels = in_ch;
    layer.out_channels = out_ch;
    layer.predecessors = std::move(preds);
    return layer;
}

}  // namespace

TEST_CASE("validate accepts a minimal single-conv graph") {
    ModelGraph graph;
    graph.input_shape = {1, 3, 8, 8};
    graph.layers = {conv(0, 3, 1, 1, 3, 16)};
    CHECK(validate_graph(graph).ok);
}

TEST_CASE("validate rejects forward references as ordering violations") {
    ModelGraph graph;
    graph.input_shape = {1, 3, 8, 8};
    graph.layers = {conv(0, 3, 1, 1, 3, 16)};
    LayerSpec bad = conv(1, 3, 1, 1, 16, 16, {2});  // references a later layer
    LayerSpec tail = conv(2, 3, 1, 1, 16, 16, {1});
    graph.layers.push_back(bad);
    graph.layers.push_back(tail);
    const GraphVerdict verdict = validate_graph(graph);
    CHECK_FALSE(verdict.ok);
    CHECK(verdict.fault == GraphFault::CycleDetected);
    CHECK(verdict.layer_id == 1);
}

TEST_CASE("validate flags channel mismatches at the offending layer") {
    ModelGraph graph;
    graph.input_shape = {1, 3, 8, 8};
    graph.layers = {conv(0, 3, 1, 1, 3, 32), conv(1, 3, 1, 1, 16, 16, {0})};
    const GraphVerdict verdict = validate_graph(graph);
    CHECK_FALSE(verdict.ok);
    CHECK(verdict.fault == GraphFault::ShapeMismatch);
    CHECK(verdict.layer_id == 1);
}

TEST_CASE("validate rejects dangling predecessor ids") {
    ModelGraph graph;
    graph.input_shape = {1, 3, 8, 8};
    graph.layers = {conv(0, 3, 1, 1, 3, 16), conv(1, 3, 1, 1, 16, 16, {7})};
    const GraphVerdict verdict = validate_graph(graph);
    CHECK_FALSE(verdict.ok);
    CHECK(verdict.fault == GraphFault::DanglingPredecessor);
}

TEST_CASE("shape inference") {
    SUBCASE("3x3 stride-1 pad-1 conv preserves the spatial size") {
        ModelGraph graph;
        graph.input_shape = {1, 16, 32, 32};
        graph.layers = {conv(0, 3, 1, 1, 16, 24)};
        const ShapeResult result = infer_shapes(graph);
        REQUIRE(result.verdict.ok);
        CHECK(result.shapes[0] == TensorShape{1, 24, 32, 32});
    }
    SUBCASE("2x2 stride-2 pool halves 32 to 16") {
        ModelGraph graph;
        graph.input_shape = {1, 32, 32, 32};
        LayerSpec pool;
        pool.id = 0;
        pool.kind = LayerKind::Pool2D;
        pool.kernel_h = pool.kernel_w = 2;
        pool.stride = 2;
        pool.in_channels = pool.out_channels = 32;
        graph.layers = {pool};
        const ShapeResult result = infer_shapes(graph);
        REQUIRE(result.verdict.ok);
        CHECK(result.shapes[0] == TensorShape{1, 32, 16, 16});
    }
    SUBCASE("kernel larger than the padded input is rejected") {
        ModelGraph graph;
        graph.input_shape = {1, 3, 4, 4};
        graph.layers = {conv(0, 7, 1, 0, 3, 8)};
        const ShapeResult result = infer_shapes(graph);
        CHECK_FALSE(result.verdict.ok);
        CHECK(result.verdict.fault == GraphFault::NonPositiveOutputDim);
    }
}

TEST_CASE("layer costs match the loop-count oracle") {
    SUBCASE("3x3 conv, 16ch 32x32 same-padded, 32ch out") {
        const LayerSpec layer = conv(0, 3, 1, 1, 16, 32);
        const TensorShape in{1, 16, 32, 32};
        const LayerCost cost = layer_cost(layer, in, 1);
        CHECK(cost.macs == 4718592);
        CHECK(cost.macs == loop_count_macs(layer, in));
        CHECK(cost.weight_bytes == 16 * 32 * 9);
        CHECK(cost.input_bytes == 16 * 32 * 32);
        CHECK(cost.output_bytes == 32 * 32 * 32);
    }
    SUBCASE("activation has zero macs") {
        LayerSpec act;
        act.kind = LayerKind::Activation;
        act.in_channels = act.out_channels = 8;
        const LayerCost cost = layer_cost(act, {1, 8, 16, 16}, 1);
        CHECK(cost.macs == 0);
        CHECK(cost.arithmetic_intensity == 0.0);
    }
    SUBCASE("fully connected 256 -> 10") {
        LayerSpec fc;
        fc.kind = LayerKind::FullyConnected;
        fc.in_channels = 256;
        fc.out_channels = 10;
        const LayerCost cost = layer_cost(fc, {1, 256, 1, 1}, 1);
        CHECK(cost.macs == 2560);
        CHECK(cost.macs == loop_count_macs(fc, {1, 256, 1, 1}));
    }
    SUBCASE("elementwise add counts two input tensors and no weights") {
        LayerSpec add;
        add.kind = LayerKind::ElementwiseAdd;
        add.in_channels = add.out_channels = 8;
        add.predecessors = {0, 1};
        const LayerCost cost = layer_cost(add, {1, 8, 4, 4}, 1);
        CHECK(cost.macs == 0);
        CHECK(cost.weight_bytes == 0);
        CHECK(cost.input_bytes == 2 * 8 * 4 * 4);
        CHECK(cost.output_bytes == 8 * 4 * 4);
    }
    SUBCASE("random conv layers agree with the oracle") {
        std::mt19937_64 rng(11);
        std::uniform_int_distribution<int> kernel_dist(1, 5);
        std::uniform_int_distribution<int> dim_dist(6, 24);
        std::uniform_int_distribution<int64_t> ch_dist(1, 24);
        for (int i = 0; i < 40; ++i) {
            const int kernel = kernel_dist(rng);
            const LayerSpec layer = conv(0, kernel, 1 + i % 2, kernel / 2, ch_dist(rng), ch_dist(rng));
            const TensorShape in{1, layer.in_channels, dim_dist(rng), dim_dist(rng)};
            if (!layer_output_shape(layer, in)) continue;
            CHECK(layer_cost(layer, in, 1).macs == loop_count_macs(layer, in));
        }
    }
}

TEST_CASE("bytes-per-element scales byte fields only") {
    const LayerSpec layer = conv(0, 3, 1, 1, 16, 32);
    const TensorShape in{1, 16, 32, 32};
    const LayerCost c1 = layer_cost(layer, in, 1);
    const LayerCost c4 = layer_cost(layer, in, 4);
    CHECK(c1.macs == c4.macs);
    CHECK(c4.weight_bytes == 4 * c1.weight_bytes);
    CHECK(c4.input_bytes == 4 * c1.input_bytes);
    CHECK(c4.output_bytes == 4 * c1.output_bytes);
}

TEST_CASE("conv arithmetic intensity strictly increases with kernel area") {
    // Same-padded family over fixed input/output tensors.
    double previous = -1.0;
    for (int kernel : {1, 3, 5, 7}) {
        const LayerSpec layer = conv(0, kernel, 1, kernel / 2, 16, 16);
        const LayerCost cost = layer_cost(layer, {1, 16, 32, 32}, 1);
        CHECK(cost.arithmetic_intensity > previous);
        previous = cost.arithmetic_intensity;
    }
}

TEST_CASE("resnet-like generator") {
    SUBCASE("one block yields exactly 8 layers ending in a classifier") {
        const ModelGraph graph = build_resnet_like(1, 16, {1, 3, 32, 32});
        CHECK(graph.layers.size() == 8);
        CHECK(graph.layers.back().kind == LayerKind::FullyConnected);
        CHECK(validate_graph(graph).ok);
    }
    SUBCASE("every generated graph validates") {
        for (int blocks = 1; blocks <= 6; ++blocks) {
            const ModelGraph graph = build_resnet_like(blocks, 8, {1, 3, 32, 32});
            CHECK(validate_graph(graph).ok);
            CHECK(infer_shapes(graph).verdict.ok);
        }
    }
    SUBCASE("four blocks downsample twice before pooling") {
        const ModelGraph graph = build_resnet_like(4, 16, {1, 3, 32, 32});
        const ShapeResult shapes = infer_shapes(graph);
        REQUIRE(shapes.verdict.ok);
        // The layer feeding the pool carries the final spatial size.
        const LayerSpec& pool = graph.layers[graph.layers.size() - 2];
        REQUIRE(pool.kind == LayerKind::Pool2D);
        const TensorShape& before_pool = shapes.shapes[pool.predecessors.front()];
        CHECK(before_pool.height == 8);
        CHECK(before_pool.width == 8);
        CHECK(shapes.shapes[pool.id].height == 1);
        CHECK(shapes.shapes[pool.id].width == 1);
    }
}

TEST_CASE("total macs are invariant under topological reordering of storage") {
    // Diamond: stem feeding two parallel convs joined by an add. Both branch
    // orders are valid topological storage orders.
    auto build = [](bool branch_a_first) {
        ModelGraph graph;
        graph.input_shape = {1, 3, 16, 16};
        graph.layers.push_back(conv(0, 3, 1, 1, 3, 8));
        LayerSpec branch_a = conv(1, 3, 1, 1, 8, 8, {0});
        LayerSpec branch_b = conv(2, 1, 1, 0, 8, 8, {0});
        if (!branch_a_first) {
            std::swap(branch_a, branch_b);
            branch_a.id = 1;
            branch_b.id = 2;
        }
        graph.layers.push_back(branch_a);
        graph.layers.push_back(branch_b);
        LayerSpec add;
        add.id = 3;
        add.kind = LayerKind::ElementwiseAdd;
        add.in_channels = add.out_channels = 8;
        add.predecessors = {1, 2};
        graph.layers.push_back(add);
        return graph;
    };

    int64_t totals[2];
    for (int variant = 0; variant < 2; ++variant) {
        const ModelGraph graph = build(variant == 0);
        REQUIRE(validate_graph(graph).ok);
        const ShapeResult shapes = infer_shapes(graph);
        REQUIRE(shapes.verdict.ok);
        totals[variant] = total_macs(graph_costs(graph, shapes.shapes, 1));
    }
    CHECK(totals[0] == totals[1]);
}

TEST_CASE("model json round trip") {
    const ModelGraph graph = build_resnet_like(2, 8, {1, 3, 16, 16});
    const std::string text = model_to_json(graph);
    const ModelGraph reloaded = model_from_json(text);
    REQUIRE(reloaded.layers.size() == graph.layers.size());
    CHECK(model_to_json(reloaded) == text);
    CHECK(reloaded.input_shape == graph.input_shape);
    for (size_t i = 0; i < graph.layers.size(); ++i) {
        CHECK(reloaded.layers[i].kind == graph.layers[i].kind);
        CHECK(reloaded.layers[i].predecessors == graph.layers[i].predecessors);
    }
}
