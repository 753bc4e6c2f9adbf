#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "offsim/exec_sim.hpp"
#include "offsim/errors.hpp"
#include "support/generators.hpp"

using namespace offsim;

namespace {

AccelConfig test_accel() {
    AccelConfig cfg;
    cfg.num_macs = 512;
    cfg.clock_hz = 200e6;
    cfg.onchip_buffer_bytes = 256 << 10;
    cfg.per_layer_setup_s = 20e-6;
    cfg.active_power_w = 28.0;
    return cfg;
}

HostConfig test_host() {
    HostConfig host;
    host.name = "cpu";
    host.effective_macs_per_sec = 2e9;
    host.per_layer_overhead_s = 30e-6;
    host.power_w = 85.0;
    return host;
}

void check_resource_exclusivity(const Timeline& timeline) {
    std::map<Resource, std::vector<Segment>> by_resource;
    for (const Segment& seg : timeline.segments) {
        CHECK(seg.end_s >= seg.start_s);
        by_resource[seg.resource].push_back(seg);
    }
    for (auto& [resource, segments] : by_resource) {
        std::sort(segments.begin(), segments.end(),
                  [](const Segment& a, const Segment& b) { return a.start_s < b.start_s; });
        for (size_t i = 1; i < segments.size(); ++i)
            CHECK(segments[i].start_s >= segments[i - 1].end_s - 1e-12);
    }
}

double resource_busy(const Timeline& timeline, Resource r) {
    double busy = 0;
    for (const Segment& seg : timeline.segments)
        if (seg.resource == r) busy += seg.end_s - seg.start_s;
    return busy;
}

}  // namespace

TEST_CASE("all-cpu assignment sums host layer times with no dma") {
    const ModelGraph graph = build_resnet_like(2, 8, {1, 3, 16, 16});
    const AccelConfig accel = test_accel();
    const HostConfig host = test_host();
    const Assignment all_cpu = Assignment::uniform(graph.layer_count(), Placement::Cpu);
    const SimResult sim = simulate_assignment(graph, all_cpu, accel, host);

    const ShapeResult shapes = infer_shapes(graph);
    const auto costs = graph_costs(graph, shapes.shapes, 1);
    double expected = 0;
    for (const LayerCost& cost : costs) expected += host_layer_time(cost, host);
    CHECK(sim.makespan_s == doctest::Approx(expected).epsilon(1e-12));
    for (const Segment& seg : sim.timeline.segments)
        CHECK(seg.resource == Resource::CpuCompute);
    CHECK(sim.energy_j == doctest::Approx(host.power_w * sim.makespan_s).epsilon(1e-12));
}

TEST_CASE("single fpga layer produces the expected event sequence") {
    ModelGraph graph;
    graph.input_shape = {1, 8, 16, 16};
    LayerSpec layer;
    layer.id = 0;
    layer.kind = LayerKind::Conv2D;
    layer.kernel_h = layer.kernel_w = 3;
    layer.stride = 1;
    layer.padding = 1;
    layer.in_channels = 8;
    layer.out_channels = 8;
    graph.layers = {layer};

    const AccelConfig accel = test_accel();
    const SimResult sim = simulate_assignment(graph, Assignment::uniform(1, Placement::Fpga), accel,
                                              test_host());

    // setup, dma-in, compute, dma-out in strict order for a single tile.
    REQUIRE(sim.timeline.segments.size() == 4);
    const Segment& setup = sim.timeline.segments[0];
    const Segment& in = sim.timeline.segments[1];
    const Segment& comp = sim.timeline.segments[2];
    const Segment& out = sim.timeline.segments[3];
    CHECK(setup.resource == Resource::FpgaCompute);
    CHECK(setup.end_s == doctest::Approx(accel.per_layer_setup_s));
    CHECK(in.resource == Resource::DmaIn);
    CHECK(in.start_s == doctest::Approx(setup.end_s));
    CHECK(comp.resource == Resource::FpgaCompute);
    CHECK(comp.start_s == doctest::Approx(in.end_s));
    CHECK(out.resource == Resource::DmaOut);
    CHECK(out.start_s == doctest::Approx(comp.end_s));
    CHECK(sim.makespan_s == doctest::Approx(out.end_s));

    const ShapeResult shapes = infer_shapes(graph);
    const auto costs = graph_costs(graph, shapes.shapes, 1);
    const auto plan = plan_tiles(costs[0], tile_atoms(layer, shapes.shapes[0]), accel);
    const FpgaLayerTime t = fpga_layer_time(costs[0], *plan, accel);
    CHECK(sim.makespan_s == doctest::Approx(t.seconds).epsilon(1e-12));
}

TEST_CASE("alternating placements add exactly one transfer per flip edge") {
    const ModelGraph graph = build_resnet_like(1, 8, {1, 3, 16, 16});  // 8-layer chain + skip
    const AccelConfig accel = test_accel();
    Assignment alternating;
    alternating.placement.resize(graph.layers.size());
    for (size_t i = 0; i < graph.layers.size(); ++i)
        alternating.placement[i] = i % 2 == 0 ? Placement::Cpu : Placement::Fpga;

    const SimResult sim = simulate_assignment(graph, alternating, accel, test_host());

    int64_t flip_edges = 0;
    for (const LayerSpec& layer : graph.layers)
        for (int pred : layer.predecessors)
            if (alternating.placement[static_cast<size_t>(pred)] !=
                alternating.placement[static_cast<size_t>(layer.id)])
                ++flip_edges;

    // Boundary transfers are the whole-layer DMA segments (tile == -1).
    int64_t boundary_segments = 0;
    for (const Segment& seg : sim.timeline.segments)
        if ((seg.resource == Resource::DmaIn || seg.resource == Resource::DmaOut) &&
            seg.tile_index == -1)
            ++boundary_segments;
    CHECK(boundary_segments == flip_edges);
    CHECK(flip_edges > 0);
}

TEST_CASE("simulation properties over random instances") {
    std::mt19937_64 rng(31);
    int instances = 0;
    for (int i = 0; i < 120; ++i) {
        const ModelGraph graph = testgen::random_graph(rng, 10);
        if (!validate_graph(graph).ok) continue;
        const AccelConfig accel = testgen::random_accel(rng);
        const HostConfig host = testgen::random_host(rng);
        ExecutionSim probe(graph, accel, host, SimOptions{.record_timeline = false});

        Assignment assignment;
        assignment.placement.resize(graph.layers.size());
        std::uniform_int_distribution<int> coin(0, 1);
        for (size_t li = 0; li < graph.layers.size(); ++li)
            assignment.placement[li] = coin(rng) == 1 && probe.fpga_feasible(static_cast<int>(li))
                                           ? Placement::Fpga
                                           : Placement::Cpu;

        const SimResult sim = simulate_assignment(graph, assignment, accel, host);
        ++instances;

        check_resource_exclusivity(sim.timeline);

        // Overlap never hurts.
        const SimResult serial = simulate_assignment(graph, assignment, accel, host,
                                                     SimOptions{.serialized = true});
        CHECK(sim.makespan_s <= serial.makespan_s + 1e-12);

        // Lower bound: no resource class can beat its own busy time.
        const double cpu = resource_busy(sim.timeline, Resource::CpuCompute);
        const double fpga = resource_busy(sim.timeline, Resource::FpgaCompute);
        const double dma = resource_busy(sim.timeline, Resource::DmaIn) +
                           resource_busy(sim.timeline, Resource::DmaOut);
        CHECK(sim.makespan_s >= std::max({cpu, fpga, dma}) - 1e-12);

        // Determinism: bit-identical reruns.
        const SimResult again = simulate_assignment(graph, assignment, accel, host);
        CHECK(again.makespan_s == sim.makespan_s);
        CHECK(again.energy_j == sim.energy_j);
        REQUIRE(again.timeline.segments.size() == sim.timeline.segments.size());
        for (size_t s = 0; s < sim.timeline.segments.size(); ++s) {
            CHECK(again.timeline.segments[s].start_s == sim.timeline.segments[s].start_s);
            CHECK(again.timeline.segments[s].end_s == sim.timeline.segments[s].end_s);
        }
    }
    CHECK(instances > 60);
}

TEST_CASE("untileable fpga placement raises an infeasibility error") {
    ModelGraph graph;
    graph.input_shape = {1, 64, 64, 64};
    LayerSpec act;
    act.id = 0;
    act.kind = LayerKind::Activation;
    act.in_channels = act.out_channels = 64;
    graph.layers = {act};

    AccelConfig accel = test_accel();
    accel.onchip_buffer_bytes = 16;  // even one row cannot fit
    CHECK_THROWS_AS(
        simulate_assignment(graph, Assignment::uniform(1, Placement::Fpga), accel, test_host()),
        InfeasibleAssignment);
}

TEST_CASE("metric consistency") {
    SUBCASE("power is energy over makespan") {
        SimResult sim;
        sim.makespan_s = 1.0;
        sim.energy_j = 10.0;
        const RunReport report = report_metrics(sim, Assignment::uniform(3, Placement::Cpu), 0.0);
        CHECK(report.power_w == doctest::Approx(10.0));
        CHECK(report.efficiency_images_per_s_per_w * report.power_w ==
              doctest::Approx(report.throughput_images_per_s).epsilon(1e-12));
        CHECK(report.energy_j_per_image ==
              doctest::Approx(report.power_w * sim.makespan_s).epsilon(1e-12));
    }
    SUBCASE("stream overhead feeds throughput") {
        SimResult sim;
        sim.makespan_s = 4e-3;
        sim.energy_j = 85.0 * 4e-3;
        const RunReport report =
            report_metrics(sim, Assignment::uniform(1, Placement::Cpu), 1e-3);
        CHECK(report.latency_ms_per_image == doctest::Approx(4.0));
        CHECK(report.throughput_images_per_s == doctest::Approx(1000.0 / 5.0));
    }
    SUBCASE("identical reports compare at exactly one") {
        SimResult sim;
        sim.makespan_s = 2e-3;
        sim.energy_j = 0.1;
        const RunReport report = report_metrics(sim, Assignment::uniform(1, Placement::Cpu), 0.0);
        const ReportComparison cmp = compare_reports(report, report);
        CHECK(cmp.latency_speedup == doctest::Approx(1.0));
        CHECK(cmp.efficiency_ratio == doctest::Approx(1.0));
    }
}
