#include "offsim/exec_sim.hpp"

#include <algorithm>
#include <cmath>

#include "offsim/errors.hpp"

namespace offsim {

const char* to_string(Placement p) {
    return p == Placement::Cpu ? "cpu" : "fpga";
}

const char* to_string(Resource r) {
    switch (r) {
        case Resource::CpuCompute: return "cpu_compute";
        case Resource::FpgaCompute: return "fpga_compute";
        case Resource::DmaIn: return "dma_in";
        case Resource::DmaOut: return "dma_out";
    }
    return "?";
}

int64_t Assignment::count(Placement p) const {
    return std::count(placement.begin(), placement.end(), p);
}

Assignment Assignment::uniform(int64_t layers, Placement p) {
    Assignment a;
    a.placement.assign(static_cast<size_t>(layers), p);
    return a;
}

ExecutionSim::ExecutionSim(const ModelGraph& graph, const AccelConfig& accel,
                           const HostConfig& host, SimOptions options)
    : graph_(graph), accel_(accel), host_(host), options_(options),
      bandwidth_(effective_bandwidth(accel)) {
    ShapeResult shape_result = infer_shapes(graph);
    if (!shape_result)
        throw ConfigError("graph rejected: " + shape_result.verdict.rule + " (layer " +
                          std::to_string(shape_result.verdict.layer_id) + ")");
    shapes_ = std::move(shape_result.shapes);
    // Accelerator traffic is modeled at the quantized 8-bit width.
    costs_ = graph_costs(graph, shapes_, 1);

    const size_t n = graph.layers.size();
    min_tile_.resize(n);
    host_time_.resize(n);
    layers_.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const LayerSpec& layer = graph.layers[i];
        const int64_t atoms = tile_atoms(layer, shapes_[i]);
        min_tile_[i] = min_tile_bytes(costs_[i], atoms);
        host_time_[i] = host_layer_time(costs_[i], host);
        layers_[i].plan = plan_tiles(costs_[i], atoms, accel_);

        // On-chip residency candidate: single predecessor which is also the
        // immediately preceding layer, and the resident tensor leaves room for
        // the consumer's minimal tile.
        if (layer.predecessors.size() == 1 && layer.predecessors.front() == layer.id - 1) {
            const int64_t resident_bytes = costs_[layer.predecessors.front()].output_bytes;
            if (resident_bytes + min_tile_[i] <= accel_.onchip_buffer_bytes) {
                LayerCost onchip_cost = costs_[i];
                onchip_cost.input_bytes = 0;
                layers_[i].resident_plan = plan_tiles_with_capacity(
                    onchip_cost, atoms, accel_.onchip_buffer_bytes - resident_bytes);
                layers_[i].resident_possible = layers_[i].resident_plan.has_value();
            }
        }
    }
    reset();
}

void ExecutionSim::reset() {
    cursor_s_ = 0;
    cpu_busy_s_ = 0;
    fpga_busy_s_ = 0;
    next_layer_ = 0;
    placed_.assign(graph_.layers.size(), Placement::Cpu);
    timeline_.segments.clear();
}

bool ExecutionSim::fpga_feasible(int layer_index) const {
    return layers_[static_cast<size_t>(layer_index)].plan.has_value();
}

void ExecutionSim::add_segment(Resource r, int layer_id, int tile, double start, double end) {
    if (!options_.record_timeline || end <= start) return;
    timeline_.segments.push_back({r, layer_id, tile, start, end});
}

double ExecutionSim::energy_j() const {
    double energy = 0;
    if (cpu_busy_s_ > 0)
        energy += host_.power_w * cpu_busy_s_ + host_.idle_power_w * (cursor_s_ - cpu_busy_s_);
    if (fpga_busy_s_ > 0)
        energy += accel_.active_power_w * fpga_busy_s_ +
                  accel_.idle_power_w * (cursor_s_ - fpga_busy_s_);
    return energy;
}

ExecutionSim::StepDelta ExecutionSim::place(int layer_index, Placement placement) {
    const double makespan_before = cursor_s_;
    const double energy_before = energy_j();

    const LayerSpec& layer = graph_.layers[static_cast<size_t>(layer_index)];
    const LayerInfo& info = layers_[static_cast<size_t>(layer_index)];

    // Placement-boundary transfers: one per edge whose endpoints differ.
    for (int pred : layer.predecessors) {
        if (placed_[static_cast<size_t>(pred)] == placement) continue;
        const double duration =
            static_cast<double>(costs_[static_cast<size_t>(pred)].output_bytes) / bandwidth_;
        const Resource resource = placement == Placement::Fpga ? Resource::DmaIn : Resource::DmaOut;
        add_segment(resource, layer.id, -1, cursor_s_, cursor_s_ + duration);
        fpga_busy_s_ += duration;  // the DMA engine is the accelerator's
        cursor_s_ += duration;
    }

    if (placement == Placement::Cpu) {
        const double duration = host_time_[static_cast<size_t>(layer_index)];
        add_segment(Resource::CpuCompute, layer.id, -1, cursor_s_, cursor_s_ + duration);
        cpu_busy_s_ += duration;
        cursor_s_ += duration;
    } else {
        if (!info.plan)
            throw InfeasibleAssignment("layer " + std::to_string(layer.id) +
                                       " is untileable for the configured on-chip buffer");

        bool resident = false;
        if (info.resident_possible && layer_index > 0 &&
            placed_[static_cast<size_t>(layer_index - 1)] == Placement::Fpga &&
            layer.predecessors.size() == 1 && layer.predecessors.front() == layer.id - 1)
            resident = true;

        const TilePlan& plan = resident ? *info.resident_plan : *info.plan;
        const double layer_start = cursor_s_;
        const double body_start = layer_start + accel_.per_layer_setup_s;
        add_segment(Resource::FpgaCompute, layer.id, -1, layer_start, body_start);

        const auto events =
            options_.serialized
                ? schedule_tile_pipeline_serialized(plan, accel_, body_start, !resident, true)
                : schedule_tile_pipeline(plan, accel_, body_start, !resident, true);

        double layer_end = body_start;
        for (size_t t = 0; t < events.size(); ++t) {
            const TileEvents& ev = events[t];
            add_segment(Resource::DmaIn, layer.id, static_cast<int>(t), ev.in_start, ev.in_end);
            add_segment(Resource::FpgaCompute, layer.id, static_cast<int>(t), ev.comp_start,
                        ev.comp_end);
            add_segment(Resource::DmaOut, layer.id, static_cast<int>(t), ev.out_start, ev.out_end);
            layer_end = std::max(layer_end, std::max(ev.comp_end, ev.out_end));
        }
        fpga_busy_s_ += layer_end - layer_start;
        cursor_s_ = layer_end;
    }

    placed_[static_cast<size_t>(layer_index)] = placement;
    next_layer_ = layer_index + 1;

    return {cursor_s_ - makespan_before, energy_j() - energy_before};
}

SimResult ExecutionSim::finish() {
    SimResult result;
    result.timeline = std::move(timeline_);
    result.makespan_s = cursor_s_;
    result.energy_j = energy_j();
    result.cpu_busy_s = cpu_busy_s_;
    result.fpga_busy_s = fpga_busy_s_;
    timeline_.segments.clear();
    return result;
}

SimResult simulate_assignment(const ModelGraph& graph, const Assignment& assignment,
                              const AccelConfig& accel, const HostConfig& host,
                              SimOptions options) {
    if (assignment.placement.size() != graph.layers.size())
        throw ConfigError("assignment does not cover every layer exactly once");
    ExecutionSim sim(graph, accel, host, options);
    for (size_t i = 0; i < graph.layers.size(); ++i)
        sim.place(static_cast<int>(i), assignment.placement[i]);
    return sim.finish();
}

RunReport report_metrics(const SimResult& sim, const Assignment& assignment,
                         double per_image_stream_overhead_s, const std::string& mode) {
    RunReport report;
    report.mode = mode;
    report.latency_ms_per_image = sim.makespan_s * 1e3;
    report.throughput_images_per_s =
        1000.0 / (report.latency_ms_per_image + per_image_stream_overhead_s * 1e3);
    report.energy_j_per_image = sim.energy_j;
    report.power_w = sim.makespan_s > 0 ? sim.energy_j / sim.makespan_s : 0.0;
    report.efficiency_images_per_s_per_w =
        report.power_w > 0 ? report.throughput_images_per_s / report.power_w : 0.0;
    report.layers_on_cpu = assignment.count(Placement::Cpu);
    report.layers_on_fpga = assignment.count(Placement::Fpga);
    return report;
}

ReportComparison compare_reports(const RunReport& baseline, const RunReport& candidate) {
    ReportComparison cmp;
    cmp.latency_speedup = baseline.latency_ms_per_image / candidate.latency_ms_per_image;
    cmp.efficiency_ratio =
        candidate.efficiency_images_per_s_per_w / baseline.efficiency_images_per_s_per_w;
    return cmp;
}

double sim_objective(const SimResult& sim, double energy_weight) {
    return sim.makespan_s + energy_weight * sim.energy_j;
}

}  // namespace offsim
