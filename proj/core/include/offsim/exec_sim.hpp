#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "offsim/model_graph.hpp"
#include "offsim/platform.hpp"

namespace offsim {

enum class Placement : uint8_t { Cpu = 0, Fpga = 1 };

const char* to_string(Placement p);

// Per-layer placement vector, indexed by layer id.
struct Assignment {
    std::vector<Placement> placement;

    int64_t count(Placement p) const;
    static Assignment uniform(int64_t layers, Placement p);
};

enum class Resource : uint8_t { CpuCompute, FpgaCompute, DmaIn, DmaOut };

const char* to_string(Resource r);

struct Segment {
    Resource resource;
    int layer_id;
    int tile_index;  // -1 for whole-layer segments
    double start_s;
    double end_s;
};

struct Timeline {
    std::vector<Segment> segments;
};

struct SimResult {
    Timeline timeline;
    double makespan_s = 0;
    double energy_j = 0;
    double cpu_busy_s = 0;
    double fpga_busy_s = 0;
};

struct SimOptions {
    bool record_timeline = true;
    bool serialized = false;  // disable double buffering (reference schedule)
};

// Deterministic event-driven simulation of a frozen assignment. Layers run in
// stored (topological) order; a placement flip on an edge costs one transfer
// of the edge tensor at effective bandwidth; FPGA layers run their tile
// pipeline after the per-layer setup. Intermediates between two consecutive
// single-predecessor FPGA layers stay on-chip when the producing tensor plus
// the consumer's minimal tile fit the buffer (write-through: outputs are
// still drained to DRAM, the consumer skips the reload).
class ExecutionSim {
public:
    ExecutionSim(const ModelGraph& graph, const AccelConfig& accel, const HostConfig& host,
                 SimOptions options = {});

    void reset();

    bool fpga_feasible(int layer_index) const;

    struct StepDelta {
        double makespan_delta_s = 0;
        double energy_delta_j = 0;
    };

    // Places the next layer (must be called in stored order) and advances time.
    // Throws InfeasibleAssignment when an untileable layer is sent to the FPGA.
    StepDelta place(int layer_index, Placement placement);

    double makespan_s() const { return cursor_s_; }
    double energy_j() const;
    double cpu_busy_s() const { return cpu_busy_s_; }
    double fpga_busy_s() const { return fpga_busy_s_; }
    const Timeline& timeline() const { return timeline_; }

    const std::vector<LayerCost>& costs() const { return costs_; }
    const std::vector<TensorShape>& shapes() const { return shapes_; }
    int64_t layer_min_tile_bytes(int layer_index) const { return min_tile_[layer_index]; }
    double host_time(int layer_index) const { return host_time_[layer_index]; }

    SimResult finish();  // after all layers placed

private:
    struct LayerInfo {
        std::optional<TilePlan> plan;              // full load/store plan
        std::optional<TilePlan> resident_plan;     // input kept on-chip
        bool resident_possible = false;            // vs immediate predecessor
    };

    const ModelGraph& graph_;
    AccelConfig accel_;
    HostConfig host_;
    SimOptions options_;
    double bandwidth_;

    std::vector<TensorShape> shapes_;
    std::vector<LayerCost> costs_;
    std::vector<int64_t> min_tile_;
    std::vector<double> host_time_;
    std::vector<LayerInfo> layers_;

    double cursor_s_ = 0;
    double cpu_busy_s_ = 0;
    double fpga_busy_s_ = 0;
    int next_layer_ = 0;
    std::vector<Placement> placed_;
    Timeline timeline_;

    void add_segment(Resource r, int layer_id, int tile, double start, double end);
};

SimResult simulate_assignment(const ModelGraph& graph, const Assignment& assignment,
                              const AccelConfig& accel, const HostConfig& host,
                              SimOptions options = {});

// Table-shaped run metrics derived from a simulation.
struct RunReport {
    std::string mode;
    double latency_ms_per_image = 0;
    double throughput_images_per_s = 0;
    double power_w = 0;
    double energy_j_per_image = 0;
    double efficiency_images_per_s_per_w = 0;
    int64_t layers_on_cpu = 0;
    int64_t layers_on_fpga = 0;
    std::optional<double> top1_accuracy;
};

RunReport report_metrics(const SimResult& sim, const Assignment& assignment,
                         double per_image_stream_overhead_s, const std::string& mode = "");

struct ReportComparison {
    double latency_speedup = 0;    // baseline latency / candidate latency
    double efficiency_ratio = 0;   // candidate efficiency / baseline efficiency
};

ReportComparison compare_reports(const RunReport& baseline, const RunReport& candidate);

// makespan + energy_weight * energy, the objective shared by the agent, the
// heuristic sweep, and the brute-force oracle.
double sim_objective(const SimResult& sim, double energy_weight);

}  // namespace offsim
