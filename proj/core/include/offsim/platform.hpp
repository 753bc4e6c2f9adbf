#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "offsim/model_graph.hpp"

namespace offsim {

struct DeviceCapacity {
    int64_t luts = 0;
    int64_t dsps = 0;
    int64_t bram_blocks = 0;
};

// Parameterized accelerator performance model. The bus is a single shared
// channel: DMA-in and DMA-out never overlap each other.
struct AccelConfig {
    int64_t num_macs = 512;              // parallel MAC units
    double clock_hz = 200e6;
    int64_t onchip_buffer_bytes = 512 * 1024;  // shared by input+weight+output tiles
    int bus_width_bits = 64;
    double bus_transfers_per_sec = 2400e6;
    double bus_utilization = 0.85;       // sustained derating factor in (0,1]
    double active_power_w = 28.0;
    double idle_power_w = 0.0;
    double per_layer_setup_s = 0.0;      // fixed invocation overhead per layer
    double per_image_stream_overhead_s = 0.0;  // steady-state per-image overhead
    int dsps_per_mac = 1;
    int64_t lut_base = 25000;
    int64_t lut_per_mac = 80;
    int64_t bram_block_bytes = 4608;
    DeviceCapacity device_capacity;
    std::optional<int64_t> dram_capacity_bytes;  // informational
};

// Returns a violation message, or nullopt when all invariants hold.
std::optional<std::string> check_invariants(const AccelConfig& cfg);

// Calibrated host cost model (CPU or GPU); fitted, not mechanistic.
struct HostConfig {
    std::string name = "cpu";
    double effective_macs_per_sec = 1e9;
    double per_layer_overhead_s = 0.0;
    double per_image_stream_overhead_s = 0.0;
    double power_w = 0.0;
    double idle_power_w = 0.0;
    std::string notes;
};

std::optional<std::string> check_invariants(const HostConfig& cfg);

struct Tile {
    int64_t input_bytes = 0;
    int64_t weight_bytes = 0;
    int64_t output_bytes = 0;
    int64_t macs = 0;

    int64_t total_bytes() const { return input_bytes + weight_bytes + output_bytes; }
};

struct TilePlan {
    std::vector<Tile> tiles;

    int64_t tile_count() const { return static_cast<int64_t>(tiles.size()); }
};

struct ResourceReport {
    int64_t luts_used = 0;
    int64_t dsps_used = 0;
    int64_t bram_blocks_used = 0;
    double utilization = 0.0;  // max of the three used/capacity ratios

    bool feasible() const { return utilization <= 1.0; }
};

double effective_bandwidth(const AccelConfig& cfg);  // bytes/sec

// Number of divisible units for tiling a layer: one output row of one output
// channel is the atom for spatial kinds; one output channel elsewhere.
int64_t tile_atoms(const LayerSpec& layer, const TensorShape& out_shape);

// Byte demand of the smallest possible tile (the most-split plan's largest tile).
int64_t min_tile_bytes(const LayerCost& cost, int64_t atoms);

// Greedy maximal tiling: the smallest split count k (largest fraction 1/k)
// whose tiles all fit within `capacity_bytes`. Tiles split input, weight,
// output bytes and MACs proportionally to atoms; equal-sized up to remainder.
// Returns nullopt when even the single-atom tile exceeds capacity.
std::optional<TilePlan> plan_tiles_with_capacity(const LayerCost& cost, int64_t atoms,
                                                 int64_t capacity_bytes);
std::optional<TilePlan> plan_tiles(const LayerCost& cost, int64_t atoms, const AccelConfig& cfg);

// Absolute event times for one layer's tile pipeline starting at `start_s`.
// Double buffered: the next tile's input DMA overlaps the current tile's
// compute; writeback follows compute. One bus request is served at a time.
struct TileEvents {
    double in_start = 0, in_end = 0;
    double comp_start = 0, comp_end = 0;
    double out_start = 0, out_end = 0;
};

std::vector<TileEvents> schedule_tile_pipeline(const TilePlan& plan, const AccelConfig& cfg,
                                               double start_s, bool load_input = true,
                                               bool store_output = true);

// Same tile set with no overlap: load, compute, store strictly in sequence.
std::vector<TileEvents> schedule_tile_pipeline_serialized(const TilePlan& plan,
                                                          const AccelConfig& cfg, double start_s,
                                                          bool load_input = true,
                                                          bool store_output = true);

struct FpgaLayerTime {
    double seconds = 0;    // includes per-layer setup
    double compute_s = 0;  // sum of per-tile compute
    double transfer_s = 0; // sum of per-tile transfer (all bytes moved)
};

// Contract: max(compute_s, transfer_s) <= seconds - setup <= compute_s + transfer_s.
FpgaLayerTime fpga_layer_time(const LayerCost& cost, const TilePlan& plan, const AccelConfig& cfg);
FpgaLayerTime fpga_layer_time_serialized(const LayerCost& cost, const TilePlan& plan,
                                         const AccelConfig& cfg);

double host_layer_time(const LayerCost& cost, const HostConfig& cfg);

ResourceReport estimate_resources(const AccelConfig& cfg);

// Platform config file: accelerator section plus named hosts "cpu" and "gpu".
struct PlatformSet {
    AccelConfig accel;
    HostConfig cpu;
    HostConfig gpu;
};

PlatformSet platforms_from_json(const std::string& text, const std::string& path_for_errors = "<string>");
PlatformSet load_platforms(const std::string& path);
std::string platforms_to_json(const PlatformSet& platforms);
void save_platforms(const PlatformSet& platforms, const std::string& path);

}  // namespace offsim
