#include "offsim/platform.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "offsim/errors.hpp"

namespace offsim {

std::optional<std::string> check_invariants(const AccelConfig& cfg) {
    if (cfg.num_macs < 1) return "num_macs must be >= 1";
    if (cfg.clock_hz <= 0) return "clock_hz must be > 0";
    if (cfg.onchip_buffer_bytes < 1) return "onchip_buffer_bytes must be >= 1";
    if (cfg.bus_width_bits < 1) return "bus_width_bits must be >= 1";
    if (cfg.bus_transfers_per_sec <= 0) return "bus_transfers_per_sec must be > 0";
    if (!(cfg.bus_utilization > 0.0 && cfg.bus_utilization <= 1.0))
        return "bus_utilization must lie in (0, 1]";
    if (cfg.idle_power_w < 0) return "idle_power_w must be >= 0";
    if (cfg.active_power_w < cfg.idle_power_w) return "active_power_w must be >= idle_power_w";
    if (cfg.per_layer_setup_s < 0) return "per_layer_setup_s must be >= 0";
    if (cfg.per_image_stream_overhead_s < 0) return "per_image_stream_overhead_s must be >= 0";
    if (cfg.dsps_per_mac < 0) return "dsps_per_mac must be >= 0";
    if (cfg.bram_block_bytes < 1) return "bram_block_bytes must be >= 1";
    return std::nullopt;
}

std::optional<std::string> check_invariants(const HostConfig& cfg) {
    if (cfg.effective_macs_per_sec <= 0) return "effective_macs_per_sec must be > 0";
    if (cfg.per_layer_overhead_s < 0) return "per_layer_overhead_s must be >= 0";
    if (cfg.per_image_stream_overhead_s < 0) return "per_image_stream_overhead_s must be >= 0";
    if (cfg.power_w < 0) return "power_w must be >= 0";
    if (cfg.idle_power_w < 0) return "idle_power_w must be >= 0";
    return std::nullopt;
}

double effective_bandwidth(const AccelConfig& cfg) {
    return (cfg.bus_width_bits / 8.0) * cfg.bus_transfers_per_sec * cfg.bus_utilization;
}

int64_t tile_atoms(const LayerSpec& layer, const TensorShape& out_shape) {
    if (layer.kind == LayerKind::FullyConnected) return std::max<int64_t>(1, layer.out_channels);
    return std::max<int64_t>(1, out_shape.channels * out_shape.height);
}

namespace {

// Integer-proportional share of `total` for atoms [lo, hi): sums are exact and
// tiles differ by at most the rounding jitter of one atom.
int64_t atom_share(int64_t total, int64_t lo, int64_t hi, int64_t atoms) {
    return total * hi / atoms - total * lo / atoms;
}

std::optional<TilePlan> build_plan(const LayerCost& cost, int64_t atoms, int64_t k,
                                   int64_t capacity_bytes) {
    TilePlan plan;
    plan.tiles.reserve(static_cast<size_t>(k));
    for (int64_t j = 0; j < k; ++j) {
        const int64_t lo = atoms * j / k;
        const int64_t hi = atoms * (j + 1) / k;
        if (hi == lo) continue;  // more tiles than atoms requested
        Tile tile;
        tile.input_bytes = atom_share(cost.input_bytes, lo, hi, atoms);
        tile.weight_bytes = atom_share(cost.weight_bytes, lo, hi, atoms);
        tile.output_bytes = atom_share(cost.output_bytes, lo, hi, atoms);
        tile.macs = atom_share(cost.macs, lo, hi, atoms);
        if (tile.total_bytes() > capacity_bytes) return std::nullopt;
        plan.tiles.push_back(tile);
    }
    if (plan.tiles.empty()) return std::nullopt;
    return plan;
}

}  // namespace

int64_t min_tile_bytes(const LayerCost& cost, int64_t atoms) {
    atoms = std::max<int64_t>(1, atoms);
    int64_t worst = 0;
    for (int64_t j = 0; j < atoms; ++j) {
        const int64_t bytes = atom_share(cost.input_bytes, j, j + 1, atoms) +
                              atom_share(cost.weight_bytes, j, j + 1, atoms) +
                              atom_share(cost.output_bytes, j, j + 1, atoms);
        worst = std::max(worst, bytes);
    }
    return worst;
}

std::optional<TilePlan> plan_tiles_with_capacity(const LayerCost& cost, int64_t atoms,
                                                 int64_t capacity_bytes) {
    atoms = std::max<int64_t>(1, atoms);
    if (capacity_bytes < 1) return std::nullopt;
    const int64_t total = cost.total_bytes();
    int64_t k = std::max<int64_t>(1, (total + capacity_bytes - 1) / capacity_bytes);
    for (; k <= atoms; ++k) {
        if (auto plan = build_plan(cost, atoms, k, capacity_bytes)) return plan;
    }
    return std::nullopt;
}

std::optional<TilePlan> plan_tiles(const LayerCost& cost, int64_t atoms, const AccelConfig& cfg) {
    return plan_tiles_with_capacity(cost, atoms, cfg.onchip_buffer_bytes);
}

std::vector<TileEvents> schedule_tile_pipeline(const TilePlan& plan, const AccelConfig& cfg,
                                               double start_s, bool load_input,
                                               bool store_output) {
    const double bandwidth = effective_bandwidth(cfg);
    const size_t n = plan.tiles.size();
    std::vector<TileEvents> events(n);
    if (n == 0) return events;

    auto compute_time = [&](const Tile& t) {
        if (t.macs <= 0) return 0.0;
        const double cycles =
            std::ceil(static_cast<double>(t.macs) / static_cast<double>(cfg.num_macs));
        return cycles / cfg.clock_hz;
    };
    auto in_time = [&](const Tile& t) {
        const int64_t bytes = (load_input ? t.input_bytes : 0) + t.weight_bytes;
        return static_cast<double>(bytes) / bandwidth;
    };
    auto out_time = [&](const Tile& t) {
        return store_output ? static_cast<double>(t.output_bytes) / bandwidth : 0.0;
    };

    // One shared bus: requests are served in ready order. The prefetch of tile
    // i+1 becomes ready when compute of tile i starts, the writeback of tile i
    // when its compute ends, so the bus sequence is in_1, in_2, out_1, in_3,
    // out_2, ..., in_n, out_{n-1}, out_n.
    double bus_free = start_s;
    double comp_free = start_s;

    events[0].in_start = bus_free;
    events[0].in_end = events[0].in_start + in_time(plan.tiles[0]);
    bus_free = events[0].in_end;

    for (size_t i = 0; i < n; ++i) {
        events[i].comp_start = std::max(events[i].in_end, comp_free);
        events[i].comp_end = events[i].comp_start + compute_time(plan.tiles[i]);
        comp_free = events[i].comp_end;

        if (i + 1 < n) {
            events[i + 1].in_start = std::max(bus_free, events[i].comp_start);
            events[i + 1].in_end = events[i + 1].in_start + in_time(plan.tiles[i + 1]);
            bus_free = events[i + 1].in_end;
        }

        events[i].out_start = std::max(bus_free, events[i].comp_end);
        events[i].out_end = events[i].out_start + out_time(plan.tiles[i]);
        bus_free = events[i].out_end;
    }
    return events;
}

std::vector<TileEvents> schedule_tile_pipeline_serialized(const TilePlan& plan,
                                                          const AccelConfig& cfg, double start_s,
                                                          bool load_input, bool store_output) {
    const double bandwidth = effective_bandwidth(cfg);
    std::vector<TileEvents> events(plan.tiles.size());
    double t = start_s;
    for (size_t i = 0; i < plan.tiles.size(); ++i) {
        const Tile& tile = plan.tiles[i];
        events[i].in_start = t;
        t += static_cast<double>((load_input ? tile.input_bytes : 0) + tile.weight_bytes) / bandwidth;
        events[i].in_end = t;
        events[i].comp_start = t;
        if (tile.macs > 0)
            t += std::ceil(static_cast<double>(tile.macs) / static_cast<double>(cfg.num_macs)) /
                 cfg.clock_hz;
        events[i].comp_end = t;
        events[i].out_start = t;
        if (store_output) t += static_cast<double>(tile.output_bytes) / bandwidth;
        events[i].out_end = t;
    }
    return events;
}

namespace {

FpgaLayerTime summarize(const TilePlan& plan, const AccelConfig& cfg,
                        const std::vector<TileEvents>& events) {
    FpgaLayerTime result;
    const double bandwidth = effective_bandwidth(cfg);
    double end = cfg.per_layer_setup_s;
    for (size_t i = 0; i < plan.tiles.size(); ++i) {
        const Tile& tile = plan.tiles[i];
        if (tile.macs > 0)
            result.compute_s +=
                std::ceil(static_cast<double>(tile.macs) / static_cast<double>(cfg.num_macs)) /
                cfg.clock_hz;
        result.transfer_s += static_cast<double>(tile.total_bytes()) / bandwidth;
        end = std::max(end, std::max(events[i].comp_end, events[i].out_end));
    }
    result.seconds = end;
    return result;
}

}  // namespace

FpgaLayerTime fpga_layer_time(const LayerCost&, const TilePlan& plan, const AccelConfig& cfg) {
    const auto events = schedule_tile_pipeline(plan, cfg, cfg.per_layer_setup_s);
    return summarize(plan, cfg, events);
}

FpgaLayerTime fpga_layer_time_serialized(const LayerCost&, const TilePlan& plan,
                                         const AccelConfig& cfg) {
    const auto events = schedule_tile_pipeline_serialized(plan, cfg, cfg.per_layer_setup_s);
    return summarize(plan, cfg, events);
}

double host_layer_time(const LayerCost& cost, const HostConfig& cfg) {
    return cfg.per_layer_overhead_s + static_cast<double>(cost.macs) / cfg.effective_macs_per_sec;
}

ResourceReport estimate_resources(const AccelConfig& cfg) {
    ResourceReport report;
    report.dsps_used = cfg.num_macs * cfg.dsps_per_mac;
    report.bram_blocks_used =
        (cfg.onchip_buffer_bytes + cfg.bram_block_bytes - 1) / cfg.bram_block_bytes;
    report.luts_used = cfg.lut_base + cfg.lut_per_mac * cfg.num_macs;

    auto ratio = [](int64_t used, int64_t capacity) {
        if (capacity <= 0) return used > 0 ? std::numeric_limits<double>::infinity() : 0.0;
        return static_cast<double>(used) / static_cast<double>(capacity);
    };
    report.utilization = std::max({ratio(report.luts_used, cfg.device_capacity.luts),
                                   ratio(report.dsps_used, cfg.device_capacity.dsps),
                                   ratio(report.bram_blocks_used, cfg.device_capacity.bram_blocks)});
    return report;
}

// ---------------------------------------------------------------------------
// Platform config file IO
// ---------------------------------------------------------------------------

namespace {

using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

HostConfig host_from_json(const ordered_json& j, const std::string& name,
                          const std::string& path) {
    HostConfig host;
    host.name = name;
    try {
        host.effective_macs_per_sec = j.at("effective_macs_per_sec").get<double>();
        host.per_layer_overhead_s = j.at("per_layer_overhead_s").get<double>();
        host.per_image_stream_overhead_s = j.at("per_image_stream_overhead_s").get<double>();
        host.power_w = j.at("power_w").get<double>();
        host.idle_power_w = j.value("idle_power_w", 0.0);
        host.notes = j.value("notes", std::string{});
    } catch (const std::exception& e) {
        throw ConfigError(path, "hosts." + name, e.what());
    }
    if (auto violation = check_invariants(host))
        throw ConfigError(path, "hosts." + name, *violation);
    return host;
}

ordered_json host_to_json(const HostConfig& host) {
    ordered_json j;
    j["effective_macs_per_sec"] = host.effective_macs_per_sec;
    j["per_layer_overhead_s"] = host.per_layer_overhead_s;
    j["per_image_stream_overhead_s"] = host.per_image_stream_overhead_s;
    j["power_w"] = host.power_w;
    j["idle_power_w"] = host.idle_power_w;
    if (!host.notes.empty()) j["notes"] = host.notes;
    return j;
}

}  // namespace

PlatformSet platforms_from_json(const std::string& text, const std::string& path) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(path, "<root>", std::string("json parse error: ") + e.what());
    }

    PlatformSet platforms;
    try {
        const auto& a = j.at("accelerator");
        AccelConfig& accel = platforms.accel;
        accel.num_macs = a.at("num_macs").get<int64_t>();
        accel.clock_hz = a.at("clock_hz").get<double>();
        accel.onchip_buffer_bytes = a.at("onchip_buffer_bytes").get<int64_t>();
        accel.bus_width_bits = a.at("bus_width_bits").get<int>();
        accel.bus_transfers_per_sec = a.at("bus_transfers_per_sec").get<double>();
        accel.bus_utilization = a.at("bus_utilization").get<double>();
        accel.active_power_w = a.at("active_power_w").get<double>();
        accel.idle_power_w = a.at("idle_power_w").get<double>();
        accel.per_layer_setup_s = a.at("per_layer_setup_s").get<double>();
        accel.per_image_stream_overhead_s = a.at("per_image_stream_overhead_s").get<double>();
        accel.dsps_per_mac = a.value("dsps_per_mac", 1);
        accel.lut_base = a.value("lut_base", int64_t{25000});
        accel.lut_per_mac = a.value("lut_per_mac", int64_t{80});
        accel.bram_block_bytes = a.at("bram_block_bytes").get<int64_t>();
        const auto& cap = a.at("device_capacity");
        accel.device_capacity.luts = cap.at("luts").get<int64_t>();
        accel.device_capacity.dsps = cap.at("dsps").get<int64_t>();
        accel.device_capacity.bram_blocks = cap.at("bram_blocks").get<int64_t>();
        if (a.contains("dram_capacity_bytes"))
            accel.dram_capacity_bytes = a.at("dram_capacity_bytes").get<int64_t>();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(path, "accelerator", e.what());
    }
    if (auto violation = check_invariants(platforms.accel))
        throw ConfigError(path, "accelerator", *violation);

    const auto& hosts = j.at("hosts");
    platforms.cpu = host_from_json(hosts.at("cpu"), "cpu", path);
    platforms.gpu = host_from_json(hosts.at("gpu"), "gpu", path);
    return platforms;
}

PlatformSet load_platforms(const std::string& path) {
    return platforms_from_json(read_file(path), path);
}

std::string platforms_to_json(const PlatformSet& platforms) {
    const AccelConfig& accel = platforms.accel;
    ordered_json a;
    a["num_macs"] = accel.num_macs;
    a["clock_hz"] = accel.clock_hz;
    a["onchip_buffer_bytes"] = accel.onchip_buffer_bytes;
    a["bus_width_bits"] = accel.bus_width_bits;
    a["bus_transfers_per_sec"] = accel.bus_transfers_per_sec;
    a["bus_utilization"] = accel.bus_utilization;
    a["active_power_w"] = accel.active_power_w;
    a["idle_power_w"] = accel.idle_power_w;
    a["per_layer_setup_s"] = accel.per_layer_setup_s;
    a["per_image_stream_overhead_s"] = accel.per_image_stream_overhead_s;
    a["dsps_per_mac"] = accel.dsps_per_mac;
    a["lut_base"] = accel.lut_base;
    a["lut_per_mac"] = accel.lut_per_mac;
    a["bram_block_bytes"] = accel.bram_block_bytes;
    a["device_capacity"] = {{"luts", accel.device_capacity.luts},
                            {"dsps", accel.device_capacity.dsps},
                            {"bram_blocks", accel.device_capacity.bram_blocks}};
    if (accel.dram_capacity_bytes) a["dram_capacity_bytes"] = *accel.dram_capacity_bytes;

    ordered_json j;
    j["accelerator"] = std::move(a);
    j["hosts"] = {{"cpu", host_to_json(platforms.cpu)}, {"gpu", host_to_json(platforms.gpu)}};
    return j.dump(2) + "\n";
}

void save_platforms(const PlatformSet& platforms, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << platforms_to_json(platforms);
}

}  // namespace offsim
