#include "offsim/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "offsim/errors.hpp"

namespace offsim {

std::optional<std::string> check_invariants(const AgentConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) return "alpha must lie in (0, 1]";
    if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0)) return "gamma must lie in [0, 1)";
    if (cfg.epsilon_start < 0.0 || cfg.epsilon_start > 1.0) return "epsilon_start must lie in [0, 1]";
    if (cfg.epsilon_end < 0.0 || cfg.epsilon_end > 1.0) return "epsilon_end must lie in [0, 1]";
    if (cfg.epsilon_end > cfg.epsilon_start) return "epsilon_end must not exceed epsilon_start";
    if (!(cfg.epsilon_decay > 0.0 && cfg.epsilon_decay <= 1.0))
        return "epsilon_decay must lie in (0, 1]";
    if (cfg.sync_period_n < 1) return "sync_period_n must be >= 1";
    if (cfg.episodes < 1) return "episodes must be >= 1";
    if (cfg.reward_energy_weight < 0) return "reward_energy_weight must be >= 0";
    if (cfg.intensity_buckets < 1) return "intensity_buckets must be >= 1";
    return std::nullopt;
}

std::array<double, 2> QTablePair::primary_values(const AgentState& s) const {
    auto it = q_primary.find(s);
    return it == q_primary.end() ? std::array<double, 2>{0.0, 0.0} : it->second;
}

std::array<double, 2> QTablePair::target_values(const AgentState& s) const {
    auto it = q_target.find(s);
    return it == q_target.end() ? std::array<double, 2>{0.0, 0.0} : it->second;
}

int intensity_bucket_of(double arithmetic_intensity, int buckets) {
    // Log-spaced edges doubling from 0.5: bucket 0 holds zero and sub-0.5
    // intensities, the top bucket everything past the last edge.
    if (buckets <= 1 || arithmetic_intensity < 0.5) return 0;
    const int bucket = 1 + static_cast<int>(std::floor(std::log2(arithmetic_intensity / 0.5)));
    return std::min(bucket, buckets - 1);
}

int occupancy_bucket_of(double min_tile_fraction) {
    if (min_tile_fraction < 0.25) return 0;
    if (min_tile_fraction < 0.5) return 1;
    if (min_tile_fraction <= 1.0) return 2;
    return 3;  // untileable
}

AgentState encode_state(const ModelGraph& graph, const std::vector<LayerCost>& costs,
                        int layer_index, PrevPlacement prev, const AccelConfig& accel,
                        int intensity_buckets) {
    ShapeResult shapes = infer_shapes(graph);
    const LayerSpec& layer = graph.layers[static_cast<size_t>(layer_index)];
    const LayerCost& cost = costs[static_cast<size_t>(layer_index)];
    const int64_t atoms = tile_atoms(layer, shapes.shapes[static_cast<size_t>(layer_index)]);
    const double fraction = static_cast<double>(min_tile_bytes(cost, atoms)) /
                            static_cast<double>(accel.onchip_buffer_bytes);
    AgentState state;
    state.layer_index = layer_index;
    state.prev = prev;
    state.intensity_bucket =
        static_cast<int8_t>(intensity_bucket_of(cost.arithmetic_intensity, intensity_buckets));
    state.occupancy_bucket = static_cast<int8_t>(occupancy_bucket_of(fraction));
    return state;
}

ActionChoice select_action(const QTablePair& q, const AgentState& s, double epsilon,
                           std::mt19937_64& rng, bool from_target) {
    if (epsilon > 0.0) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (unit(rng) < epsilon) {
            std::uniform_int_distribution<int> coin(0, 1);
            return coin(rng) == 0 ? ActionChoice::RunOnCpu : ActionChoice::OffloadToFpga;
        }
    }
    const std::array<double, 2> values = from_target ? q.target_values(s) : q.primary_values(s);
    // Ties break toward the CPU to avoid needless transfers.
    return values[1] > values[0] ? ActionChoice::OffloadToFpga : ActionChoice::RunOnCpu;
}

void td_update(QTablePair& q, const AgentState& s, ActionChoice a, double reward,
               const std::optional<AgentState>& s_next, const AgentConfig& cfg) {
    double future = 0.0;
    if (s_next) {
        const std::array<double, 2> next = q.target_values(*s_next);
        future = std::max(next[0], next[1]);
    }
    double& value = q.q_primary[s][static_cast<size_t>(a)];
    value += cfg.alpha * (reward + cfg.gamma * future - value);

    if (++q.steps_since_sync >= cfg.sync_period_n) {
        q.q_target = q.q_primary;
        q.steps_since_sync = 0;
    }
}

namespace {

// Per-layer state components are fixed for a given graph/platform pair, so the
// training loop precomputes them instead of re-running shape inference.
struct StateTable {
    std::vector<int8_t> intensity;
    std::vector<int8_t> occupancy;

    StateTable(const ModelGraph& graph, const ExecutionSim& sim, const AccelConfig& accel,
               int buckets) {
        const size_t n = graph.layers.size();
        intensity.resize(n);
        occupancy.resize(n);
        for (size_t i = 0; i < n; ++i) {
            intensity[i] = static_cast<int8_t>(
                intensity_bucket_of(sim.costs()[i].arithmetic_intensity, buckets));
            const double fraction =
                static_cast<double>(sim.layer_min_tile_bytes(static_cast<int>(i))) /
                static_cast<double>(accel.onchip_buffer_bytes);
            occupancy[i] = static_cast<int8_t>(occupancy_bucket_of(fraction));
        }
    }

    AgentState state(int layer_index, PrevPlacement prev) const {
        return AgentState{layer_index, prev, intensity[static_cast<size_t>(layer_index)],
                          occupancy[static_cast<size_t>(layer_index)]};
    }
};

PrevPlacement as_prev(Placement p) {
    return p == Placement::Cpu ? PrevPlacement::Cpu : PrevPlacement::Fpga;
}

}  // namespace

TrainResult train_agent(const ModelGraph& graph, const AccelConfig& accel, const HostConfig& host,
                        const AgentConfig& cfg) {
    if (auto violation = check_invariants(cfg)) throw ConfigError("agent config: " + *violation);

    const int layer_count = static_cast<int>(graph.layers.size());
    ExecutionSim sim(graph, accel, host, SimOptions{.record_timeline = false});
    StateTable states(graph, sim, accel, cfg.intensity_buckets);

    TrainResult result;
    result.episode_costs.reserve(static_cast<size_t>(cfg.episodes));
    std::mt19937_64 rng(cfg.rng_seed);
    double epsilon = cfg.epsilon_start;

    for (int episode = 0; episode < cfg.episodes; ++episode) {
        sim.reset();
        PrevPlacement prev = PrevPlacement::None;
        for (int li = 0; li < layer_count; ++li) {
            const AgentState s = states.state(li, prev);
            ActionChoice action;
            if (!sim.fpga_feasible(li)) {
                action = ActionChoice::RunOnCpu;  // memory-constraint fallback
            } else {
                action = select_action(result.q, s, epsilon, rng, cfg.select_from_target);
            }
            const Placement placement =
                action == ActionChoice::OffloadToFpga ? Placement::Fpga : Placement::Cpu;
            const ExecutionSim::StepDelta delta = sim.place(li, placement);
            const double reward =
                -(delta.makespan_delta_s + cfg.reward_energy_weight * delta.energy_delta_j);

            std::optional<AgentState> s_next;
            if (li + 1 < layer_count) s_next = states.state(li + 1, as_prev(placement));
            td_update(result.q, s, action, reward, s_next, cfg);
            prev = as_prev(placement);
        }
        result.episode_costs.push_back(sim.makespan_s() +
                                       cfg.reward_energy_weight * sim.energy_j());
        epsilon = std::max(cfg.epsilon_end, epsilon * cfg.epsilon_decay);
    }

    // Greedy rollout under the final primary table.
    sim.reset();
    result.best_assignment.placement.resize(static_cast<size_t>(layer_count));
    PrevPlacement prev = PrevPlacement::None;
    std::mt19937_64 greedy_rng(0);
    for (int li = 0; li < layer_count; ++li) {
        const AgentState s = states.state(li, prev);
        Placement placement = Placement::Cpu;
        if (sim.fpga_feasible(li)) {
            const ActionChoice action =
                select_action(result.q, s, 0.0, greedy_rng, cfg.select_from_target);
            placement = action == ActionChoice::OffloadToFpga ? Placement::Fpga : Placement::Cpu;
        }
        sim.place(li, placement);
        result.best_assignment.placement[static_cast<size_t>(li)] = placement;
        prev = as_prev(placement);
    }
    return result;
}

Assignment greedy_assignment(const ModelGraph& graph, const AccelConfig& accel,
                             const HostConfig& host, const QTablePair& q, const AgentConfig& cfg) {
    const int layer_count = static_cast<int>(graph.layers.size());
    ExecutionSim sim(graph, accel, host, SimOptions{.record_timeline = false});
    StateTable states(graph, sim, accel, cfg.intensity_buckets);

    Assignment assignment;
    assignment.placement.resize(static_cast<size_t>(layer_count));
    PrevPlacement prev = PrevPlacement::None;
    std::mt19937_64 rng(0);
    for (int li = 0; li < layer_count; ++li) {
        Placement placement = Placement::Cpu;
        if (sim.fpga_feasible(li)) {
            const ActionChoice action =
                select_action(q, states.state(li, prev), 0.0, rng, cfg.select_from_target);
            placement = action == ActionChoice::OffloadToFpga ? Placement::Fpga : Placement::Cpu;
        }
        sim.place(li, placement);
        assignment.placement[static_cast<size_t>(li)] = placement;
        prev = as_prev(placement);
    }
    return assignment;
}

Assignment heuristic_baseline(const ModelGraph& graph, const std::vector<LayerCost>& costs,
                              const AccelConfig& accel, double intensity_threshold) {
    ShapeResult shapes = infer_shapes(graph);
    Assignment assignment;
    assignment.placement.resize(graph.layers.size(), Placement::Cpu);
    for (size_t i = 0; i < graph.layers.size(); ++i) {
        const int64_t atoms = tile_atoms(graph.layers[i], shapes.shapes[i]);
        const bool tileable = plan_tiles(costs[i], atoms, accel).has_value();
        if (tileable && costs[i].arithmetic_intensity >= intensity_threshold)
            assignment.placement[i] = Placement::Fpga;
    }
    return assignment;
}

OracleResult brute_force_partition(const ModelGraph& graph, const AccelConfig& accel,
                                   const HostConfig& host, double energy_weight, int max_layers) {
    const int layer_count = static_cast<int>(graph.layers.size());
    if (layer_count > max_layers)
        throw TooManyLayers("brute-force enumeration limited to " + std::to_string(max_layers) +
                            " layers, graph has " + std::to_string(layer_count));

    ExecutionSim sim(graph, accel, host, SimOptions{.record_timeline = false});
    OracleResult best;
    best.objective = std::numeric_limits<double>::infinity();

    const uint64_t combos = uint64_t{1} << layer_count;
    for (uint64_t mask = 0; mask < combos; ++mask) {
        bool feasible = true;
        for (int li = 0; li < layer_count && feasible; ++li)
            if ((mask >> li) & 1u) feasible = sim.fpga_feasible(li);
        if (!feasible) continue;

        sim.reset();
        for (int li = 0; li < layer_count; ++li)
            sim.place(li, (mask >> li) & 1u ? Placement::Fpga : Placement::Cpu);
        const double objective = sim.makespan_s() + energy_weight * sim.energy_j();
        if (objective < best.objective) {
            best.objective = objective;
            best.assignment.placement.resize(static_cast<size_t>(layer_count));
            for (int li = 0; li < layer_count; ++li)
                best.assignment.placement[static_cast<size_t>(li)] =
                    (mask >> li) & 1u ? Placement::Fpga : Placement::Cpu;
        }
    }
    return best;
}

double assignment_objective(const ModelGraph& graph, const Assignment& assignment,
                            const AccelConfig& accel, const HostConfig& host,
                            double energy_weight) {
    SimResult sim = simulate_assignment(graph, assignment, accel, host,
                                        SimOptions{.record_timeline = false});
    return sim_objective(sim, energy_weight);
}

// ---------------------------------------------------------------------------
// Q-table text serialization
// ---------------------------------------------------------------------------

void save_qtable(const QTablePair& q, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "offsim-qtable v1\n";
    out << q.q_primary.size() << "\n";
    char line[160];
    for (const auto& [state, values] : q.q_primary) {
        std::snprintf(line, sizeof line, "%d %d %d %d %.17g %.17g\n", state.layer_index,
                      static_cast<int>(state.prev), static_cast<int>(state.intensity_bucket),
                      static_cast<int>(state.occupancy_bucket), values[0], values[1]);
        out << line;
    }
}

QTablePair load_qtable(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string header;
    std::getline(in, header);
    if (header != "offsim-qtable v1") throw ConfigError(path + ": unknown q-table format");
    size_t count = 0;
    in >> count;
    QTablePair q;
    for (size_t i = 0; i < count; ++i) {
        int layer = 0, prev = 0, ib = 0, ob = 0;
        double v0 = 0, v1 = 0;
        if (!(in >> layer >> prev >> ib >> ob >> v0 >> v1))
            throw ConfigError(path + ": truncated q-table entry");
        AgentState s{layer, static_cast<PrevPlacement>(prev), static_cast<int8_t>(ib),
                     static_cast<int8_t>(ob)};
        q.q_primary[s] = {v0, v1};
    }
    q.q_target = q.q_primary;  // reloaded tables start synchronized
    q.steps_since_sync = 0;
    return q;
}

}  // namespace offsim
