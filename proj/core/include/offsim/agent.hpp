#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "offsim/exec_sim.hpp"
#include "offsim/model_graph.hpp"
#include "offsim/platform.hpp"

namespace offsim {

enum class ActionChoice : uint8_t { RunOnCpu = 0, OffloadToFpga = 1 };

enum class PrevPlacement : uint8_t { None = 0, Cpu = 1, Fpga = 2 };

struct AgentState {
    int32_t layer_index = 0;
    PrevPlacement prev = PrevPlacement::None;
    int8_t intensity_bucket = 0;  // log-spaced arithmetic-intensity bucket
    int8_t occupancy_bucket = 0;  // minimal-tile fraction of on-chip buffer

    auto operator<=>(const AgentState&) const = default;
};

struct AgentConfig {
    double alpha = 0.1;            // learning rate in (0,1]
    double gamma = 0.95;           // discount in [0,1)
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay = 0.995;  // geometric per-episode decay
    int sync_period_n = 100;       // steps between target-table syncs
    int episodes = 2000;
    double reward_energy_weight = 0.0;  // lambda
    uint64_t rng_seed = 1;
    bool select_from_target = false;    // action selection reads the primary table
    int intensity_buckets = 8;
};

std::optional<std::string> check_invariants(const AgentConfig& cfg);

// Primary (Q_A) and target (Q_B) action-value tables. Unseen states read 0.
struct QTablePair {
    std::map<AgentState, std::array<double, 2>> q_primary;
    std::map<AgentState, std::array<double, 2>> q_target;
    int64_t steps_since_sync = 0;

    std::array<double, 2> primary_values(const AgentState& s) const;
    std::array<double, 2> target_values(const AgentState& s) const;
};

int intensity_bucket_of(double arithmetic_intensity, int buckets);
int occupancy_bucket_of(double min_tile_fraction);

AgentState encode_state(const ModelGraph& graph, const std::vector<LayerCost>& costs,
                        int layer_index, PrevPlacement prev, const AccelConfig& accel,
                        int intensity_buckets = 8);

// Epsilon-greedy over the two actions; ties break toward RunOnCpu. epsilon == 0
// consumes no randomness.
ActionChoice select_action(const QTablePair& q, const AgentState& s, double epsilon,
                           std::mt19937_64& rng, bool from_target = false);

// Temporal-difference update against the frozen target table; syncs the target
// copy every sync_period_n steps. A terminal next state contributes no future value.
void td_update(QTablePair& q, const AgentState& s, ActionChoice a, double reward,
               const std::optional<AgentState>& s_next, const AgentConfig& cfg);

struct TrainResult {
    QTablePair q;
    Assignment best_assignment;          // greedy policy under the final primary table
    std::vector<double> episode_costs;   // per-episode objective trace
};

// Q-learning over per-layer offload decisions. Each episode walks the layers
// in stored order; the reward is the negated incremental makespan (plus the
// weighted energy increment). Untileable layers are forced to the CPU and the
// forced transition still updates the tables. Deterministic given the seed.
TrainResult train_agent(const ModelGraph& graph, const AccelConfig& accel,
                        const HostConfig& host, const AgentConfig& cfg);

// Greedy (epsilon = 0) rollout with the forced-CPU fallback applied.
Assignment greedy_assignment(const ModelGraph& graph, const AccelConfig& accel,
                             const HostConfig& host, const QTablePair& q, const AgentConfig& cfg);

// Offload every tileable layer whose arithmetic intensity reaches the threshold.
Assignment heuristic_baseline(const ModelGraph& graph, const std::vector<LayerCost>& costs,
                              const AccelConfig& accel, double intensity_threshold);

inline constexpr int kMaxBruteForceLayers = 14;

struct OracleResult {
    Assignment assignment;
    double objective = 0;
};

// Exhaustive enumeration of every feasible placement vector (2^L).
OracleResult brute_force_partition(const ModelGraph& graph, const AccelConfig& accel,
                                   const HostConfig& host, double energy_weight = 0.0,
                                   int max_layers = kMaxBruteForceLayers);

double assignment_objective(const ModelGraph& graph, const Assignment& assignment,
                            const AccelConfig& accel, const HostConfig& host,
                            double energy_weight = 0.0);

// Versioned text format: one line per state tuple with the two action values.
void save_qtable(const QTablePair& q, const std::string& path);
QTablePair load_qtable(const std::string& path);

}  // namespace offsim
