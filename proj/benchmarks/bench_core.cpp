#include <benchmark/benchmark.h>

#include <random>

#include "offsim/agent.hpp"
#include "offsim/exec_sim.hpp"
#include "offsim/inference.hpp"
#include "offsim/model_graph.hpp"
#include "offsim/platform.hpp"

namespace {

offsim::AccelConfig bench_accel() {
    offsim::AccelConfig cfg;
    cfg.num_macs = 512;
    cfg.clock_hz = 200e6;
    cfg.onchip_buffer_bytes = 512 << 10;
    cfg.per_layer_setup_s = 30e-6;
    return cfg;
}

offsim::HostConfig bench_host() {
    offsim::HostConfig host;
    host.effective_macs_per_sec = 6.8e9;
    host.per_layer_overhead_s = 40e-6;
    host.power_w = 85.0;
    return host;
}

void BM_SimulateAssignment(benchmark::State& state) {
    const offsim::ModelGraph graph = offsim::build_resnet_like(4, 64, {1, 3, 32, 32});
    const offsim::AccelConfig accel = bench_accel();
    const offsim::HostConfig host = bench_host();
    const offsim::Assignment all_fpga =
        offsim::Assignment::uniform(graph.layer_count(), offsim::Placement::Fpga);
    for (auto _ : state) {
        auto sim = offsim::simulate_assignment(graph, all_fpga, accel, host,
                                               offsim::SimOptions{.record_timeline = false});
        benchmark::DoNotOptimize(sim.makespan_s);
    }
}
BENCHMARK(BM_SimulateAssignment);

void BM_PlanTiles(benchmark::State& state) {
    offsim::LayerCost cost;
    cost.input_bytes = 1 << 20;
    cost.weight_bytes = 3 << 20;
    cost.output_bytes = 1 << 20;
    cost.macs = 1 << 26;
    const offsim::AccelConfig accel = bench_accel();
    for (auto _ : state) {
        auto plan = offsim::plan_tiles(cost, 2048, accel);
        benchmark::DoNotOptimize(plan);
    }
}
BENCHMARK(BM_PlanTiles);

void BM_TrainEpisodeBatch(benchmark::State& state) {
    const offsim::ModelGraph graph = offsim::build_resnet_like(2, 16, {1, 3, 32, 32});
    const offsim::AccelConfig accel = bench_accel();
    const offsim::HostConfig host = bench_host();
    offsim::AgentConfig cfg;
    cfg.episodes = static_cast<int>(state.range(0));
    cfg.rng_seed = 3;
    for (auto _ : state) {
        auto result = offsim::train_agent(graph, accel, host, cfg);
        benchmark::DoNotOptimize(result.episode_costs.back());
    }
}
BENCHMARK(BM_TrainEpisodeBatch)->Arg(100)->Arg(500);

void BM_FloatForward(benchmark::State& state) {
    const offsim::ModelGraph graph = offsim::build_resnet_like(2, 8, {1, 3, 32, 32});
    const offsim::FloatWeights weights = offsim::init_random_weights(graph, 1);
    offsim::Tensor input(graph.input_shape);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    for (float& v : input.data) v = dist(rng);
    for (auto _ : state) {
        auto logits = offsim::float_forward(graph, weights, input);
        benchmark::DoNotOptimize(logits.data);
    }
}
BENCHMARK(BM_FloatForward);

void BM_Int8Forward(benchmark::State& state) {
    const offsim::ModelGraph graph = offsim::build_resnet_like(2, 8, {1, 3, 32, 32});
    const offsim::FloatWeights weights = offsim::init_random_weights(graph, 1);
    offsim::Tensor input(graph.input_shape);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    for (float& v : input.data) v = dist(rng);
    const offsim::QuantizedModel qm = offsim::quantize_model(graph, weights, {input});
    for (auto _ : state) {
        auto logits = offsim::int8_forward(graph, qm, input);
        benchmark::DoNotOptimize(logits.data);
    }
}
BENCHMARK(BM_Int8Forward);

}  // namespace

BENCHMARK_MAIN();
