// offsim command line: model generation, agent training, benchmark runs,
// claim verification, timeline export.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "offsim/agent.hpp"
#include "offsim/errors.hpp"
#include "offsim/harness.hpp"
#include "offsim/report_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitClaimFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitInfeasible = 3;

offsim::TensorShape parse_shape(const std::string& text) {
    offsim::TensorShape shape;
    if (std::sscanf(text.c_str(), "%ld,%ld,%ld,%ld", &shape.batch, &shape.channels, &shape.height,
                    &shape.width) != 4)
        throw offsim::ConfigError("--input expects N,C,H,W");
    return shape;
}

struct CommonFlags {
    std::string config_path;
    std::string model;
    std::string platforms;
    std::optional<uint64_t> seed;
    std::optional<int> episodes;
};

offsim::BenchmarkConfig resolve_config(const CommonFlags& flags) {
    offsim::BenchmarkConfig cfg = flags.config_path.empty()
                                      ? offsim::default_benchmark_config()
                                      : offsim::load_benchmark_config(flags.config_path);
    if (!cfg.agent) cfg.agent = offsim::AgentConfig{};
    if (!flags.model.empty()) cfg.model_path = flags.model;
    if (!flags.platforms.empty()) cfg.platform_path = flags.platforms;
    if (flags.seed) cfg.rng_seed = *flags.seed;
    if (flags.episodes) cfg.agent->episodes = *flags.episodes;
    return cfg;
}

int run_verify(const offsim::BenchmarkConfig& base_cfg) {
    using namespace offsim;

    BenchmarkConfig cfg = base_cfg;
    cfg.report_json_path.clear();
    cfg.report_csv_path.clear();
    cfg.timeline_csv_path.clear();

    cfg.mode = BenchMode::Cpu;
    RunReport cpu = run_benchmark(cfg).report;
    cfg.mode = BenchMode::Gpu;
    RunReport gpu = run_benchmark(cfg).report;
    cfg.mode = BenchMode::FpgaAgent;
    RunReport fpga = run_benchmark(cfg).report;

    // Metrics are analytic per image; num_images only caps the accuracy
    // evaluation sample count.
    QuantEvalConfig quant_cfg = cfg.quant;
    quant_cfg.dataset_samples =
        static_cast<int>(std::min<int64_t>(quant_cfg.dataset_samples, cfg.num_images));
    const AccuracyOutcome accuracy = run_accuracy_eval(quant_cfg);
    cpu.top1_accuracy = accuracy.float_eval.top1_accuracy;  // full-precision hosts
    gpu.top1_accuracy = accuracy.float_eval.top1_accuracy;
    fpga.top1_accuracy = accuracy.int8_eval.top1_accuracy;  // quantized path

    std::cout << comparison_table({cpu, gpu, fpga}) << "\n";
    std::cout << "accuracy eval (" << accuracy.float_eval.num_samples << " samples): float "
              << accuracy.float_eval.top1_accuracy << "%, int8 " << accuracy.int8_eval.top1_accuracy
              << "%, delta " << accuracy.delta_points << " points\n\n";

    const ClaimChecklist checklist = verify_claims(&cpu, &gpu, &fpga, accuracy.delta_points,
                                                   cfg.quant.accuracy_threshold_points);
    for (const ClaimCheck& item : checklist.items) {
        const char* verdict = item.informational ? "INFO" : (item.passed ? "PASS" : "FAIL");
        std::printf("%-28s %-4s  %s\n", item.name.c_str(), verdict, item.detail.c_str());
    }
    return checklist.all_passed() ? kExitOk : kExitClaimFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"heterogeneous CPU/FPGA inference scheduling simulator"};
    app.require_subcommand(1);

    // gen-model
    auto* gen = app.add_subcommand("gen-model", "generate a residual CNN model config");
    int gen_blocks = 4;
    int64_t gen_base = 64;
    int64_t gen_classes = 10;
    std::string gen_input = "1,3,32,32";
    std::string gen_out;
    gen->add_option("--blocks", gen_blocks, "residual block count")->capture_default_str();
    gen->add_option("--base-channels", gen_base, "stem output channels")->capture_default_str();
    gen->add_option("--classes", gen_classes, "classifier outputs")->capture_default_str();
    gen->add_option("--input", gen_input, "input shape N,C,H,W")->capture_default_str();
    gen->add_option("--out", gen_out, "output path (stdout when omitted)");

    // train
    auto* train = app.add_subcommand("train", "train the offload agent and save its q-table");
    CommonFlags train_flags;
    std::string train_qtable = "qtable.txt";
    std::string train_trace;
    train->add_option("--config", train_flags.config_path, "benchmark config json");
    train->add_option("--model", train_flags.model, "model config path");
    train->add_option("--platforms", train_flags.platforms, "platform config path");
    train->add_option("--seed", train_flags.seed, "rng seed");
    train->add_option("--episodes", train_flags.episodes, "training episodes");
    train->add_option("--out", train_qtable, "q-table output path")->capture_default_str();
    train->add_option("--trace", train_trace, "per-episode objective csv");

    // bench
    auto* bench = app.add_subcommand("bench", "simulate one benchmark mode and report metrics");
    CommonFlags bench_flags;
    std::string bench_mode;
    std::string bench_load_qtable, bench_save_qtable;
    std::string bench_report_json, bench_report_csv, bench_timeline;
    bench->add_option("--config", bench_flags.config_path, "benchmark config json");
    bench->add_option("--model", bench_flags.model, "model config path");
    bench->add_option("--platforms", bench_flags.platforms, "platform config path");
    bench->add_option("--mode", bench_mode, "cpu|gpu|fpga-agent|fpga-heuristic|fpga-oracle");
    bench->add_option("--seed", bench_flags.seed, "rng seed");
    bench->add_option("--episodes", bench_flags.episodes, "training episodes");
    bench->add_option("--load-qtable", bench_load_qtable, "reuse a trained q-table");
    bench->add_option("--save-qtable", bench_save_qtable, "persist the trained q-table");
    bench->add_option("--report-json", bench_report_json, "write the report as json");
    bench->add_option("--report-csv", bench_report_csv, "write the report as csv");
    bench->add_option("--timeline-csv", bench_timeline, "write the simulated timeline");

    // verify
    auto* verify = app.add_subcommand("verify", "run cpu/gpu/fpga-agent and check the headline claims");
    CommonFlags verify_flags;
    verify->add_option("--config", verify_flags.config_path, "benchmark config json");
    verify->add_option("--model", verify_flags.model, "model config path");
    verify->add_option("--platforms", verify_flags.platforms, "platform config path");
    verify->add_option("--seed", verify_flags.seed, "rng seed");
    verify->add_option("--episodes", verify_flags.episodes, "training episodes");

    // export-timeline
    auto* timeline = app.add_subcommand("export-timeline", "simulate and export the timeline csv");
    CommonFlags timeline_flags;
    std::string timeline_mode = "fpga-agent";
    std::string timeline_out = "timeline.csv";
    timeline->add_option("--config", timeline_flags.config_path, "benchmark config json");
    timeline->add_option("--model", timeline_flags.model, "model config path");
    timeline->add_option("--platforms", timeline_flags.platforms, "platform config path");
    timeline->add_option("--mode", timeline_mode, "benchmark mode")->capture_default_str();
    timeline->add_option("--seed", timeline_flags.seed, "rng seed");
    timeline->add_option("--out", timeline_out, "csv output path")->capture_default_str();

    // emit-config
    auto* emit = app.add_subcommand("emit-config", "write the default benchmark config");
    std::string emit_out;
    emit->add_option("--out", emit_out, "output path (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            offsim::ModelGraph graph = offsim::build_resnet_like(gen_blocks, gen_base,
                                                                 parse_shape(gen_input), gen_classes);
            if (gen_out.empty())
                std::cout << offsim::model_to_json(graph);
            else
                offsim::save_model(graph, gen_out);
            return kExitOk;
        }

        if (train->parsed()) {
            offsim::BenchmarkConfig cfg = resolve_config(train_flags);
            offsim::ModelGraph graph = offsim::resolve_model(cfg);
            offsim::PlatformSet platforms = offsim::load_platforms(cfg.platform_path);
            offsim::AgentConfig agent_cfg = *cfg.agent;
            agent_cfg.rng_seed = cfg.rng_seed;
            offsim::TrainResult result =
                offsim::train_agent(graph, platforms.accel, platforms.cpu, agent_cfg);
            offsim::save_qtable(result.q, train_qtable);
            if (!train_trace.empty()) {
                std::ofstream trace(train_trace);
                trace << "episode,objective\n";
                for (size_t i = 0; i < result.episode_costs.size(); ++i)
                    trace << i << "," << result.episode_costs[i] << "\n";
            }
            std::cout << "trained " << agent_cfg.episodes << " episodes; q-table states: "
                      << result.q.q_primary.size() << "; final objective: "
                      << result.episode_costs.back() << " s\n";
            std::cout << "layers offloaded by the greedy policy: "
                      << result.best_assignment.count(offsim::Placement::Fpga) << "/"
                      << graph.layer_count() << "\n";
            return kExitOk;
        }

        if (bench->parsed()) {
            offsim::BenchmarkConfig cfg = resolve_config(bench_flags);
            if (!bench_mode.empty()) {
                auto mode = offsim::bench_mode_from_string(bench_mode);
                if (!mode) throw offsim::ConfigError("unknown mode '" + bench_mode + "'");
                cfg.mode = *mode;
            }
            if (!bench_load_qtable.empty()) cfg.load_qtable_path = bench_load_qtable;
            if (!bench_save_qtable.empty()) cfg.save_qtable_path = bench_save_qtable;
            if (!bench_report_json.empty()) cfg.report_json_path = bench_report_json;
            if (!bench_report_csv.empty()) cfg.report_csv_path = bench_report_csv;
            if (!bench_timeline.empty()) cfg.timeline_csv_path = bench_timeline;

            offsim::BenchOutcome outcome = offsim::run_benchmark(cfg);
            if (!outcome.resources.feasible())
                std::cerr << "warning: accelerator config is resource-infeasible (utilization "
                          << outcome.resources.utilization << ")\n";
            std::cout << offsim::report_to_string(outcome.report, offsim::ReportFormat::Table);
            return kExitOk;
        }

        if (verify->parsed()) return run_verify(resolve_config(verify_flags));

        if (timeline->parsed()) {
            offsim::BenchmarkConfig cfg = resolve_config(timeline_flags);
            auto mode = offsim::bench_mode_from_string(timeline_mode);
            if (!mode) throw offsim::ConfigError("unknown mode '" + timeline_mode + "'");
            cfg.mode = *mode;
            cfg.timeline_csv_path = timeline_out;
            offsim::run_benchmark(cfg);
            std::cout << "timeline written to " << timeline_out << "\n";
            return kExitOk;
        }

        if (emit->parsed()) {
            const std::string text =
                offsim::benchmark_config_to_json(offsim::default_benchmark_config());
            if (emit_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream out(emit_out, std::ios::binary);
                if (!out) throw offsim::IoError("cannot write " + emit_out);
                out << text;
            }
            return kExitOk;
        }
    } catch (const offsim::InfeasibleAssignment& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const offsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const offsim::TooManyLayers& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const offsim::MissingReport& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const offsim::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
    return kExitOk;
}
