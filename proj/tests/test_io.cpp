#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "offsim/errors.hpp"
#include "offsim/harness.hpp"
#include "offsim/report_io.hpp"

using namespace offsim;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

RunReport sample_report() {
    RunReport report;
    report.mode = "fpga-agent";
    report.latency_ms_per_image = 3.4999999;
    report.throughput_images_per_s = 284.7001;
    report.power_w = 28.0;
    report.energy_j_per_image = 0.098;
    report.efficiency_images_per_s_per_w = 10.168;
    report.layers_on_cpu = 0;
    report.layers_on_fpga = 23;
    return report;
}

}  // namespace

TEST_CASE("benchmark config round trip is byte-identical") {
    const BenchmarkConfig cfg = default_benchmark_config();
    const std::string first = benchmark_config_to_json(cfg);
    const BenchmarkConfig reloaded = benchmark_config_from_json(first);
    const std::string second = benchmark_config_to_json(reloaded);
    CHECK(first == second);
}

TEST_CASE("benchmark config parse errors carry path and field") {
    CHECK_THROWS_AS(benchmark_config_from_json("{not json", "bench.json"), ConfigError);
    try {
        benchmark_config_from_json(R"({"mode":"warp-drive"})", "bench.json");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        CHECK(what.find("bench.json") != std::string::npos);
        CHECK(what.find("mode") != std::string::npos);
    }
}

TEST_CASE("heuristic threshold accepts a number or auto") {
    const BenchmarkConfig numeric =
        benchmark_config_from_json(R"({"heuristic_threshold": 2.5})");
    CHECK_FALSE(numeric.heuristic_threshold_auto);
    CHECK(numeric.heuristic_threshold == 2.5);
    const BenchmarkConfig swept = benchmark_config_from_json(R"({"heuristic_threshold": "auto"})");
    CHECK(swept.heuristic_threshold_auto);
    CHECK_THROWS_AS(benchmark_config_from_json(R"({"heuristic_threshold": "sometimes"})"),
                    ConfigError);
}

TEST_CASE("report emission") {
    const RunReport report = sample_report();

    SUBCASE("table carries the five fixed row labels") {
        const std::string table = report_to_string(report, ReportFormat::Table);
        CHECK(table.find("Latency (ms/image)") != std::string::npos);
        CHECK(table.find("Throughput (images/s)") != std::string::npos);
        CHECK(table.find("Power Consumption (W)") != std::string::npos);
        CHECK(table.find("Energy Efficiency (images/s/W)") != std::string::npos);
        CHECK(table.find("Top-1 Accuracy (%)") != std::string::npos);
        CHECK(table.find("10.17") != std::string::npos);  // two-decimal efficiency
        CHECK(table.find("n/a") != std::string::npos);    // accuracy not evaluated
    }
    SUBCASE("csv is a header plus five metric rows") {
        const std::string csv = report_to_string(report, ReportFormat::Csv);
        int rows = 0;
        for (char c : csv)
            if (c == '\n') ++rows;
        CHECK(rows == 6);
        CHECK(csv.rfind("metric,value\n", 0) == 0);
    }
    SUBCASE("json round trip preserves every value") {
        const std::string text = report_to_string(report, ReportFormat::Json);
        const RunReport reloaded = report_from_json(text);
        CHECK(reloaded.latency_ms_per_image == report.latency_ms_per_image);
        CHECK(reloaded.throughput_images_per_s == report.throughput_images_per_s);
        CHECK(reloaded.power_w == report.power_w);
        CHECK(reloaded.energy_j_per_image == report.energy_j_per_image);
        CHECK(reloaded.efficiency_images_per_s_per_w == report.efficiency_images_per_s_per_w);
        CHECK(reloaded.layers_on_cpu == report.layers_on_cpu);
        CHECK(reloaded.layers_on_fpga == report.layers_on_fpga);
        CHECK_FALSE(reloaded.top1_accuracy.has_value());

        RunReport with_accuracy = report;
        with_accuracy.top1_accuracy = 91.9;
        const RunReport reloaded2 =
            report_from_json(report_to_string(with_accuracy, ReportFormat::Json));
        REQUIRE(reloaded2.top1_accuracy.has_value());
        CHECK(*reloaded2.top1_accuracy == 91.9);
    }
}

TEST_CASE("timeline csv format") {
    Timeline timeline;
    timeline.segments.push_back({Resource::FpgaCompute, 3, 1, 1e-6, 2e-6});
    timeline.segments.push_back({Resource::DmaIn, 4, -1, 2e-6, 3e-6});
    const std::string csv = timeline_to_csv(timeline);
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "resource,layer,tile,start_s,end_s");
    std::getline(lines, line);
    CHECK(line.rfind("fpga_compute,3,1,", 0) == 0);
    std::getline(lines, line);
    CHECK(line.rfind("dma_in,4,-1,", 0) == 0);
}

TEST_CASE("verify claims") {
    RunReport cpu = sample_report();
    cpu.mode = "cpu";
    cpu.latency_ms_per_image = 40.2;
    cpu.throughput_images_per_s = 24.8;
    cpu.power_w = 85.0;
    cpu.efficiency_images_per_s_per_w = 24.8 / 85.0;
    RunReport gpu = sample_report();
    gpu.mode = "gpu";
    gpu.latency_ms_per_image = 6.1;
    gpu.throughput_images_per_s = 112.0;
    gpu.power_w = 125.0;
    gpu.efficiency_images_per_s_per_w = 112.0 / 125.0;
    RunReport fpga = sample_report();
    fpga.latency_ms_per_image = 3.5;
    fpga.throughput_images_per_s = 284.7;
    fpga.efficiency_images_per_s_per_w = 284.7 / 28.0;

    SUBCASE("calibrated reports pass the speedup claim") {
        const ClaimChecklist checklist = verify_claims(&cpu, &gpu, &fpga, 0.4, 0.5);
        CHECK(checklist.all_passed());
        CHECK(checklist.items.size() == 3);
        CHECK(checklist.items[0].detail.find("11.49") != std::string::npos);
        // The efficiency-ratio discrepancy is annotated, never silently passed.
        CHECK(checklist.items[1].informational);
        CHECK(checklist.items[1].detail.find("11.3") != std::string::npos);
        CHECK(checklist.items[1].detail.find("2-3x") != std::string::npos);
    }
    SUBCASE("missing fpga report is an error") {
        CHECK_THROWS_AS(verify_claims(&cpu, &gpu, nullptr, std::nullopt, 0.5), MissingReport);
        CHECK_THROWS_AS(verify_claims(nullptr, &gpu, &fpga, std::nullopt, 0.5), MissingReport);
    }
    SUBCASE("accuracy threshold gates the claim") {
        CHECK(verify_claims(&cpu, &gpu, &fpga, 0.4, 0.5).all_passed());
        CHECK_FALSE(verify_claims(&cpu, &gpu, &fpga, 0.6, 0.5).all_passed());
    }
    SUBCASE("slow fpga fails the speedup claim") {
        RunReport slow = fpga;
        slow.latency_ms_per_image = 10.0;
        CHECK_FALSE(verify_claims(&cpu, &gpu, &slow, 0.1, 0.5).all_passed());
    }
}

TEST_CASE("run_benchmark is deterministic per seed") {
    BenchmarkConfig cfg = default_benchmark_config();
    cfg.model_path = "models/resnet_tiny.json";
    cfg.platform_path = "platforms/paper_calibrated.json";
    cfg.mode = BenchMode::FpgaAgent;
    cfg.rng_seed = 77;
    cfg.agent->episodes = 150;

    const BenchOutcome a = run_benchmark(cfg);
    const BenchOutcome b = run_benchmark(cfg);
    CHECK(report_to_string(a.report, ReportFormat::Json) ==
          report_to_string(b.report, ReportFormat::Json));
    CHECK(a.assignment.placement == b.assignment.placement);
}

TEST_CASE("oracle mode lower-bounds the other modes on a toy graph") {
    BenchmarkConfig cfg = default_benchmark_config();
    cfg.model_path = "models/toy3.json";
    cfg.platform_path = "platforms/paper_calibrated.json";
    cfg.agent->episodes = 300;
    cfg.rng_seed = 5;

    cfg.mode = BenchMode::FpgaOracle;
    const double oracle = run_benchmark(cfg).sim.makespan_s;
    cfg.mode = BenchMode::Cpu;
    const double cpu = run_benchmark(cfg).sim.makespan_s;
    cfg.mode = BenchMode::FpgaHeuristic;
    const double heuristic = run_benchmark(cfg).sim.makespan_s;
    cfg.mode = BenchMode::FpgaAgent;
    const double agent = run_benchmark(cfg).sim.makespan_s;

    CHECK(oracle <= cpu + 1e-15);
    CHECK(oracle <= heuristic + 1e-15);
    CHECK(oracle <= agent + 1e-15);
}

TEST_CASE("generated model files match the generator output") {
    const ModelGraph timing = build_resnet_like(4, 64, {1, 3, 32, 32}, 10);
    CHECK(model_to_json(timing) == slurp("models/resnet_small.json"));
    const ModelGraph eval = build_resnet_like(2, 16, {1, 3, 32, 32}, 10);
    CHECK(model_to_json(eval) == slurp("models/resnet_tiny.json"));
}
