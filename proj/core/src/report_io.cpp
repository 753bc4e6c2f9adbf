#include "offsim/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "offsim/errors.hpp"

namespace offsim {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kMetricLabels[5] = {
    "Latency (ms/image)",
    "Throughput (images/s)",
    "Power Consumption (W)",
    "Energy Efficiency (images/s/W)",
    "Top-1 Accuracy (%)",
};

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string metric_cell(const RunReport& r, int row) {
    switch (row) {
        case 0: return fixed(r.latency_ms_per_image, 3);
        case 1: return fixed(r.throughput_images_per_s, 1);
        case 2: return fixed(r.power_w, 1);
        case 3: return fixed(r.efficiency_images_per_s_per_w, 2);
        case 4: return r.top1_accuracy ? fixed(*r.top1_accuracy, 1) : std::string("n/a");
    }
    return {};
}

std::string full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string report_to_string(const RunReport& report, ReportFormat format) {
    switch (format) {
        case ReportFormat::Table: {
            std::ostringstream out;
            size_t width = 0;
            for (const char* label : kMetricLabels) width = std::max(width, std::string(label).size());
            if (!report.mode.empty()) out << "Mode: " << report.mode << "\n";
            for (int row = 0; row < 5; ++row) {
                std::string label = kMetricLabels[row];
                label.resize(width + 2, ' ');
                out << label << metric_cell(report, row) << "\n";
            }
            return out.str();
        }
        case ReportFormat::Csv: {
            std::ostringstream out;
            out << "metric,value\n";
            out << kMetricLabels[0] << "," << full(report.latency_ms_per_image) << "\n";
            out << kMetricLabels[1] << "," << full(report.throughput_images_per_s) << "\n";
            out << kMetricLabels[2] << "," << full(report.power_w) << "\n";
            out << kMetricLabels[3] << "," << full(report.efficiency_images_per_s_per_w) << "\n";
            out << kMetricLabels[4] << ","
                << (report.top1_accuracy ? full(*report.top1_accuracy) : std::string("")) << "\n";
            return out.str();
        }
        case ReportFormat::Json: {
            ordered_json j;
            j["mode"] = report.mode;
            j["latency_ms_per_image"] = report.latency_ms_per_image;
            j["throughput_images_per_s"] = report.throughput_images_per_s;
            j["power_w"] = report.power_w;
            j["energy_j_per_image"] = report.energy_j_per_image;
            j["efficiency_images_per_s_per_w"] = report.efficiency_images_per_s_per_w;
            j["assignment_summary"] = {{"cpu", report.layers_on_cpu}, {"fpga", report.layers_on_fpga}};
            if (report.top1_accuracy)
                j["top1_accuracy"] = *report.top1_accuracy;
            else
                j["top1_accuracy"] = nullptr;
            return j.dump(2) + "\n";
        }
    }
    return {};
}

void emit_report(const RunReport& report, ReportFormat format, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << report_to_string(report, format);
}

RunReport report_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("report json parse error: ") + e.what());
    }
    RunReport report;
    report.mode = j.value("mode", std::string{});
    report.latency_ms_per_image = j.at("latency_ms_per_image").get<double>();
    report.throughput_images_per_s = j.at("throughput_images_per_s").get<double>();
    report.power_w = j.at("power_w").get<double>();
    report.energy_j_per_image = j.at("energy_j_per_image").get<double>();
    report.efficiency_images_per_s_per_w = j.at("efficiency_images_per_s_per_w").get<double>();
    report.layers_on_cpu = j.at("assignment_summary").at("cpu").get<int64_t>();
    report.layers_on_fpga = j.at("assignment_summary").at("fpga").get<int64_t>();
    if (j.contains("top1_accuracy") && !j.at("top1_accuracy").is_null())
        report.top1_accuracy = j.at("top1_accuracy").get<double>();
    return report;
}

RunReport load_report(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return report_from_json(buffer.str());
}

std::string comparison_table(const std::vector<RunReport>& reports) {
    std::ostringstream out;
    size_t label_width = 0;
    for (const char* label : kMetricLabels) label_width = std::max(label_width, std::string(label).size());

    std::string header(label_width + 2, ' ');
    out << header;
    for (const RunReport& r : reports) {
        char cell[32];
        std::snprintf(cell, sizeof cell, "%14s", r.mode.empty() ? "run" : r.mode.c_str());
        out << cell;
    }
    out << "\n";
    for (int row = 0; row < 5; ++row) {
        std::string label = kMetricLabels[row];
        label.resize(label_width + 2, ' ');
        out << label;
        for (const RunReport& r : reports) {
            char cell[32];
            std::snprintf(cell, sizeof cell, "%14s", metric_cell(r, row).c_str());
            out << cell;
        }
        out << "\n";
    }
    return out.str();
}

std::string timeline_to_csv(const Timeline& timeline) {
    std::ostringstream out;
    out << "resource,layer,tile,start_s,end_s\n";
    char line[160];
    for (const Segment& seg : timeline.segments) {
        std::snprintf(line, sizeof line, "%s,%d,%d,%.17g,%.17g\n", to_string(seg.resource),
                      seg.layer_id, seg.tile_index, seg.start_s, seg.end_s);
        out << line;
    }
    return out.str();
}

void export_timeline(const Timeline& timeline, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << timeline_to_csv(timeline);
}

}  // namespace offsim
