#pragma once

#include <string>
#include <vector>

#include "offsim/exec_sim.hpp"

namespace offsim {

enum class ReportFormat { Table, Csv, Json };

// Table format carries the five fixed metric rows; csv/json keep full precision.
std::string report_to_string(const RunReport& report, ReportFormat format);
void emit_report(const RunReport& report, ReportFormat format, const std::string& path);

RunReport report_from_json(const std::string& text);
RunReport load_report(const std::string& path);

// Side-by-side table over several runs, one column per mode.
std::string comparison_table(const std::vector<RunReport>& reports);

// CSV with columns resource,layer,tile,start_s,end_s.
std::string timeline_to_csv(const Timeline& timeline);
void export_timeline(const Timeline& timeline, const std::string& path);

}  // namespace offsim
