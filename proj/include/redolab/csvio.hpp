#pragma once

#include <optional>
#include <string>
#include <vector>

#include "redolab/agent.hpp"

namespace redolab {

// Deterministic float formatting for all machine-readable output: %.17g
// round-trips doubles exactly and never depends on locale.
std::string format_double(double v);

void write_metric_csv(const MetricSeries& series, const std::string& dir);

struct LoadedRun {
    std::vector<MetricRow> rows;
    std::vector<DormancyRow> dormancy;
};

LoadedRun load_metric_csv(const std::string& dir);

void ensure_dir(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace redolab
