#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

namespace krlab::harness {

struct EmitFormats {
    bool json = true;
    bool csv = true;
    bool svg = true;
};

// Renders the artifacts found in a run directory (summary.json from a
// scenario, grid.json from a surrogate grid, sweep.json from a budget sweep)
// into report.json, CSV tables, and SVG plots, written back into the same
// directory. JSON and CSV carry identical numeric content (every cell is the
// shortest round-trip decimal of the stored double), and re-emitting from an
// unchanged directory is byte-identical. A directory with per-seed records
// but no summary emits partial tables flagged incomplete.
std::vector<std::filesystem::path> emit_report(const std::filesystem::path& run_dir,
                                               const EmitFormats& formats);

// Standalone SVG builders, exposed for tests.
std::string sweep_heatmap_svg(const nlohmann::json& sweep);
std::string sweep_lines_svg(const nlohmann::json& sweep);

}  // namespace krlab::harness
