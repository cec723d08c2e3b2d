#pragma once

#include "kkps/analysis.hpp"
#include "kkps/io.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kkps {

enum class PlotKind { loglog_degree, efficiency_curve };

PlotKind parse_plot_kind(std::string_view text);

//! Log-log scatter of count against degree with the mle fit overlaid when
//! the histogram supports one.
std::string loglog_degree_svg(const DegreeHistogram& hist, const std::string& title);

//! Efficiency against iteration, one polyline per series.
std::string efficiency_curve_svg(const std::vector<EfficiencySeries>& series, const std::string& title);

//! Renders plots for CSV inputs. loglog-degree writes one SVG per histogram
//! next to `out` (a directory); efficiency-curve writes a single SVG, `out`
//! being a file or a directory. Returns the files written. Throws
//! SchemaMismatch for malformed inputs.
std::vector<std::filesystem::path> emit_plots(const std::vector<std::filesystem::path>& inputs, PlotKind kind,
                                              const std::filesystem::path& out);

} // namespace kkps
