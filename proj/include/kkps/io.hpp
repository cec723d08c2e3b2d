#pragma once

#include "kkps/analysis.hpp"
#include "kkps/engine.hpp"
#include "kkps/experiments.hpp"
#include "kkps/params.hpp"
#include "kkps/world.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace kkps {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view tool_name = "kkps-sim";
inline constexpr std::string_view tool_version = "0.1.0";

// ---- configuration ---------------------------------------------------------

//! Every parameter, canonical key order.
Json params_to_json(const ModelParams& p);

//! Applies the keys present in `j` on top of `defaults`. Throws UnknownKey for
//! keys that are not parameters and ParseError for values of the wrong type.
ModelParams params_from_json(const Json& j, ModelParams defaults = {});

Json sweep_to_json(const SweepConfig& cfg);
SweepConfig sweep_from_json(const Json& j);

using Config = std::variant<ModelParams, SweepConfig>;

//! A document with a "base" or "axes" key is a sweep, anything else a
//! parameter set. Syntax errors raise ParseError with line and column.
Config parse_config(std::string_view text);
Config load_config(const std::filesystem::path& path);

// ---- serialization ---------------------------------------------------------

//! Sparse triplet form: {"k","m","n","documents":[[t,d,v]...],
//! "users":[[i,t,v]...],"utility":[[i,d,v]...]}.
Json world_to_json(const TopicWorld& world);
TopicWorld world_from_json(const Json& j);

Json fit_to_json(const PowerLawFit& fit);

//! Per-iteration rows: iteration,new_links,cumulative_links,attained_utility,efficiency
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

//! Same rows prefixed with a seed column, one block per record.
void write_cell_csv(std::ostream& os, const std::vector<const RunRecord*>& records);

//! Rows: degree,count
void write_histogram_csv(std::ostream& os, const DegreeHistogram& hist);
DegreeHistogram read_histogram_csv(std::istream& is);

//! Tab-separated "user<TAB>document" lines ordered by (user, document).
void write_edge_list(std::ostream& os, const WwwState& state);

//! Efficiency by iteration read back from a trajectory or cell CSV. Seeds
//! that converged early keep their final value; the series is the median
//! over seeds.
struct EfficiencySeries {
    std::string name;
    std::vector<double> iterations;
    std::vector<double> efficiency;
};
EfficiencySeries read_efficiency_csv(std::istream& is, std::string name);

Json trend_to_json(const TrendCheck& check);

//! Writes manifest.json, aggregate.csv, records.csv, trends.json and
//! cells/cell_NNN.csv plus cells/cell_NNN_hist.csv into `dir`.
void write_sweep_outputs(const SweepResult& result, const std::filesystem::path& dir, const Json& manifest);

//! Text file helper that throws Error when the file cannot be written.
void write_text_file(const std::filesystem::path& path, std::string_view content);

std::string format_number(double v);

} // namespace kkps
