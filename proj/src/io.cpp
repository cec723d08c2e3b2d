#include "kkps/io.hpp"

#include "kkps/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace kkps {

std::string format_number(double v)
{
    return fmt::format("{}", v);
}

void write_text_file(const std::filesystem::path& path, std::string_view content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write {}", path.string()));
    out << content;
    if (!out) throw Error(fmt::format("write failed: {}", path.string()));
}

// ---- configuration ---------------------------------------------------------

Json params_to_json(const ModelParams& p)
{
    Json j;
    j["k"] = p.k;
    j["m"] = p.m;
    j["n"] = p.n;
    j["a"] = p.a;
    j["b"] = p.b;
    j["q_dist"] = to_string(p.q_dist);
    j["init_dist"] = format_init_dist(p.init_dist);
    j["seed"] = p.seed;
    j["max_iterations"] = p.max_iterations;
    j["scope"] = to_string(p.scope);
    j["update"] = to_string(p.update);
    j["tie_break"] = to_string(p.tie_break);
    return j;
}

namespace {

std::string_view type_name(const Json& v)
{
    return v.type_name();
}

bool is_integer(const Json& v)
{
    return v.is_number_integer() || v.is_number_unsigned();
}

} // namespace

ModelParams params_from_json(const Json& j, ModelParams p)
{
    if (!j.is_object()) throw ParseError(fmt::format("parameters must be an object, got {}", type_name(j)));
    static const std::vector<std::string> string_keys = {"q_dist", "init_dist", "scope", "update", "tie_break"};
    for (const auto& [key, value] : j.items()) {
        const auto& names = param_names();
        if (std::find(names.begin(), names.end(), key) == names.end())
            throw UnknownKey(fmt::format("unknown key '{}'", key));
        const bool wants_string = std::find(string_keys.begin(), string_keys.end(), key) != string_keys.end();
        if (wants_string) {
            if (!value.is_string())
                throw ParseError(fmt::format("key '{}': expected string, got {}", key, type_name(value)));
            try {
                set_param(p, key, value.get<std::string>());
            }
            catch (const UsageError& e) {
                throw ParseError(fmt::format("key '{}': {}", key, e.what()));
            }
        }
        else {
            if (!is_integer(value))
                throw ParseError(fmt::format("key '{}': expected integer, got {}", key, type_name(value)));
            if (key == "seed") {
                if (!value.is_number_unsigned() && value.get<std::int64_t>() < 0)
                    throw ParseError("key 'seed': expected unsigned integer");
                p.seed = value.get<std::uint64_t>();
            }
            else {
                set_param(p, key, std::to_string(value.get<std::int64_t>()));
            }
        }
    }
    return p;
}

namespace {

// Axis values travel as text; integers in canonical form are written as JSON
// numbers so hand-written configs and manifests look alike.
Json axis_value_to_json(const std::string& v)
{
    try {
        std::size_t used = 0;
        long long parsed = std::stoll(v, &used);
        if (used == v.size() && std::to_string(parsed) == v) return parsed;
    }
    catch (const std::exception&) {
    }
    return v;
}

std::string axis_value_from_json(const Json& v)
{
    if (v.is_string()) return v.get<std::string>();
    if (is_integer(v)) return v.dump();
    if (v.is_number_float()) return format_number(v.get<double>());
    throw ParseError(fmt::format("axis value must be a number or string, got {}", type_name(v)));
}

} // namespace

Json sweep_to_json(const SweepConfig& cfg)
{
    Json j;
    j["name"] = cfg.name;
    j["base"] = params_to_json(cfg.base);
    j["axes"] = Json::array();
    for (const Axis& axis : cfg.axes) {
        Json a;
        a["params"] = axis.params;
        a["values"] = Json::array();
        for (const auto& v : axis.values) a["values"].push_back(axis_value_to_json(v));
        j["axes"].push_back(std::move(a));
    }
    j["seeds"] = cfg.seeds;
    j["replicates"] = cfg.replicates;
    return j;
}

SweepConfig sweep_from_json(const Json& j)
{
    if (!j.is_object()) throw ParseError("sweep config must be an object");
    SweepConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "name") {
            if (!value.is_string()) throw ParseError("key 'name': expected string");
            cfg.name = value.get<std::string>();
        }
        else if (key == "base") {
            cfg.base = params_from_json(value);
        }
        else if (key == "axes") {
            if (!value.is_array()) throw ParseError("key 'axes': expected array");
            for (const auto& item : value) {
                if (!item.is_object()) throw ParseError("axis must be an object");
                Axis axis;
                for (const auto& [akey, aval] : item.items()) {
                    if (akey == "param") {
                        if (!aval.is_string()) throw ParseError("axis 'param': expected string");
                        axis.params = {aval.get<std::string>()};
                    }
                    else if (akey == "params") {
                        if (!aval.is_array()) throw ParseError("axis 'params': expected array");
                        for (const auto& name : aval) {
                            if (!name.is_string()) throw ParseError("axis 'params': expected strings");
                            axis.params.push_back(name.get<std::string>());
                        }
                    }
                    else if (akey == "values") {
                        if (!aval.is_array()) throw ParseError("axis 'values': expected array");
                        for (const auto& v : aval) axis.values.push_back(axis_value_from_json(v));
                    }
                    else {
                        throw UnknownKey(fmt::format("unknown axis key '{}'", akey));
                    }
                }
                for (const auto& name : axis.params) {
                    const auto& names = param_names();
                    if (std::find(names.begin(), names.end(), name) == names.end())
                        throw UnknownKey(fmt::format("unknown sweep parameter '{}'", name));
                }
                if (axis.params.empty() || axis.values.empty())
                    throw ParseError("axis needs 'param(s)' and non-empty 'values'");
                cfg.axes.push_back(std::move(axis));
            }
        }
        else if (key == "seeds") {
            if (!value.is_array()) throw ParseError("key 'seeds': expected array");
            for (const auto& s : value) {
                if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
                    throw ParseError("key 'seeds': expected unsigned integers");
                cfg.seeds.push_back(s.get<std::uint64_t>());
            }
        }
        else if (key == "replicates") {
            if (!is_integer(value) || value.get<std::int64_t>() < 1)
                throw ParseError("key 'replicates': expected positive integer");
            cfg.replicates = value.get<std::int64_t>();
        }
        else {
            throw UnknownKey(fmt::format("unknown key '{}'", key));
        }
    }
    return cfg;
}

Config parse_config(std::string_view text)
{
    Json j;
    try {
        j = Json::parse(text.begin(), text.end());
    }
    catch (const nlohmann::json::parse_error& e) {
        // locate the failing byte as line:column
        std::size_t line = 1, column = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            }
            else {
                ++column;
            }
        }
        throw ParseError(fmt::format("line {}, column {}: {}", line, column, e.what()));
    }
    // a manifest written by the tool carries its resolved config
    if (j.is_object() && j.contains("tool") && j.contains("config")) j = Json(j["config"]);
    if (j.is_object() && (j.contains("base") || j.contains("axes"))) return sweep_from_json(j);
    return params_from_json(j);
}

Config load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(fmt::format("cannot open config {}", path.string()));
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_config(buffer.str());
    }
    catch (const ParseError& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

// ---- serialization ---------------------------------------------------------

namespace {

Json triplets(const Matrix& mat)
{
    Json out = Json::array();
    for (std::size_t r = 0; r < mat.rows(); ++r) {
        for (std::size_t c = 0; c < mat.cols(); ++c) {
            if (mat(r, c) != 0.0) out.push_back(Json::array({r, c, mat(r, c)}));
        }
    }
    return out;
}

Matrix from_triplets(const Json& j, std::size_t rows, std::size_t cols, const char* what)
{
    if (!j.is_array()) throw ParseError(fmt::format("'{}' must be an array of triplets", what));
    Matrix mat(rows, cols);
    for (const auto& t : j) {
        if (!t.is_array() || t.size() != 3 || !is_integer(t[0]) || !is_integer(t[1]) || !t[2].is_number())
            throw ParseError(fmt::format("'{}' entries must be [row, col, value]", what));
        auto r = t[0].get<std::size_t>();
        auto c = t[1].get<std::size_t>();
        if (r >= rows || c >= cols) throw ParseError(fmt::format("'{}' entry ({}, {}) out of range", what, r, c));
        mat(r, c) = t[2].get<double>();
    }
    return mat;
}

} // namespace

Json world_to_json(const TopicWorld& world)
{
    Json j;
    j["k"] = world.topics();
    j["m"] = world.users();
    j["n"] = world.documents();
    j["documents"] = triplets(world.document_matrix());
    j["users"] = triplets(world.user_matrix());
    j["utility"] = triplets(world.utility_matrix());
    return j;
}

TopicWorld world_from_json(const Json& j)
{
    for (const char* key : {"k", "m", "n"}) {
        if (!j.contains(key) || !is_integer(j[key])) throw ParseError(fmt::format("world needs integer '{}'", key));
    }
    const auto k = j["k"].get<std::size_t>();
    const auto m = j["m"].get<std::size_t>();
    const auto n = j["n"].get<std::size_t>();
    TopicWorld world(from_triplets(j.at("documents"), k, n, "documents"), from_triplets(j.at("users"), m, k, "users"));
    if (j.contains("utility") && from_triplets(j["utility"], m, n, "utility") != world.utility_matrix())
        throw ParseError("stored utility does not match documents x users");
    return world;
}

Json fit_to_json(const PowerLawFit& fit)
{
    Json j;
    j["exponent"] = fit.exponent;
    j["xmin"] = fit.xmin;
    j["goodness"] = fit.goodness;
    j["method"] = to_string(fit.method);
    j["sample_size"] = fit.sample_size;
    return j;
}

namespace {

constexpr std::string_view trajectory_header = "iteration,new_links,cumulative_links,attained_utility,efficiency";

void write_rows(std::ostream& os, const Trajectory& traj, const std::string& prefix)
{
    for (const IterationRecord& r : traj.records) {
        os << prefix
           << fmt::format("{},{},{},{},{}\n", r.iteration, r.new_links, r.cumulative_links,
                          format_number(r.attained_utility), format_number(r.efficiency));
    }
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string strip_cr(std::string line)
{
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

double to_double(const std::string& s, std::size_t line_no)
{
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    }
    catch (const std::exception&) {
        throw SchemaMismatch(fmt::format("line {}: '{}' is not a number", line_no, s));
    }
}

std::int64_t to_int(const std::string& s, std::size_t line_no)
{
    try {
        std::size_t used = 0;
        long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    }
    catch (const std::exception&) {
        throw SchemaMismatch(fmt::format("line {}: '{}' is not an integer", line_no, s));
    }
}

} // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj)
{
    os << trajectory_header << '\n';
    write_rows(os, traj, "");
}

void write_cell_csv(std::ostream& os, const std::vector<const RunRecord*>& records)
{
    os << "seed," << trajectory_header << '\n';
    for (const RunRecord* rec : records) write_rows(os, rec->trajectory, fmt::format("{},", rec->seed));
}

void write_histogram_csv(std::ostream& os, const DegreeHistogram& hist)
{
    os << "degree,count\n";
    for (auto [degree, count] : hist.counts) os << degree << ',' << count << '\n';
}

DegreeHistogram read_histogram_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || strip_cr(line) != "degree,count")
        throw SchemaMismatch("histogram CSV must start with header 'degree,count'");
    DegreeHistogram hist;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != 2) throw SchemaMismatch(fmt::format("line {}: expected 2 fields", line_no));
        std::int64_t degree = to_int(fields[0], line_no);
        std::int64_t count = to_int(fields[1], line_no);
        if (degree < 0 || count < 0) throw SchemaMismatch(fmt::format("line {}: negative value", line_no));
        if (hist.counts.count(degree)) throw SchemaMismatch(fmt::format("line {}: duplicate degree {}", line_no, degree));
        hist.counts[degree] = count;
        hist.total += count;
    }
    if (hist.counts.empty()) throw SchemaMismatch("histogram CSV has no rows");
    return hist;
}

void write_edge_list(std::ostream& os, const WwwState& state)
{
    for (auto [user, doc] : state.links()) os << user << '\t' << doc << '\n';
}

EfficiencySeries read_efficiency_csv(std::istream& is, std::string name)
{
    std::string line;
    if (!std::getline(is, line)) throw SchemaMismatch("trajectory CSV is empty");
    line = strip_cr(line);
    bool with_seed = false;
    if (line == fmt::format("seed,{}", trajectory_header)) with_seed = true;
    else if (line != trajectory_header)
        throw SchemaMismatch(fmt::format("unexpected trajectory header '{}'", line));

    std::map<std::int64_t, std::map<std::int64_t, double>> by_seed; // seed -> iteration -> efficiency
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto fields = split_csv(line);
        const std::size_t expected = with_seed ? 6 : 5;
        if (fields.size() != expected)
            throw SchemaMismatch(fmt::format("line {}: expected {} fields, got {}", line_no, expected, fields.size()));
        const std::size_t off = with_seed ? 1 : 0;
        std::int64_t seed = with_seed ? to_int(fields[0], line_no) : 0;
        std::int64_t iteration = to_int(fields[off], line_no);
        for (std::size_t f = off + 1; f < off + 3; ++f) to_int(fields[f], line_no);
        to_double(fields[off + 3], line_no);
        double eff = to_double(fields[off + 4], line_no);
        by_seed[seed][iteration] = eff;
    }
    if (by_seed.empty()) throw SchemaMismatch("trajectory CSV has no rows");

    std::int64_t last = 0;
    for (const auto& [seed, rows] : by_seed) last = std::max(last, rows.rbegin()->first);
    EfficiencySeries series;
    series.name = std::move(name);
    for (std::int64_t it = 1; it <= last; ++it) {
        std::vector<double> values;
        for (const auto& [seed, rows] : by_seed) {
            auto pos = rows.upper_bound(it);
            if (pos == rows.begin()) continue;
            values.push_back(std::prev(pos)->second);
        }
        if (values.empty()) continue;
        series.iterations.push_back(static_cast<double>(it));
        series.efficiency.push_back(quantile(values, 0.5));
    }
    return series;
}

Json trend_to_json(const TrendCheck& check)
{
    Json j;
    j["claim"] = check.claim;
    j["group"] = check.group;
    j["metric"] = check.metric;
    j["axis"] = check.axis;
    j["axis_values"] = check.axis_values;
    j["medians"] = check.medians;
    j["expected_sign"] = check.expected_sign;
    j["correlation"] = check.correlation;
    j["inversions"] = check.inversions;
    j["pass"] = check.pass;
    j["gated"] = check.gated;
    j["detail"] = check.detail;
    return j;
}

void write_sweep_outputs(const SweepResult& result, const std::filesystem::path& dir, const Json& manifest)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir / "cells");
    const auto seeds = result.config.effective_seeds();

    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");

    std::ostringstream agg;
    agg << "cell,label,runs,failed";
    for (const auto& metric : metric_names()) agg << ',' << metric << "_median," << metric << "_q1," << metric << "_q3";
    agg << '\n';
    for (const CellSummary& s : result.summaries) {
        agg << s.cell.index << ",\"" << s.cell.label << "\"," << s.runs << ',' << s.failed;
        for (const auto& metric : metric_names()) {
            const Summary& st = s.metrics.at(metric);
            agg << ',' << format_number(st.median) << ',' << format_number(st.q1) << ',' << format_number(st.q3);
        }
        agg << '\n';
    }
    write_text_file(dir / "aggregate.csv", agg.str());

    std::ostringstream recs;
    recs << "cell,seed,status,iterations,converged,distinct_phase,links,final_efficiency,early_share,"
            "mle_exponent,mle_xmin,mle_goodness,mle_sample_size,loglog_exponent,loglog_goodness,"
            "capacity_warning,message\n";
    for (const RunRecord& r : result.records) {
        std::string message = r.ok() ? r.fit_error : r.error;
        std::replace(message.begin(), message.end(), '"', '\'');
        const auto links = r.trajectory.records.empty() ? 0 : r.trajectory.records.back().cumulative_links;
        recs << fmt::format("{},{},{},{},{},{},{},{},{},", r.cell, r.seed, r.ok() ? "ok" : "error",
                            r.trajectory.records.size(), r.trajectory.converged ? 1 : 0,
                            r.trajectory.distinct_phase, links, format_number(r.final_efficiency),
                            format_number(r.early_share));
        if (r.mle)
            recs << fmt::format("{},{},{},{},", format_number(r.mle->exponent), r.mle->xmin,
                                format_number(r.mle->goodness), r.mle->sample_size);
        else
            recs << ",,,,";
        if (r.loglog)
            recs << fmt::format("{},{},", format_number(r.loglog->exponent), format_number(r.loglog->goodness));
        else
            recs << ",,";
        recs << (r.capacity_warning ? 1 : 0) << ",\"" << message << "\"\n";
    }
    write_text_file(dir / "records.csv", recs.str());

    for (const Cell& cell : result.cells) {
        std::vector<const RunRecord*> cell_records;
        DegreeHistogram pooled;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            const RunRecord& r = result.records[cell.index * seeds.size() + s];
            if (!r.ok()) continue;
            cell_records.push_back(&r);
            for (auto [degree, count] : r.histogram.counts) pooled.counts[degree] += count;
            pooled.total += r.histogram.total;
        }
        std::ostringstream traj;
        write_cell_csv(traj, cell_records);
        write_text_file(dir / "cells" / fmt::format("cell_{:03}.csv", cell.index), traj.str());
        std::ostringstream hist;
        write_histogram_csv(hist, pooled);
        write_text_file(dir / "cells" / fmt::format("cell_{:03}_hist.csv", cell.index), hist.str());
    }

    Json trends = Json::array();
    for (const TrendCheck& check : trend_tests(result)) trends.push_back(trend_to_json(check));
    write_text_file(dir / "trends.json", trends.dump(2) + "\n");
}

} // namespace kkps
