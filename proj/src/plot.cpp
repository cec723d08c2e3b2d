#include "kkps/plot.hpp"

#include "kkps/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace kkps {

namespace {

constexpr double width = 640, height = 440;
constexpr double left = 70, right = 20, top = 40, bottom = 50;
constexpr double plot_w = width - left - right;
constexpr double plot_h = height - top - bottom;

const char* const palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                               "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(std::string_view text)
{
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string header(const std::string& title)
{
    return fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n"
        "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
        "<text x=\"{2:.1f}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{3}</text>\n"
        "<rect x=\"{4}\" y=\"{5}\" width=\"{6}\" height=\"{7}\" fill=\"none\" stroke=\"black\"/>\n",
        width, height, width / 2, escape(title), left, top, plot_w, plot_h);
}

std::string axis_labels(std::string_view x_label, std::string_view y_label)
{
    return fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n"
                       "<text x=\"16\" y=\"{:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1f})\">{}</text>\n",
                       left + plot_w / 2, height - 12, escape(x_label), top + plot_h / 2, top + plot_h / 2,
                       escape(y_label));
}

struct LogAxis {
    double lo; //!< log10 of the lower bound
    double hi;

    static LogAxis covering(double min_value, double max_value)
    {
        double lo = std::floor(std::log10(min_value));
        double hi = std::ceil(std::log10(max_value));
        if (hi <= lo) hi = lo + 1;
        return {lo, hi};
    }

    double frac(double v) const { return (std::log10(v) - lo) / (hi - lo); }
};

std::string decade_label(double exponent)
{
    return fmt::format("{}", std::pow(10.0, exponent));
}

} // namespace

PlotKind parse_plot_kind(std::string_view text)
{
    if (text == "loglog-degree") return PlotKind::loglog_degree;
    if (text == "efficiency-curve") return PlotKind::efficiency_curve;
    throw UsageError(fmt::format("unknown plot kind '{}' (loglog-degree | efficiency-curve)", text));
}

std::string loglog_degree_svg(const DegreeHistogram& hist, const std::string& title)
{
    std::vector<std::pair<double, double>> points;
    for (auto [degree, count] : hist.counts) {
        if (degree >= 1 && count >= 1) points.emplace_back(static_cast<double>(degree), static_cast<double>(count));
    }
    if (points.empty()) throw SchemaMismatch("histogram has no positive degree with positive count");

    double max_x = 1, max_y = 1;
    for (auto [x, y] : points) {
        max_x = std::max(max_x, x);
        max_y = std::max(max_y, y);
    }
    const LogAxis xa = LogAxis::covering(points.front().first, max_x);
    const LogAxis ya = LogAxis::covering(1.0, max_y);
    auto px = [&](double x) { return left + xa.frac(x) * plot_w; };
    auto py = [&](double y) { return top + plot_h - ya.frac(y) * plot_h; };

    std::string svg = header(title);
    for (double e = xa.lo; e <= xa.hi; e += 1) {
        double x = left + (e - xa.lo) / (xa.hi - xa.lo) * plot_w;
        svg += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"#ddd\"/>\n"
                           "<text x=\"{0:.2f}\" y=\"{3}\" text-anchor=\"middle\">{4}</text>\n",
                           x, top, top + plot_h, top + plot_h + 16, decade_label(e));
    }
    for (double e = ya.lo; e <= ya.hi; e += 1) {
        double y = top + plot_h - (e - ya.lo) / (ya.hi - ya.lo) * plot_h;
        svg += fmt::format("<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"#ddd\"/>\n"
                           "<text x=\"{3}\" y=\"{4:.2f}\" text-anchor=\"end\">{5}</text>\n",
                           left, y, left + plot_w, left - 6, y + 4, decade_label(e));
    }
    svg += axis_labels("in-degree", "documents");

    for (auto [x, y] : points)
        svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", px(x), py(y), palette[0]);

    std::string legend;
    try {
        PowerLawFit fit = fit_power_law(hist, FitMethod::mle);
        const double norm = hurwitz_zeta(fit.exponent, static_cast<double>(fit.xmin));
        const double lo = std::log10(static_cast<double>(fit.xmin));
        const double hi = std::log10(max_x);
        std::string path;
        constexpr int steps = 48;
        for (int s = 0; s <= steps; ++s) {
            double x = std::pow(10.0, lo + (hi - lo) * s / steps);
            double y = static_cast<double>(fit.sample_size) * std::pow(x, -fit.exponent) / norm;
            if (y < std::pow(10.0, ya.lo)) break;
            path += fmt::format("{}{:.2f},{:.2f}", path.empty() ? "" : " ", px(x), py(y));
        }
        if (!path.empty())
            svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n", path,
                               palette[1]);
        legend = fmt::format("mle fit: exponent {:.3f}, xmin {}, goodness {:.3f}", fit.exponent, fit.xmin,
                             fit.goodness);
    }
    catch (const Error& e) {
        legend = fmt::format("no fit: {}", e.what());
    }
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\" fill=\"{}\">{}</text>\n", left + plot_w - 8,
                       top + 18, palette[1], escape(legend));
    svg += "</svg>\n";
    return svg;
}

std::string efficiency_curve_svg(const std::vector<EfficiencySeries>& series, const std::string& title)
{
    double max_it = 1;
    for (const auto& s : series) {
        if (!s.iterations.empty()) max_it = std::max(max_it, s.iterations.back());
    }
    auto px = [&](double it) { return left + (it - 1) / std::max(1.0, max_it - 1) * plot_w; };
    auto py = [&](double e) { return top + plot_h - std::clamp(e, 0.0, 1.0) * plot_h; };

    std::string svg = header(title);
    for (int t = 0; t <= 10; t += 2) {
        double v = t / 10.0;
        svg += fmt::format("<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"#ddd\"/>\n"
                           "<text x=\"{3}\" y=\"{4:.2f}\" text-anchor=\"end\">{5:.1f}</text>\n",
                           left, py(v), left + plot_w, left - 6, py(v) + 4, v);
    }
    const int step = max_it > 20 ? 5 : 1;
    for (int it = 1; it <= static_cast<int>(max_it); it += step) {
        svg += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", px(it),
                           top + plot_h + 16, it);
    }
    svg += axis_labels("iteration", "efficiency");

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* color = palette[i % std::size(palette)];
        std::string path;
        for (std::size_t j = 0; j < s.iterations.size(); ++j)
            path += fmt::format("{}{:.2f},{:.2f}", j ? " " : "", px(s.iterations[j]), py(s.efficiency[j]));
        svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n", path, color);
        for (std::size_t j = 0; j < s.iterations.size(); ++j)
            svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\"/>\n", px(s.iterations[j]),
                               py(s.efficiency[j]), color);
        const double ly = top + plot_h - 12 - 16.0 * static_cast<double>(series.size() - 1 - i);
        svg += fmt::format("<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"{3}\" stroke-width=\"2\"/>\n"
                           "<text x=\"{4}\" y=\"{5:.2f}\">{6}</text>\n",
                           left + plot_w - 180, ly, left + plot_w - 160, color, left + plot_w - 154, ly + 4,
                           escape(s.name));
    }
    svg += "</svg>\n";
    return svg;
}

std::vector<std::filesystem::path> emit_plots(const std::vector<std::filesystem::path>& inputs, PlotKind kind,
                                              const std::filesystem::path& out)
{
    namespace fs = std::filesystem;
    if (inputs.empty()) throw UsageError("plot needs at least one input CSV");
    auto open = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw SchemaMismatch(fmt::format("cannot read {}", p.string()));
        return in;
    };

    std::vector<fs::path> written;
    if (kind == PlotKind::loglog_degree) {
        fs::create_directories(out);
        for (const fs::path& input : inputs) {
            auto in = open(input);
            DegreeHistogram hist;
            try {
                hist = read_histogram_csv(in);
            }
            catch (const SchemaMismatch& e) {
                throw SchemaMismatch(fmt::format("{}: {}", input.string(), e.what()));
            }
            fs::path target = out / (input.stem().string() + ".svg");
            write_text_file(target, loglog_degree_svg(hist, input.stem().string()));
            written.push_back(target);
        }
    }
    else {
        std::vector<EfficiencySeries> series;
        for (const fs::path& input : inputs) {
            auto in = open(input);
            try {
                series.push_back(read_efficiency_csv(in, input.stem().string()));
            }
            catch (const SchemaMismatch& e) {
                throw SchemaMismatch(fmt::format("{}: {}", input.string(), e.what()));
            }
        }
        fs::path target = out;
        if (out.extension() != ".svg") {
            fs::create_directories(out);
            target = out / "efficiency.svg";
        }
        else if (out.has_parent_path()) {
            fs::create_directories(out.parent_path());
        }
        write_text_file(target, efficiency_curve_svg(series, "efficiency by iteration"));
        written.push_back(target);
    }
    return written;
}

} // namespace kkps
