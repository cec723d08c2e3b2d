#include "kkps/analysis.hpp"

#include "kkps/errors.hpp"

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_zeta.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace kkps {

DegreeHistogram histogram_of(std::span<const std::int64_t> values)
{
    DegreeHistogram hist;
    for (std::int64_t v : values) ++hist.counts[v];
    hist.total = static_cast<std::int64_t>(values.size());
    return hist;
}

DegreeHistogram indegree_histogram(const WwwState& state)
{
    return histogram_of(state.indegree());
}

std::string_view to_string(FitMethod m)
{
    return m == FitMethod::mle ? "mle" : "loglog-ls";
}

FitMethod parse_fit_method(std::string_view text)
{
    if (text == "mle") return FitMethod::mle;
    if (text == "loglog-ls") return FitMethod::loglog_ls;
    throw UsageError(fmt::format("unknown fit method '{}'", text));
}

double hurwitz_zeta(double s, double q)
{
    static const bool handler_off = [] {
        gsl_set_error_handler_off();
        return true;
    }();
    (void)handler_off;

    gsl_sf_result result;
    int status = gsl_sf_hzeta_e(s, q, &result);
    if (status == GSL_EUNDRFLW) return 0.0;
    if (status != GSL_SUCCESS)
        throw Error(fmt::format("hurwitz zeta({}, {}) failed: {}", s, q, gsl_strerror(status)));
    return result.val;
}

namespace {

struct Bucket {
    std::int64_t value;
    std::int64_t count;
};

std::vector<Bucket> positive_buckets(const DegreeHistogram& hist)
{
    std::vector<Bucket> out;
    for (auto [value, count] : hist.counts) {
        if (value >= 1 && count > 0) out.push_back({value, count});
    }
    return out;
}

struct TailFit {
    double exponent;
    double ks;
};

constexpr double min_exponent = 1.0 + 1e-9;
constexpr double max_exponent = 50.0;

// Discrete MLE on the buckets [first, end) and KS distance of the result.
TailFit fit_tail(std::span<const Bucket> tail, std::int64_t count, double log_sum)
{
    const auto xmin = static_cast<double>(tail.front().value);
    const auto total = static_cast<double>(count);
    auto nll = [&](double alpha) {
        return total * std::log(hurwitz_zeta(alpha, xmin)) + alpha * log_sum;
    };
    auto [alpha, value] = boost::math::tools::brent_find_minima(nll, min_exponent, max_exponent, 40);
    (void)value;

    const double norm = hurwitz_zeta(alpha, xmin);
    double ks = 0.0;
    double seen = 0.0;
    for (const Bucket& bk : tail) {
        const auto x = static_cast<double>(bk.value);
        // model CDF just below x and at x
        double below = bk.value == tail.front().value ? 0.0 : 1.0 - hurwitz_zeta(alpha, x) / norm;
        double at = 1.0 - hurwitz_zeta(alpha, x + 1.0) / norm;
        double emp_below = seen / total;
        seen += static_cast<double>(bk.count);
        double emp_at = seen / total;
        ks = std::max({ks, std::abs(emp_below - below), std::abs(emp_at - at)});
    }
    return {alpha, ks};
}

PowerLawFit fit_mle(const std::vector<Bucket>& buckets)
{
    const std::size_t size = buckets.size();
    std::vector<std::int64_t> tail_count(size + 1, 0);
    std::vector<double> tail_log(size + 1, 0.0);
    for (std::size_t j = size; j-- > 0;) {
        tail_count[j] = tail_count[j + 1] + buckets[j].count;
        tail_log[j] = tail_log[j + 1] +
                      static_cast<double>(buckets[j].count) * std::log(static_cast<double>(buckets[j].value));
    }

    PowerLawFit best;
    best.method = FitMethod::mle;
    double best_ks = std::numeric_limits<double>::infinity();
    // a candidate needs min_fit_sample observations and two distinct values
    for (std::size_t j = 0; j + 1 < size && tail_count[j] >= min_fit_sample; ++j) {
        std::span<const Bucket> tail(buckets.data() + j, size - j);
        TailFit fit = fit_tail(tail, tail_count[j], tail_log[j]);
        if (fit.ks < best_ks) {
            best_ks = fit.ks;
            best.exponent = fit.exponent;
            best.xmin = buckets[j].value;
            best.sample_size = tail_count[j];
        }
    }
    best.goodness = 1.0 - best_ks;
    return best;
}

PowerLawFit fit_loglog(const std::vector<Bucket>& buckets, std::int64_t positives)
{
    const auto size = static_cast<double>(buckets.size());
    double sx = 0, sy = 0;
    for (const Bucket& bk : buckets) {
        sx += std::log(static_cast<double>(bk.value));
        sy += std::log(static_cast<double>(bk.count));
    }
    const double mx = sx / size;
    const double my = sy / size;
    double sxx = 0, sxy = 0, syy = 0;
    for (const Bucket& bk : buckets) {
        double dx = std::log(static_cast<double>(bk.value)) - mx;
        double dy = std::log(static_cast<double>(bk.count)) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    PowerLawFit fit;
    fit.method = FitMethod::loglog_ls;
    const double slope = sxy / sxx;
    fit.exponent = -slope;
    // all buckets with equal counts lie on a horizontal line
    fit.goodness = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    fit.xmin = buckets.front().value;
    fit.sample_size = positives;
    return fit;
}

} // namespace

PowerLawFit fit_power_law(const DegreeHistogram& hist, FitMethod method)
{
    auto buckets = positive_buckets(hist);
    std::int64_t positives = 0;
    for (const Bucket& bk : buckets) positives += bk.count;
    if (positives < min_fit_sample)
        throw InsufficientData(fmt::format("{} positive observations, need at least {}", positives,
                                           min_fit_sample));
    if (buckets.size() < 2)
        throw DegenerateDistribution(
            fmt::format("all {} positive observations equal {}", positives, buckets.front().value));

    return method == FitMethod::mle ? fit_mle(buckets) : fit_loglog(buckets, positives);
}

double max_total_utility(const TopicWorld& world, std::int64_t b)
{
    double total = 0.0;
    std::vector<double> values;
    for (std::size_t i = 0; i < world.users(); ++i) {
        values.clear();
        for (std::uint32_t d : world.useful_documents(i)) values.push_back(world.utility(i, d));
        const auto take = std::min(values.size(), static_cast<std::size_t>(std::max<std::int64_t>(b, 0)));
        std::partial_sort(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(take), values.end(),
                          std::greater<>());
        double user_total = 0.0;
        for (std::size_t j = 0; j < take; ++j) user_total += values[j];
        total += user_total;
    }
    return total;
}

double efficiency(const IterationRecord& record, double total_utility)
{
    if (!(total_utility > 0.0))
        throw ZeroTotalUtility(fmt::format("total utility is {}", total_utility));
    return record.attained_utility / total_utility;
}

double early_improvement_share(const Trajectory& traj, std::int64_t by_iteration)
{
    const auto& recs = traj.records;
    if (recs.empty()) return 1.0;
    const double first = recs.front().efficiency;
    const double last = recs.back().efficiency;
    const double gain = last - first;
    if (gain <= 1e-12) return 1.0;
    const auto at = std::min<std::size_t>(recs.size(), static_cast<std::size_t>(std::max<std::int64_t>(by_iteration, 1)));
    return (recs[at - 1].efficiency - first) / gain;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v)
{
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t l = i; l <= j; ++l) ranks[order[l]] = rank;
        i = j + 1;
    }
    return ranks;
}

} // namespace

double spearman(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size())
        throw Error(fmt::format("spearman: {} vs {} values", x.size(), y.size()));
    if (x.size() < 2) return 0.0;
    auto rx = average_ranks(x);
    auto ry = average_ranks(y);
    const double mean = 0.5 * static_cast<double>(x.size() + 1);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = rx[i] - mean;
        double dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

} // namespace kkps
