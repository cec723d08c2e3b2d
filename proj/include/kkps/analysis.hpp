#pragma once

#include "kkps/engine.hpp"
#include "kkps/world.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

namespace kkps {

//! Number of documents per in-degree value, zero bucket included.
struct DegreeHistogram {
    std::map<std::int64_t, std::int64_t> counts;
    std::int64_t total = 0;

    bool operator==(const DegreeHistogram&) const = default;
};

DegreeHistogram indegree_histogram(const WwwState& state);
DegreeHistogram histogram_of(std::span<const std::int64_t> values);

enum class FitMethod { mle, loglog_ls };

std::string_view to_string(FitMethod m);
FitMethod parse_fit_method(std::string_view text);

struct PowerLawFit {
    double exponent = 0.0;
    std::int64_t xmin = 0;
    //! 1 - KS distance for mle, coefficient of determination for loglog-ls.
    double goodness = 0.0;
    FitMethod method = FitMethod::mle;
    //! Observations used by the fit (those >= xmin).
    std::int64_t sample_size = 0;
};

//! Minimum number of positive observations a fit requires, and the minimum
//! tail size considered when scanning xmin.
inline constexpr std::int64_t min_fit_sample = 10;

//! Fits p(x) ~ x^-exponent to the positive part of the histogram.
//!
//! mle: discrete maximum likelihood for each candidate xmin, keeping the
//! candidate whose fitted CDF has the smallest Kolmogorov-Smirnov distance to
//! the empirical tail. loglog-ls: least squares line through
//! (log degree, log count) over the nonzero buckets.
//!
//! Throws InsufficientData below min_fit_sample positive observations and
//! DegenerateDistribution when all of them are equal.
PowerLawFit fit_power_law(const DegreeHistogram& hist, FitMethod method);

//! Hurwitz zeta function sum_{j>=0} (q + j)^-s for s > 1, q > 0.
double hurwitz_zeta(double s, double q);

//! Largest per-iteration utility: for every user, the sum of its
//! min(b, #positive) largest utilities.
double max_total_utility(const TopicWorld& world, std::int64_t b);

//! attained_utility / total_utility. Throws ZeroTotalUtility if total <= 0.
double efficiency(const IterationRecord& record, double total_utility);

//! Share of the efficiency gained between the first and the last iteration
//! that was already present after `by_iteration` iterations. Runs without
//! improvement count as fully captured.
double early_improvement_share(const Trajectory& traj, std::int64_t by_iteration = 3);

//! Spearman rank correlation with average ranks for ties; 0 when either side
//! is constant.
double spearman(std::span<const double> x, std::span<const double> y);

} // namespace kkps
