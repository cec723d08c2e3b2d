#include "kkps/params.hpp"

#include "kkps/errors.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <cstdlib>

namespace kkps {

namespace {

std::int64_t parse_int(std::string_view name, std::string_view text)
{
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw UsageError(fmt::format("invalid integer for {}: '{}'", name, text));
    return value;
}

std::uint64_t parse_uint(std::string_view name, std::string_view text)
{
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw UsageError(fmt::format("invalid unsigned integer for {}: '{}'", name, text));
    return value;
}

double parse_double(std::string_view name, std::string_view text)
{
    // from_chars for double is missing from older libstdc++; strtod on a copy
    // keeps the whole-token check.
    std::string copy(text);
    char* end = nullptr;
    double value = std::strtod(copy.c_str(), &end);
    if (copy.empty() || end != copy.c_str() + copy.size() || !std::isfinite(value))
        throw UsageError(fmt::format("invalid number for {}: '{}'", name, text));
    return value;
}

} // namespace

std::int64_t docs_per_topic(const ModelParams& p)
{
    return (2 * p.n + p.k) / (2 * p.k);
}

CheckedParams validate_params(const ModelParams& p)
{
    const std::pair<const char*, std::int64_t> counts[] = {
        {"k", p.k}, {"m", p.m}, {"n", p.n}, {"a", p.a}, {"b", p.b}};
    for (auto [name, value] : counts) {
        if (value <= 0)
            throw NonPositive(fmt::format("{} must be positive, got {}", name, value));
    }
    if (p.max_iterations < 0)
        throw NonPositive(fmt::format("max_iterations must be >= 0, got {}", p.max_iterations));

    if (p.k > p.m)
        throw OrderingViolation(fmt::format("k <= m violated: k={} m={}", p.k, p.m));
    if (p.m > p.n)
        throw OrderingViolation(fmt::format("m <= n violated: m={} n={}", p.m, p.n));
    if (p.b > p.a)
        throw OrderingViolation(fmt::format("b <= a violated: b={} a={}", p.b, p.a));
    if (p.a > p.n)
        throw OrderingViolation(fmt::format("a <= n violated: a={} n={}", p.a, p.n));

    CheckedParams checked{p, false, {}};
    const std::int64_t capacity = (p.n + p.k - 1) / p.k;
    if (p.b > capacity) {
        checked.exceeds_topic_capacity = true;
        checked.warnings.push_back(fmt::format(
            "b={} exceeds ceil(n/k)={}: endorsements will saturate", p.b, capacity));
    }
    return checked;
}

std::string_view to_string(ValueDist d)
{
    return d == ValueDist::uniform01 ? "uniform01" : "one";
}

std::string_view to_string(InitKind d)
{
    switch (d) {
    case InitKind::uniform: return "uniform";
    case InitKind::poisson: return "poisson";
    case InitKind::normal: return "normal";
    }
    return "?";
}

std::string_view to_string(Scope s)
{
    return s == Scope::topic_relevant ? "topic" : "global";
}

std::string_view to_string(UpdateMode u)
{
    return u == UpdateMode::synchronous ? "synchronous" : "sequential";
}

std::string_view to_string(TieBreak t)
{
    return t == TieBreak::index ? "index" : "random";
}

std::string format_init_dist(const InitDist& d)
{
    switch (d.kind) {
    case InitKind::uniform: return fmt::format("uniform:{}", d.u_max);
    case InitKind::poisson: return fmt::format("poisson:{}", d.lambda);
    case InitKind::normal: return fmt::format("normal:{},{}", d.mu, d.sigma);
    }
    return {};
}

InitDist parse_init_dist(std::string_view text)
{
    InitDist d;
    std::string_view name = text;
    std::string_view args;
    if (auto colon = text.find(':'); colon != std::string_view::npos) {
        name = text.substr(0, colon);
        args = text.substr(colon + 1);
    }
    if (name == "uniform") {
        d.kind = InitKind::uniform;
        if (!args.empty()) d.u_max = parse_double("init-dist", args);
    }
    else if (name == "poisson") {
        d.kind = InitKind::poisson;
        if (!args.empty()) d.lambda = parse_double("init-dist", args);
    }
    else if (name == "normal") {
        d.kind = InitKind::normal;
        if (!args.empty()) {
            auto comma = args.find(',');
            if (comma == std::string_view::npos)
                throw UsageError(fmt::format("normal init-dist needs 'mu,sigma': '{}'", text));
            d.mu = parse_double("init-dist", args.substr(0, comma));
            d.sigma = parse_double("init-dist", args.substr(comma + 1));
        }
    }
    else {
        throw UsageError(fmt::format("unknown init-dist '{}'", text));
    }
    return d;
}

const std::vector<std::string>& param_names()
{
    static const std::vector<std::string> names = {
        "k", "m", "n", "a", "b", "q_dist", "init_dist", "seed",
        "max_iterations", "scope", "update", "tie_break"};
    return names;
}

void set_param(ModelParams& p, std::string_view name, std::string_view value)
{
    if (name == "k") p.k = parse_int(name, value);
    else if (name == "m") p.m = parse_int(name, value);
    else if (name == "n") p.n = parse_int(name, value);
    else if (name == "a") p.a = parse_int(name, value);
    else if (name == "b") p.b = parse_int(name, value);
    else if (name == "seed") p.seed = parse_uint(name, value);
    else if (name == "max_iterations") p.max_iterations = parse_int(name, value);
    else if (name == "init_dist") p.init_dist = parse_init_dist(value);
    else if (name == "q_dist") {
        if (value == "uniform01") p.q_dist = ValueDist::uniform01;
        else if (value == "one") p.q_dist = ValueDist::one;
        else throw UsageError(fmt::format("unknown q_dist '{}'", value));
    }
    else if (name == "scope") {
        if (value == "topic") p.scope = Scope::topic_relevant;
        else if (value == "global") p.scope = Scope::global;
        else throw UsageError(fmt::format("unknown scope '{}'", value));
    }
    else if (name == "update") {
        if (value == "synchronous") p.update = UpdateMode::synchronous;
        else if (value == "sequential") p.update = UpdateMode::sequential;
        else throw UsageError(fmt::format("unknown update mode '{}'", value));
    }
    else if (name == "tie_break") {
        if (value == "index") p.tie_break = TieBreak::index;
        else if (value == "random") p.tie_break = TieBreak::seeded_random;
        else throw UsageError(fmt::format("unknown tie_break '{}'", value));
    }
    else {
        throw UsageError(fmt::format("unknown parameter '{}'", name));
    }
}

std::string get_param(const ModelParams& p, std::string_view name)
{
    if (name == "k") return std::to_string(p.k);
    if (name == "m") return std::to_string(p.m);
    if (name == "n") return std::to_string(p.n);
    if (name == "a") return std::to_string(p.a);
    if (name == "b") return std::to_string(p.b);
    if (name == "seed") return std::to_string(p.seed);
    if (name == "max_iterations") return std::to_string(p.max_iterations);
    if (name == "init_dist") return format_init_dist(p.init_dist);
    if (name == "q_dist") return std::string(to_string(p.q_dist));
    if (name == "scope") return std::string(to_string(p.scope));
    if (name == "update") return std::string(to_string(p.update));
    if (name == "tie_break") return std::string(to_string(p.tie_break));
    throw UsageError(fmt::format("unknown parameter '{}'", name));
}

} // namespace kkps
