#include "kkps/engine.hpp"

#include "kkps/analysis.hpp"
#include "kkps/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

namespace kkps {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

WwwState::WwwState(std::size_t users, std::size_t documents, std::vector<double> pseudo_scores)
    : by_user_(users), indegree_(documents, 0), pseudo_scores_(std::move(pseudo_scores))
{
    if (pseudo_scores_.size() != documents)
        throw Error(fmt::format("{} pseudo scores for {} documents", pseudo_scores_.size(), documents));
}

bool WwwState::has_link(std::size_t user, std::size_t doc) const
{
    const auto& row = by_user_[user];
    return std::binary_search(row.begin(), row.end(), static_cast<std::uint32_t>(doc));
}

bool WwwState::add_link(std::size_t user, std::size_t doc)
{
    auto& row = by_user_[user];
    const auto d = static_cast<std::uint32_t>(doc);
    auto pos = std::lower_bound(row.begin(), row.end(), d);
    if (pos != row.end() && *pos == d) return false;
    row.insert(pos, d);
    ++indegree_[doc];
    ++link_count_;
    return true;
}

std::vector<Link> WwwState::links() const
{
    std::vector<Link> out;
    out.reserve(link_count_);
    for (std::size_t i = 0; i < by_user_.size(); ++i) {
        for (std::uint32_t d : by_user_[i])
            out.emplace_back(static_cast<std::uint32_t>(i), d);
    }
    return out;
}

TieOrder::TieOrder(TieBreak mode, std::uint64_t seed, std::int64_t iteration)
    : mode_(mode),
      salt_(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(iteration) + 0x5bd1e995ULL)))
{ }

std::uint64_t TieOrder::key(std::uint32_t doc) const
{
    if (mode_ == TieBreak::index) return doc;
    return splitmix64(salt_ ^ doc);
}

std::vector<double> initial_scores(const ModelParams& p, Rng& rng)
{
    const InitDist& dist = p.init_dist;
    const auto n = static_cast<std::size_t>(p.n);
    std::vector<double> scores(n);
    switch (dist.kind) {
    case InitKind::uniform: {
        if (!(dist.u_max > 0.0))
            throw InvalidDistParams(fmt::format("uniform u_max must be positive, got {}", dist.u_max));
        std::uniform_real_distribution<double> draw(0.0, dist.u_max);
        for (double& s : scores) s = draw(rng);
        break;
    }
    case InitKind::poisson: {
        if (!(dist.lambda > 0.0))
            throw InvalidDistParams(fmt::format("poisson lambda must be positive, got {}", dist.lambda));
        std::poisson_distribution<std::int64_t> draw(dist.lambda);
        for (double& s : scores) s = static_cast<double>(draw(rng));
        break;
    }
    case InitKind::normal: {
        if (!(dist.sigma > 0.0))
            throw InvalidDistParams(fmt::format("normal sigma must be positive, got {}", dist.sigma));
        std::normal_distribution<double> draw(dist.mu, dist.sigma);
        for (double& s : scores) {
            // rejection sampling of the part above zero; gives up far in the tail
            s = 0.0;
            for (int attempt = 0; attempt < 64; ++attempt) {
                double v = draw(rng);
                if (v >= 0.0) {
                    s = v;
                    break;
                }
            }
        }
        break;
    }
    }
    return scores;
}

std::vector<std::uint32_t> recommend(const WwwState& state, const TopicWorld& world,
                                     std::size_t user, const ModelParams& p)
{
    std::vector<std::uint32_t> candidates;
    if (p.scope == Scope::topic_relevant) {
        auto rel = world.useful_documents(user);
        candidates.assign(rel.begin(), rel.end());
    }
    else {
        candidates.resize(world.documents());
        std::iota(candidates.begin(), candidates.end(), 0u);
    }

    const TieOrder ties(p.tie_break, p.seed, state.iteration);
    const bool pseudo = state.iteration == 0;
    const auto& indegree = state.indegree();
    const auto& scores = state.pseudo_scores();
    auto better = [&](std::uint32_t x, std::uint32_t y) {
        double sx = pseudo ? scores[x] : static_cast<double>(indegree[x]);
        double sy = pseudo ? scores[y] : static_cast<double>(indegree[y]);
        if (sx != sy) return sx > sy;
        return ties.key(x) < ties.key(y);
    };

    const auto take = std::min(candidates.size(), static_cast<std::size_t>(p.a));
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                      candidates.end(), better);
    candidates.resize(take);
    return candidates;
}

std::vector<std::uint32_t> endorse(const std::vector<std::uint32_t>& recs, const TopicWorld& world,
                                   std::size_t user, std::int64_t b, const TieOrder& ties)
{
    std::vector<std::uint32_t> out;
    out.reserve(recs.size());
    for (std::uint32_t d : recs) {
        if (world.utility(user, d) > 0.0) out.push_back(d);
    }
    std::sort(out.begin(), out.end(), [&](std::uint32_t x, std::uint32_t y) {
        double ux = world.utility(user, x);
        double uy = world.utility(user, y);
        if (ux != uy) return ux > uy;
        return ties.key(x) < ties.key(y);
    });
    if (b >= 0 && out.size() > static_cast<std::size_t>(b)) out.resize(static_cast<std::size_t>(b));
    return out;
}

Engine::Engine(const TopicWorld& world, CheckedParams params)
    : world_(&world), params_(std::move(params)),
      total_utility_(max_total_utility(world, params_.params.b))
{
    const ModelParams& p = params_.params;
    if (world.users() != static_cast<std::size_t>(p.m) ||
        world.documents() != static_cast<std::size_t>(p.n) ||
        world.topics() != static_cast<std::size_t>(p.k))
        throw Error(fmt::format("world shape {}x{}x{} does not match parameters k={} m={} n={}",
                                world.topics(), world.users(), world.documents(), p.k, p.m, p.n));
}

WwwState Engine::initial_state() const
{
    Rng rng = make_rng(params_.params.seed, Stream::initial_scores);
    return WwwState(world_->users(), world_->documents(), initial_scores(params_.params, rng));
}

StepResult Engine::step(const WwwState& state) const
{
    const ModelParams& p = params_.params;
    const TieOrder ties(p.tie_break, p.seed, state.iteration);
    const bool sequential = p.update == UpdateMode::sequential;

    StepResult result{state, {}};
    WwwState& next = result.state;
    IterationRecord& rec = result.record;

    std::vector<std::pair<std::uint32_t, std::uint32_t>> pending;
    for (std::size_t i = 0; i < world_->users(); ++i) {
        // synchronous: rank with the frozen start-of-iteration state
        const WwwState& view = sequential ? next : state;
        auto recs = recommend(view, *world_, i, p);
        auto chosen = endorse(recs, *world_, i, p.b, ties);

        double user_utility = 0.0;
        for (std::uint32_t d : chosen) {
            user_utility += world_->utility(i, d);
            if (sequential) {
                if (next.add_link(i, d)) ++rec.new_links;
            }
            else {
                pending.emplace_back(static_cast<std::uint32_t>(i), d);
            }
        }
        rec.attained_utility += user_utility;
        rec.endorsements += static_cast<std::int64_t>(chosen.size());
    }
    for (auto [i, d] : pending) {
        if (next.add_link(i, d)) ++rec.new_links;
    }

    next.iteration = state.iteration + 1;
    rec.iteration = next.iteration;
    rec.cumulative_links = static_cast<std::int64_t>(next.link_count());
    rec.efficiency = efficiency(rec, total_utility_);
    return result;
}

RunResult Engine::run(WwwState state) const
{
    const ModelParams& p = params_.params;
    RunResult result{std::move(state), {}};
    Trajectory& traj = result.trajectory;
    bool distinct = true;
    const std::int64_t per_iteration = p.m * p.b;

    while (result.state.iteration < p.max_iterations) {
        auto [next, rec] = step(result.state);
        result.state = std::move(next);
        traj.records.push_back(rec);
        if (distinct && rec.cumulative_links == rec.iteration * per_iteration)
            traj.distinct_phase = rec.iteration;
        else
            distinct = false;
        if (rec.new_links == 0) {
            traj.converged = true;
            break;
        }
    }
    return result;
}

} // namespace kkps
