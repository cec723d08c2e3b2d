#pragma once

#include "kkps/params.hpp"
#include "kkps/world.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace kkps {

using Link = std::pair<std::uint32_t, std::uint32_t>; //!< (user, document)

//! The www state: accumulated distinct (user, document) endorsements and the
//! resulting document in-degrees.
class WwwState
{
public:
    WwwState() = default;
    WwwState(std::size_t users, std::size_t documents, std::vector<double> pseudo_scores);

    std::size_t users() const { return by_user_.size(); }
    std::size_t documents() const { return indegree_.size(); }

    //! Number of completed iterations.
    std::int64_t iteration = 0;

    //! Ranking scores used only while iteration == 0.
    const std::vector<double>& pseudo_scores() const { return pseudo_scores_; }

    const std::vector<std::int64_t>& indegree() const { return indegree_; }
    std::size_t link_count() const { return link_count_; }

    bool has_link(std::size_t user, std::size_t doc) const;

    //! Adds (user, doc); returns false when the link already existed.
    bool add_link(std::size_t user, std::size_t doc);

    //! Documents endorsed by one user, ascending.
    const std::vector<std::uint32_t>& links_of(std::size_t user) const { return by_user_[user]; }

    //! All links ordered by (user, document).
    std::vector<Link> links() const;

    bool operator==(const WwwState&) const = default;

private:
    std::vector<std::vector<std::uint32_t>> by_user_;
    std::vector<std::int64_t> indegree_;
    std::vector<double> pseudo_scores_;
    std::size_t link_count_ = 0;
};

struct IterationRecord {
    std::int64_t iteration = 0;        //!< 1-based index of the iteration
    std::int64_t new_links = 0;        //!< distinct links created
    std::int64_t cumulative_links = 0; //!< |L| after the iteration
    std::int64_t endorsements = 0;     //!< endorsements made, repeats included
    double attained_utility = 0.0;     //!< sum of U over all endorsements made
    double efficiency = 0.0;           //!< attained_utility / max total utility

    bool operator==(const IterationRecord&) const = default;
};

struct Trajectory {
    std::vector<IterationRecord> records;
    bool converged = false; //!< stopped because an iteration added no link
    //! Number of leading iterations in which every one of the m*b
    //! endorsements created a new link, i.e. cumulative links == r*m*b.
    std::int64_t distinct_phase = 0;

    bool operator==(const Trajectory&) const = default;
};

//! Orders documents for tie-breaking: ascending index, or a hashed key that
//! is a pure function of (seed, iteration, document).
class TieOrder
{
public:
    TieOrder() = default;
    TieOrder(TieBreak mode, std::uint64_t seed, std::int64_t iteration);

    std::uint64_t key(std::uint32_t doc) const;

private:
    TieBreak mode_ = TieBreak::index;
    std::uint64_t salt_ = 0;
};

//! i.i.d. pseudo in-degrees for iteration 0. Throws InvalidDistParams for a
//! non-positive u_max, lambda or sigma.
std::vector<double> initial_scores(const ModelParams& p, Rng& rng);

//! Top min(a, |candidates|) candidates of `user` by descending score: the
//! pseudo score at iteration 0, the in-degree afterwards.
std::vector<std::uint32_t> recommend(const WwwState& state, const TopicWorld& world,
                                     std::size_t user, const ModelParams& p);

//! Recommended documents with positive utility, by descending utility,
//! truncated to b.
std::vector<std::uint32_t> endorse(const std::vector<std::uint32_t>& recs, const TopicWorld& world,
                                   std::size_t user, std::int64_t b, const TieOrder& ties = {});

struct StepResult {
    WwwState state;
    IterationRecord record;
};

struct RunResult {
    WwwState state;
    Trajectory trajectory;
};

//! Runs the recommend/endorse dynamics of one world.
class Engine
{
public:
    Engine(const TopicWorld& world, CheckedParams params);

    const TopicWorld& world() const { return *world_; }
    const ModelParams& params() const { return params_.params; }

    //! Maximum utility users can attain in one iteration.
    double total_utility() const { return total_utility_; }

    //! Empty www state with pseudo scores drawn from the seed's stream.
    WwwState initial_state() const;

    StepResult step(const WwwState& state) const;

    //! Steps until an iteration adds no link or max_iterations is reached.
    RunResult run(WwwState state) const;
    RunResult run() const { return run(initial_state()); }

private:
    const TopicWorld* world_;
    CheckedParams params_;
    double total_utility_;
};

} // namespace kkps
