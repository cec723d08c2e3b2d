#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kkps {

//! Distribution of the nonzero entries of the document and user matrices.
enum class ValueDist {
    uniform01, //!< uniform on (0, 1]
    one        //!< every nonzero entry equals 1
};

enum class InitKind { uniform, poisson, normal };

//! Distribution of the pseudo in-degree used to rank documents before any
//! endorsement exists.
struct InitDist {
    InitKind kind = InitKind::uniform;
    double u_max = 1.0;  //!< uniform support is [0, u_max]
    double lambda = 5.0; //!< poisson rate
    double mu = 5.0;     //!< normal mean
    double sigma = 2.0;  //!< normal standard deviation

    bool operator==(const InitDist&) const = default;
};

//! Which documents a user may be recommended.
enum class Scope { topic_relevant, global };

//! How in-degree updates become visible to later users of the same iteration.
enum class UpdateMode {
    synchronous, //!< everybody ranks with the in-degree frozen at iteration start
    sequential   //!< each user sees the links added by lower-indexed users
};

enum class TieBreak { index, seeded_random };

struct ModelParams {
    std::int64_t k = 80;   //!< topics
    std::int64_t m = 750;  //!< user-queries
    std::int64_t n = 1500; //!< documents
    std::int64_t a = 1;    //!< recommendations per user and iteration
    std::int64_t b = 1;    //!< endorsements per user and iteration
    ValueDist q_dist = ValueDist::uniform01;
    InitDist init_dist;
    std::uint64_t seed = 1;
    std::int64_t max_iterations = 50;
    Scope scope = Scope::topic_relevant;
    UpdateMode update = UpdateMode::synchronous;
    TieBreak tie_break = TieBreak::index;

    bool operator==(const ModelParams&) const = default;
};

//! Result of validate_params(): the unchanged parameters plus warnings that
//! do not prevent a run.
struct CheckedParams {
    ModelParams params;
    //! b exceeds ceil(n/k): users of a topic cannot all receive b distinct
    //! new relevant documents, so endorsement saturates.
    bool exceeds_topic_capacity = false;
    std::vector<std::string> warnings;
};

//! Checks positivity, k <= m <= n and b <= a <= n. Throws NonPositive or
//! OrderingViolation; flags b > ceil(n/k) as a warning only.
CheckedParams validate_params(const ModelParams& p);

//! Number of relevant documents per topic, round(n/k), halves rounded up.
std::int64_t docs_per_topic(const ModelParams& p);

std::string_view to_string(ValueDist d);
std::string_view to_string(InitKind d);
std::string_view to_string(Scope s);
std::string_view to_string(UpdateMode u);
std::string_view to_string(TieBreak t);

//! Compact textual form of an init distribution, e.g. "poisson:5" or
//! "normal:5,2". parse_init_dist() accepts the same syntax and plain names.
std::string format_init_dist(const InitDist& d);
InitDist parse_init_dist(std::string_view text);

//! Names accepted by set_param(), in canonical order.
const std::vector<std::string>& param_names();

//! Assigns one parameter from its textual form. Throws UsageError for an
//! unknown name or a malformed value.
void set_param(ModelParams& p, std::string_view name, std::string_view value);

//! Textual form of one parameter, the inverse of set_param().
std::string get_param(const ModelParams& p, std::string_view name);

} // namespace kkps
