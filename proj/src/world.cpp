#include "kkps/world.hpp"

#include "kkps/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

namespace kkps {

std::size_t Matrix::count_nonzero() const
{
    return static_cast<std::size_t>(
        std::count_if(data_.begin(), data_.end(), [](double v) { return v != 0.0; }));
}

TopicWorld::TopicWorld(Matrix documents, Matrix users)
    : documents_(std::move(documents)), users_(std::move(users))
{
    const std::size_t k = documents_.rows();
    const std::size_t n = documents_.cols();
    const std::size_t m = users_.rows();
    if (users_.cols() != k)
        throw Error(fmt::format("user matrix has {} columns, expected k={}", users_.cols(), k));

    relevant_.resize(k);
    for (std::size_t t = 0; t < k; ++t) {
        for (std::size_t d = 0; d < n; ++d) {
            double v = documents_(t, d);
            if (v < 0.0)
                throw Error(fmt::format("negative document entry at ({}, {})", t, d));
            if (v > 0.0) relevant_[t].push_back(static_cast<std::uint32_t>(d));
        }
    }

    topic_of_.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t found = 0;
        for (std::size_t t = 0; t < k; ++t) {
            double v = users_(i, t);
            if (v < 0.0)
                throw Error(fmt::format("negative user entry at ({}, {})", i, t));
            if (v > 0.0) {
                topic_of_[i] = static_cast<std::uint32_t>(t);
                ++found;
            }
        }
        if (found != 1)
            throw Error(fmt::format("user {} has {} topics, expected exactly one", i, found));
    }

    utility_ = Matrix(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t t = topic_of_[i];
        const double weight = users_(i, t);
        for (std::uint32_t d : relevant_[t])
            utility_(i, d) = weight * documents_(t, d);
    }
}

double draw_value(ValueDist dist, Rng& rng)
{
    if (dist == ValueDist::one) return 1.0;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return 1.0 - unit(rng);
}

TopicWorld generate_world(const CheckedParams& checked, Rng& rng)
{
    const ModelParams& p = checked.params;
    const auto k = static_cast<std::size_t>(p.k);
    const auto m = static_cast<std::size_t>(p.m);
    const auto n = static_cast<std::size_t>(p.n);
    const auto nu = static_cast<std::size_t>(docs_per_topic(p));

    Matrix documents(k, n);
    std::vector<std::uint32_t> pool(n);
    for (std::size_t t = 0; t < k; ++t) {
        std::iota(pool.begin(), pool.end(), 0u);
        // partial Fisher-Yates: the first nu entries are a uniform nu-subset
        for (std::size_t j = 0; j < nu; ++j) {
            std::uniform_int_distribution<std::size_t> pick(j, n - 1);
            std::swap(pool[j], pool[pick(rng)]);
        }
        std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(nu));
        for (std::size_t j = 0; j < nu; ++j)
            documents(t, pool[j]) = draw_value(p.q_dist, rng);
    }

    std::vector<std::uint32_t> topic(m);
    for (std::size_t i = 0; i < m; ++i) topic[i] = static_cast<std::uint32_t>(i % k);
    std::shuffle(topic.begin(), topic.end(), rng);

    Matrix users(m, k);
    for (std::size_t i = 0; i < m; ++i)
        users(i, topic[i]) = draw_value(p.q_dist, rng);

    return TopicWorld(std::move(documents), std::move(users));
}

TopicWorld generate_world(const CheckedParams& p)
{
    Rng rng = make_rng(p.params.seed, Stream::world);
    return generate_world(p, rng);
}

double utility_of(const TopicWorld& world, std::int64_t user, std::int64_t doc)
{
    if (user < 0 || static_cast<std::size_t>(user) >= world.users())
        throw IndexOutOfRange(fmt::format("user index {} outside [0, {})", user, world.users()));
    if (doc < 0 || static_cast<std::size_t>(doc) >= world.documents())
        throw IndexOutOfRange(fmt::format("document index {} outside [0, {})", doc, world.documents()));
    return world.utility(static_cast<std::size_t>(user), static_cast<std::size_t>(doc));
}

Rng make_rng(std::uint64_t seed, Stream stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return Rng(seq);
}

} // namespace kkps
