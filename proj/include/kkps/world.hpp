#pragma once

#include "kkps/params.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace kkps {

using Rng = std::mt19937_64;

//! Dense row-major matrix of nonnegative reals.
class Matrix
{
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) { }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const
    {
        return {data_.data() + r * cols_, cols_};
    }

    std::size_t count_nonzero() const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

//! The static part of the model: which documents matter for which topic,
//! which topic each user-query asks about, and the utility this induces.
//!
//! Every user has exactly one topic, so U(i, d) = R(i, topic_of(i)) *
//! D(topic_of(i), d).
class TopicWorld
{
public:
    //! Builds a world from explicit matrices. `documents` is k x n, `users` is
    //! m x k with exactly one positive entry per row. Throws Error otherwise.
    TopicWorld(Matrix documents, Matrix users);

    std::size_t topics() const { return documents_.rows(); }
    std::size_t users() const { return users_.rows(); }
    std::size_t documents() const { return documents_.cols(); }

    const Matrix& document_matrix() const { return documents_; }
    const Matrix& user_matrix() const { return users_; }
    const Matrix& utility_matrix() const { return utility_; }

    std::size_t topic_of(std::size_t user) const { return topic_of_[user]; }

    //! Sorted indices of the documents with D(t, d) > 0.
    std::span<const std::uint32_t> relevant_documents(std::size_t topic) const
    {
        return relevant_[topic];
    }

    //! Sorted indices of the documents with U(i, d) > 0.
    std::span<const std::uint32_t> useful_documents(std::size_t user) const
    {
        return relevant_[topic_of_[user]];
    }

    double utility(std::size_t user, std::size_t doc) const { return utility_(user, doc); }

    bool operator==(const TopicWorld&) const = default;

private:
    Matrix documents_;
    Matrix users_;
    Matrix utility_;
    std::vector<std::uint32_t> topic_of_;
    std::vector<std::vector<std::uint32_t>> relevant_;
};

//! Draws one nonzero matrix entry.
double draw_value(ValueDist dist, Rng& rng);

//! Generates a world: each topic gets a uniformly random round(n/k)-subset of
//! documents, users are spread over topics by shuffled round-robin, and all
//! nonzero values are drawn from p.q_dist.
TopicWorld generate_world(const CheckedParams& p, Rng& rng);

//! Same, with the world stream derived from p.params.seed.
TopicWorld generate_world(const CheckedParams& p);

//! U(i, d) with bounds checking; throws IndexOutOfRange.
double utility_of(const TopicWorld& world, std::int64_t user, std::int64_t doc);

//! Independent PRNG streams derived from one run seed.
enum class Stream : std::uint64_t { world = 1, initial_scores = 2, tie_break = 3 };
Rng make_rng(std::uint64_t seed, Stream stream);

} // namespace kkps
