#pragma once

#include <stdexcept>
#include <string>

namespace kkps {

//! Base class of every error raised by the simulator.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

//! A parameter count that must be positive is not.
class NonPositive : public Error
{
public:
    using Error::Error;
};

//! One of the orderings k <= m <= n or b <= a <= n is violated.
class OrderingViolation : public Error
{
public:
    using Error::Error;
};

class InvalidDistParams : public Error
{
public:
    using Error::Error;
};

class IndexOutOfRange : public Error
{
public:
    using Error::Error;
};

//! Too few positive observations to fit a tail.
class InsufficientData : public Error
{
public:
    using Error::Error;
};

//! All positive observations share one value.
class DegenerateDistribution : public Error
{
public:
    using Error::Error;
};

class ZeroTotalUtility : public Error
{
public:
    using Error::Error;
};

class InsufficientCells : public Error
{
public:
    using Error::Error;
};

class UnknownPreset : public Error
{
public:
    using Error::Error;
};

class UsageError : public Error
{
public:
    using Error::Error;
};

//! Malformed configuration document. Carries line/column when known.
class ParseError : public Error
{
public:
    using Error::Error;
};

class UnknownKey : public Error
{
public:
    using Error::Error;
};

//! An input CSV does not match the documented schema.
class SchemaMismatch : public Error
{
public:
    using Error::Error;
};

} // namespace kkps
