#pragma once

#include <stdexcept>
#include <string>

namespace skewnet
{
    // Invalid argument or violated precondition (unknown ids, bad rates, malformed graphs).
    class DomainError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    // A configured resource cap was exceeded (state space, subset enumeration, expansion size).
    class SizeError : public std::length_error
    {
    public:
        using std::length_error::length_error;
    };

    // Iterative solve failed to reach its residual target.
    class NumericError : public std::runtime_error
    {
    public:
        NumericError(const std::string &what, double residual)
            : std::runtime_error(what), residual_(residual) {}

        double residual() const noexcept { return residual_; }

    private:
        double residual_;
    };

    // The structure is valid but outside what an engine supports (e.g. shared clocks in exact solves).
    class UnsupportedStructure : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    // A coupling or simulation invariant was breached. Signals a bug, not bad input.
    class InvariantBreach : public std::logic_error
    {
    public:
        using std::logic_error::logic_error;
    };
}
