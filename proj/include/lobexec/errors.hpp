#pragma once

#include <stdexcept>
#include <string>

namespace lobexec {

/// Invalid parameters or violated preconditions supplied by the caller.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A simulator state whose cached quotes disagree with its traders.
class CorruptedState : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A large order asked for more traders than the book's tail holds.
class TailExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Root bracketing failed: no sign change of the strategy equation.
class NoRoot : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A model hypothesis checked by validate_assumptions does not hold.
class AssumptionViolated : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// log argument of the resilience formula is non-positive.
class NonPositiveLogArgument : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed input file (config, shape, curve).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lobexec
