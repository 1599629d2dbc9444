#pragma once

#include <stdexcept>
#include <string>

namespace va {

// Base for every error raised by the library. The CLI maps subclasses onto
// its exit-code contract (see cli.hpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text: bad delimiters, unparseable numbers, unknown grade
// symbols, malformed constraint lines.
class ParseError : public Error {
public:
    using Error::Error;
};

// Well-formed input that breaks a domain invariant (probability out of
// [0,1], duplicate names, CSMF off the simplex, bad config values).
class InvariantError : public Error {
public:
    using Error::Error;
};

class UnknownLabelError : public ParseError {
public:
    explicit UnknownLabelError(const std::string& label)
        : ParseError("unknown grade label '" + label + "'"), label_(label) {}
    UnknownLabelError(const std::string& label, const std::string& where)
        : ParseError("unknown grade label '" + label + "' (" + where + ")"), label_(label) {}
    const std::string& label() const noexcept { return label_; }

private:
    std::string label_;
};

class UnknownSymptomError : public InvariantError {
public:
    using InvariantError::InvariantError;
};

// Shapes or name sets of paired inputs disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Numerical failure at run time: a death incompatible with every cause,
// zero total likelihood, non-finite values.
class NumericError : public Error {
public:
    using Error::Error;
};

class UndefinedDeathError : public NumericError {
public:
    using NumericError::NumericError;
};

class InstanceTooLargeError : public Error {
public:
    using Error::Error;
};

class EmptyChainError : public Error {
public:
    using Error::Error;
};

}  // namespace va
