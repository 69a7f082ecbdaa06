#ifndef SPATEC_ERROR_HPP
#define SPATEC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace spatec {

// Base class for all library failures.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// File-level input problems: malformed tokens, missing header columns, empty files.
class ParseError : public Error {
public:
    using Error::Error;
};

// A referenced column does not exist or cannot be used.
class ColumnError : public Error {
public:
    using Error::Error;
};

// Math-domain violation: log of a non-positive value, zero variance, ...
class DomainError : public Error {
public:
    using Error::Error;
};

// Design matrix rank deficiency; the message names the offending columns.
class CollinearityError : public Error {
public:
    using Error::Error;
};

// Estimation is infeasible as specified or failed to converge.
class EstimationError : public Error {
public:
    using Error::Error;
};

// Invalid model or pipeline specification.
class SpecError : public Error {
public:
    using Error::Error;
};

}  // namespace spatec

#endif
