#pragma once

#include <stdexcept>
#include <string>

namespace rsc {

// Operand shapes disagree, or an index/argument is outside its valid range.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Bad user configuration (CLI flags, config files, dataset assembly).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed or unreadable/unwritable files.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite values or degenerate numerical input.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rsc
