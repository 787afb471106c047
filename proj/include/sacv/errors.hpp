#pragma once

#include <stdexcept>
#include <string>

namespace sacv {

/// Invalid argument to an operation (bad fraction, unknown stratum, ...).
class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed input file (CSV row, config document, model document).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Failure while fitting a model (single-class data, diverging loss, ...).
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem-level failure (unreadable input, unwritable output directory).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace sacv
