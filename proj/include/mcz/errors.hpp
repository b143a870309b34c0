#pragma once

#include <stdexcept>
#include <string>

namespace mcz {

/// Invalid run configuration or malformed input (CLI exit code 1).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// A kernel evaluator returned a non-finite value at an admissible point,
/// or a computation could not be carried out on the given data (exit code 2).
class evaluator_error : public std::runtime_error {
public:
    explicit evaluator_error(const std::string& what) : std::runtime_error(what) {}
};

/// A run would exceed the configured quadrature tuple budget (exit code 4).
class budget_error : public std::runtime_error {
public:
    explicit budget_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace mcz
