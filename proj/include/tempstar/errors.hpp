#pragma once

#include <stdexcept>
#include <string>

namespace tempstar {

// Bad input: malformed files, inconsistent shapes, out-of-range parameters.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A computation could not produce a finite answer.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tempstar
